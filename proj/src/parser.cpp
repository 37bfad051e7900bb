#include "pel/parser.hpp"

#include "pel/error.hpp"

namespace pel {

namespace {

bool is_key_atom(const ExprPtr& e) {
  return e->kind == ExprKind::literal && e->value.is_key();
}

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, SourcePtr source)
      : toks_(tokens), src_(std::move(source)) {}

  std::vector<ExprPtr> program() {
    std::vector<ExprPtr> out;
    while (!at_end()) out.push_back(expression(true));
    return fold_pairs(std::move(out), true);
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  Span end_span() const {
    return toks_.empty() ? Span{} : toks_.back().span;
  }

  [[noreturn]] void fail(std::string message, const Span& span) const {
    throw PelException(ErrorKind::ParseError, std::move(message), span, src_);
  }

  ExprPtr expression(bool allow_pairs) {
    ExprPtr first = primary(allow_pairs);
    if (at_end() || peek().kind != TokenKind::pipe) return first;
    std::vector<ExprPtr> stages{first};
    std::vector<Span> pipes;
    while (!at_end() && peek().kind == TokenKind::pipe) {
      const Token& p = take();
      pipes.push_back(p.span);
      if (at_end()) fail("pipe is missing its right-hand side", p.span);
      auto next = peek().kind;
      if (next == TokenKind::rparen || next == TokenKind::rbracket ||
          next == TokenKind::pipe) {
        fail("pipe is missing its right-hand side", p.span);
      }
      stages.push_back(primary(allow_pairs));
    }
    Span span = Span::cover(stages.front()->span, stages.back()->span);
    return Expr::pipe(std::move(stages), std::move(pipes), span, src_);
  }

  ExprPtr primary(bool allow_pairs) {
    const Token& t = take();
    switch (t.kind) {
      case TokenKind::lparen: return call(t, allow_pairs);
      case TokenKind::lbracket: return literal_list(t, allow_pairs);
      case TokenKind::quote: {
        if (at_end()) fail("quote at end of input", t.span);
        auto next = peek().kind;
        if (next == TokenKind::rparen || next == TokenKind::rbracket ||
            next == TokenKind::pipe) {
          fail("quote must be followed by an expression", t.span);
        }
        ExprPtr inner = primary(false);
        return Expr::quoted(inner, Span::cover(t.span, inner->span), src_);
      }
      case TokenKind::rparen:
      case TokenKind::rbracket:
        fail(std::string("unbalanced delimiter: stray '") + t.text + "'", t.span);
      case TokenKind::pipe:
        fail("pipe is missing its left-hand side", t.span);
      case TokenKind::boolean:
        return Expr::literal(Value::boolean(t.text == "#t"), t.span, src_);
      case TokenKind::nil:
        return Expr::literal(Value::nil(), t.span, src_);
      case TokenKind::string:
        return Expr::literal(Value::string(t.text.substr(1, t.text.size() - 2)), t.span, src_);
      case TokenKind::key:
        return Expr::literal(Value::key(t.text.substr(1)), t.span, src_);
      case TokenKind::number:
        return Expr::literal(Value::number(Number::parse(t.text)), t.span, src_);
      case TokenKind::symbol:
        return Expr::symbol(t.text, t.span, src_);
    }
    fail("unexpected token", t.span);
  }

  std::vector<ExprPtr> elements_until(TokenKind close, const Token& open, bool allow_pairs,
                                      Span& close_span) {
    std::vector<ExprPtr> elems;
    while (true) {
      if (at_end()) {
        fail(std::string("unbalanced delimiter: '") + open.text + "' opened at line " +
                 std::to_string(open.span.line) + ", col " + std::to_string(open.span.col) +
                 " is never closed",
             end_span());
      }
      if (peek().kind == close) {
        close_span = take().span;
        return elems;
      }
      auto k = peek().kind;
      if (k == TokenKind::rparen || k == TokenKind::rbracket) {
        fail(std::string("unbalanced delimiter: '") + peek().text + "' does not close '" +
                 open.text + "'",
             peek().span);
      }
      elems.push_back(expression(allow_pairs));
    }
  }

  ExprPtr call(const Token& open, bool allow_pairs) {
    Span close;
    auto elems = elements_until(TokenKind::rparen, open, allow_pairs, close);
    Span span = Span::cover(open.span, close);
    if (elems.empty()) return Expr::literal(Value::nil(), span, src_);
    ExprPtr head = elems.front();
    std::vector<ExprPtr> args(elems.begin() + 1, elems.end());
    args = fold_pairs(std::move(args), allow_pairs);
    if (allow_pairs && (head->is_symbol("do") || head->is_symbol("do/async"))) {
      args = normalize_do(std::move(args), span);
    }
    return Expr::call(head, std::move(args), span, src_);
  }

  std::vector<ExprPtr> normalize_do(std::vector<ExprPtr> args, const Span& call_span) {
    if (args.size() == 1 && args[0]->kind == ExprKind::literal_list) return args;
    for (const auto& a : args) {
      if (a->kind == ExprKind::pair) return args;
    }
    Span span = args.empty() ? call_span : Span::cover(args.front()->span, args.back()->span);
    return {Expr::literal_list(std::move(args), span, src_)};
  }

  ExprPtr literal_list(const Token& open, bool allow_pairs) {
    Span close;
    auto elems = elements_until(TokenKind::rbracket, open, allow_pairs, close);
    return Expr::literal_list(fold_pairs(std::move(elems), allow_pairs),
                              Span::cover(open.span, close), src_);
  }

  const std::vector<Token>& toks_;
  SourcePtr src_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ExprPtr> fold_pairs(std::vector<ExprPtr> elements, bool allow_pairs) {
  if (!allow_pairs) return elements;
  std::vector<ExprPtr> out;
  out.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const ExprPtr& e = elements[i];
    if (!is_key_atom(e)) {
      out.push_back(e);
      continue;
    }
    const std::string& key = e->value.as_key().name;
    if (i + 1 < elements.size() && !is_key_atom(elements[i + 1])) {
      const ExprPtr& v = elements[i + 1];
      out.push_back(Expr::pair(key, v, Span::cover(e->span, v->span), e->source));
      ++i;
    } else {
      out.push_back(Expr::pair(key, nullptr, e->span, e->source));
    }
  }
  return out;
}

std::vector<ExprPtr> parse_program(const std::vector<Token>& tokens, SourcePtr source) {
  return Parser(tokens, std::move(source)).program();
}

std::vector<ExprPtr> parse_source(const SourcePtr& text) {
  try {
    return parse_program(tokenize(*text), text);
  } catch (PelException& e) {
    if (!e.source()) e.set_location(e.span().value_or(Span{}), text);
    throw;
  }
}

std::vector<ExprPtr> parse_source(std::string_view text) {
  return parse_source(make_source(std::string(text)));
}

}  // namespace pel

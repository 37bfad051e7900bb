#include "pel/ast.hpp"

namespace pel {

namespace {

std::shared_ptr<Expr> node(ExprKind kind, const Span& span, SourcePtr src) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->span = span;
  e->source = std::move(src);
  return e;
}

}  // namespace

ExprPtr Expr::literal(Value v, const Span& span, SourcePtr src) {
  auto e = node(ExprKind::literal, span, std::move(src));
  e->value = std::move(v);
  return e;
}

ExprPtr Expr::symbol(std::string name, const Span& span, SourcePtr src) {
  auto e = node(ExprKind::symbol, span, std::move(src));
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::call(ExprPtr head, std::vector<ExprPtr> args, const Span& span,
                   SourcePtr src) {
  auto e = node(ExprKind::call, span, std::move(src));
  e->head = std::move(head);
  e->items = std::move(args);
  return e;
}

ExprPtr Expr::literal_list(std::vector<ExprPtr> items, const Span& span, SourcePtr src) {
  auto e = node(ExprKind::literal_list, span, std::move(src));
  e->items = std::move(items);
  return e;
}

ExprPtr Expr::quoted(ExprPtr inner, const Span& span, SourcePtr src) {
  auto e = node(ExprKind::quoted, span, std::move(src));
  e->head = std::move(inner);
  return e;
}

ExprPtr Expr::pipe(std::vector<ExprPtr> stages, std::vector<Span> pipe_spans,
                   const Span& span, SourcePtr src) {
  auto e = node(ExprKind::pipe, span, std::move(src));
  e->items = std::move(stages);
  e->pipe_spans = std::move(pipe_spans);
  return e;
}

ExprPtr Expr::pair(std::string key, ExprPtr value, const Span& span, SourcePtr src) {
  auto e = node(ExprKind::pair, span, std::move(src));
  e->name = std::move(key);
  e->head = std::move(value);
  return e;
}

bool same_structure(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::literal:
      return a->value == b->value;
    case ExprKind::symbol:
      return a->name == b->name;
    case ExprKind::pair:
      return a->name == b->name && same_structure(a->head, b->head);
    case ExprKind::quoted:
      return same_structure(a->head, b->head);
    case ExprKind::call:
      if (!same_structure(a->head, b->head)) return false;
      [[fallthrough]];
    case ExprKind::literal_list:
    case ExprKind::pipe:
      if (a->items.size() != b->items.size()) return false;
      for (std::size_t i = 0; i < a->items.size(); ++i) {
        if (!same_structure(a->items[i], b->items[i])) return false;
      }
      return true;
  }
  return false;
}

std::string to_source(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::literal:
      return e->value.display();
    case ExprKind::symbol:
      return e->name;
    case ExprKind::pair:
      return e->head ? ":" + e->name + " " + to_source(e->head) : ":" + e->name;
    case ExprKind::quoted:
      return "'" + to_source(e->head);
    case ExprKind::call: {
      std::string out = "(" + to_source(e->head);
      for (const auto& arg : e->items) out += " " + to_source(arg);
      return out + ")";
    }
    case ExprKind::literal_list: {
      std::string out = "[";
      for (std::size_t i = 0; i < e->items.size(); ++i) {
        if (i) out += " ";
        out += to_source(e->items[i]);
      }
      return out + "]";
    }
    case ExprKind::pipe: {
      std::string out;
      for (std::size_t i = 0; i < e->items.size(); ++i) {
        if (i) out += " \xE2\x96\xB7 ";
        out += to_source(e->items[i]);
      }
      return out;
    }
  }
  return {};
}

}  // namespace pel

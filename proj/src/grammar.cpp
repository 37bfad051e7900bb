#include "pel/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "pel/builtins.hpp"
#include "pel/error.hpp"

namespace pel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void caps_error(std::size_t line, const std::string& why) {
  throw PelException(ErrorKind::IoError,
                     "capabilities line " + std::to_string(line) + ": " + why);
}

bool parse_flag(const std::string& v, std::size_t line) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  caps_error(line, "expected true or false, got " + v);
}

std::set<std::string> parse_list(std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::set<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.insert(item);
  }
  return out;
}

bool is_call_to(const ExprPtr& e, std::string_view name) {
  return e && e->kind == ExprKind::call && e->head->is_symbol(name);
}

// Names a program binds itself: def targets, lambda parameters and for
// iterators.
void collect_binders(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (is_call_to(e, "def") && !e->items.empty()) {
    const auto& first = e->items[0];
    if (first->kind == ExprKind::symbol) out.insert(first->name);
    if (first->kind == ExprKind::pair && first->name == "name" && first->head &&
        first->head->kind == ExprKind::symbol) {
      out.insert(first->head->name);
    }
  }
  if (is_call_to(e, "lambda") && !e->items.empty()) {
    ExprPtr params = e->items[0]->kind == ExprKind::pair ? e->items[0]->head : e->items[0];
    if (params && params->kind == ExprKind::literal_list) {
      for (const auto& p : params->items) {
        if (p->kind == ExprKind::pair) out.insert(p->name);
      }
    }
  }
  if (is_call_to(e, "for")) {
    for (std::size_t i = 0; i < e->items.size(); ++i) {
      const auto& a = e->items[i];
      if (a->kind == ExprKind::pair && a->name == "iterator" && a->head &&
          a->head->kind == ExprKind::symbol) {
        out.insert(a->head->name);
      } else if (i == 1 && a->kind == ExprKind::symbol) {
        out.insert(a->name);
      }
    }
  }
  collect_binders(e->head, out);
  for (const auto& i : e->items) collect_binders(i, out);
}

// Literal lists the parser synthesized for `(do a b)` carry no bracket.
bool written_with_brackets(const ExprPtr& e) {
  if (!e->source || e->span.begin >= e->source->size()) return true;
  return (*e->source)[e->span.begin] == '[';
}

class Validator {
 public:
  Validator(const CapabilityConfig& caps, std::set<std::string> bound)
      : caps_(caps), allowed_(caps.effective_allowed()), bound_(std::move(bound)) {}

  std::vector<Violation> out;

  void walk(const ExprPtr& e) {
    if (!e) return;
    switch (e->kind) {
      case ExprKind::literal:
        return;
      case ExprKind::symbol:
        check_symbol(e);
        return;
      case ExprKind::quoted:
        if (!caps_.allow_quote) add("quote", "allow_quote", e->span, "quote disabled");
        walk(e->head);
        return;
      case ExprKind::pipe:
        if (!caps_.allow_pipe) {
          for (const auto& s : e->pipe_spans) add("pipe", "allow_pipe", s, "pipe disabled");
        }
        for (const auto& i : e->items) walk(i);
        return;
      case ExprKind::literal_list:
        if (!caps_.allow_literal_list && written_with_brackets(e)) {
          add("literal list", "allow_literal_list", e->span, "literal lists disabled");
        }
        for (const auto& i : e->items) walk(i);
        return;
      case ExprKind::pair:
        walk(e->head);
        return;
      case ExprKind::call:
        walk(e->head);
        for (const auto& i : e->items) walk(i);
        return;
    }
  }

 private:
  void check_symbol(const ExprPtr& e) {
    const std::string& n = e->name;
    if (n == "do/async" && !caps_.allow_do_async) {
      add("symbol do/async", "allow_do_async", e->span, "do/async disabled");
    } else if (caps_.disabled_symbols.count(n)) {
      add("symbol " + n, "disabled_symbols", e->span, "symbol '" + n + "' disabled");
    } else if (caps_.closed_symbol_set && !allowed_.count(n) && !bound_.count(n)) {
      add("symbol " + n, "closed_symbol_set", e->span,
          "symbol '" + n + "' is not in the allowed symbol set");
    }
  }

  void add(std::string construct, std::string flag, const Span& span, std::string message) {
    out.push_back({std::move(construct), std::move(flag), span, std::move(message)});
  }

  const CapabilityConfig& caps_;
  std::set<std::string> allowed_;
  std::set<std::string> bound_;
};

std::string regex_escape(std::string_view s) {
  static const std::string_view special = R"(\^$.|?*+()[]{}/-)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

const std::string kPipeGlyph = "\xE2\x96\xB7";
// What may follow an atom without merging into it.
const std::string kBoundary = R"((?=[\s()\[\]"';|]|)" + kPipeGlyph + "|$)";
// Printable ASCII except space and ( ) [ ] " ' ; |
const std::string kSymbolClass = R"([!#-&*-:<-Z\\^-{}~])";

std::size_t saturating_add(std::size_t a, std::size_t b) {
  return a > std::numeric_limits<std::size_t>::max() - b ? std::numeric_limits<std::size_t>::max()
                                                         : a + b;
}

}  // namespace

CapabilityConfig CapabilityConfig::parse(std::string_view text) {
  CapabilityConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) caps_error(n, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key == "allow_pipe") {
      c.allow_pipe = parse_flag(value, n);
    } else if (key == "allow_quote") {
      c.allow_quote = parse_flag(value, n);
    } else if (key == "allow_literal_list") {
      c.allow_literal_list = parse_flag(value, n);
    } else if (key == "allow_do_async") {
      c.allow_do_async = parse_flag(value, n);
    } else if (key == "closed_symbol_set") {
      c.closed_symbol_set = parse_flag(value, n);
    } else if (key == "disabled_symbols") {
      c.disabled_symbols = parse_list(value);
    } else if (key == "allowed_symbols") {
      c.allowed_symbols = parse_list(value);
    } else if (key == "max_nesting_depth") {
      try {
        c.max_nesting_depth = static_cast<std::size_t>(std::stoul(unquote(value)));
      } catch (const std::exception&) {
        caps_error(n, "max_nesting_depth must be a whole number");
      }
    } else {
      caps_error(n, "unknown capability " + key);
    }
  }
  return c;
}

CapabilityConfig CapabilityConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PelException(ErrorKind::IoError, "cannot read capabilities " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::set<std::string> CapabilityConfig::effective_allowed() const {
  std::set<std::string> out;
  if (allowed_symbols.empty()) {
    for (auto& n : core_builtin_names()) out.insert(n);
  } else {
    out = allowed_symbols;
  }
  if (allow_pipe) out.insert("^");
  for (auto it = out.begin(); it != out.end();) {
    it = symbol_disabled(*it) ? out.erase(it) : std::next(it);
  }
  return out;
}

bool CapabilityConfig::symbol_disabled(std::string_view name) const {
  if (name == "do/async" && !allow_do_async) return true;
  return disabled_symbols.count(std::string(name)) > 0;
}

std::size_t nesting_depth(const ExprPtr& e) {
  if (!e) return 0;
  std::size_t inner = 0;
  switch (e->kind) {
    case ExprKind::literal:
    case ExprKind::symbol:
      return 0;
    case ExprKind::quoted:
    case ExprKind::pair:
      return nesting_depth(e->head);
    case ExprKind::pipe:
      for (const auto& i : e->items) inner = std::max(inner, nesting_depth(i));
      return inner;
    case ExprKind::call:
      inner = nesting_depth(e->head);
      [[fallthrough]];
    case ExprKind::literal_list:
      for (const auto& i : e->items) inner = std::max(inner, nesting_depth(i));
      // A synthesized `do` list shares its brackets with the call.
      if (e->kind == ExprKind::literal_list && !written_with_brackets(e)) return inner;
      return inner + 1;
  }
  return 0;
}

std::vector<Violation> validate(const std::vector<ExprPtr>& program, const CapabilityConfig& caps) {
  std::set<std::string> bound;
  if (caps.closed_symbol_set) {
    for (const auto& f : program) collect_binders(f, bound);
  }
  Validator v(caps, std::move(bound));
  for (const auto& f : program) {
    v.walk(f);
    if (caps.max_nesting_depth) {
      std::size_t d = nesting_depth(f);
      if (d > *caps.max_nesting_depth) {
        v.out.push_back({"nesting", "max_nesting_depth", f->span,
                         "nesting depth " + std::to_string(d) + " exceeds the maximum of " +
                             std::to_string(*caps.max_nesting_depth)});
      }
    }
  }
  std::stable_sort(v.out.begin(), v.out.end(),
                   [](const Violation& a, const Violation& b) { return a.span.begin < b.span.begin; });
  return v.out;
}

void enforce(const std::vector<ExprPtr>& program, const CapabilityConfig& caps,
             const SourcePtr& source) {
  auto violations = validate(program, caps);
  if (violations.empty()) return;
  const auto& v = violations.front();
  std::string msg = v.message;
  if (violations.size() > 1) {
    msg += " (and " + std::to_string(violations.size() - 1) + " more violation" +
           (violations.size() > 2 ? "s" : "") + ")";
  }
  throw PelException(ErrorKind::CapabilityViolation, msg, v.span, source);
}

std::string export_ebnf(const CapabilityConfig& caps) {
  std::ostringstream o;
  o << "(* Pel grammar for the configured capabilities *)\n";
  o << "program = { expression } ;\n";
  if (caps.allow_pipe) {
    o << "expression = primary , { PIPE , primary } ;\n";
  } else {
    o << "expression = primary ;\n";
  }
  o << "primary = atom | list";
  if (caps.allow_literal_list) o << " | literal_list";
  if (caps.allow_quote) o << " | quoted_expression";
  o << " ;\n";
  o << "(* A KEY followed by a non-KEY expression inside a list, a literal list or at *)\n"
       "(* the top level forms a key-value pair; a KEY standing alone pairs with #nil. *)\n";
  o << "atom = BOOL | NIL | NUMBER | STRING | SYMBOL | KEY ;\n";
  o << "list = LPAREN , { expression } , RPAREN ;\n";
  if (caps.allow_literal_list) o << "literal_list = LBRACKET , { expression } , RBRACKET ;\n";
  if (caps.allow_quote) {
    o << "(* Keys under a quote stay plain keys. *)\n";
    o << "quoted_expression = QUOTE , primary ;\n";
  }
  o << "LPAREN = \"(\" ;\nRPAREN = \")\" ;\n";
  if (caps.allow_literal_list) o << "LBRACKET = \"[\" ;\nRBRACKET = \"]\" ;\n";
  if (caps.allow_quote) o << "QUOTE = \"'\" ;\n";
  if (caps.allow_pipe) o << "PIPE = \"" << kPipeGlyph << "\" | \"|>\" ;\n";
  o << "BOOL = \"#t\" | \"#f\" ;\n";
  o << "NIL = \"#nil\" ;\n";
  o << "STRING = '\"' , { ? any character except '\"' ? } , '\"' ;\n";
  o << "KEY = \":\" , key_char , { key_char } ;\n";
  o << "key_char = ? a-z | A-Z | 0-9 | _ + * / ? ! < = > . - ? ;\n";
  o << "NUMBER = [ \"-\" ] , digit , { digit } , [ \".\" , digit , { digit } ] ;\n";
  o << "digit = \"0\" | \"1\" | \"2\" | \"3\" | \"4\" | \"5\" | \"6\" | \"7\" | \"8\" | \"9\" ;\n";
  if (caps.closed_symbol_set) {
    o << "SYMBOL = ";
    bool first = true;
    for (const auto& s : caps.effective_allowed()) {
      o << (first ? "" : " | ") << '"' << s << '"';
      first = false;
    }
    if (first) o << "? no symbols ?";
    o << " | ? a name the program binds with def, lambda or for ? ;\n";
  } else {
    o << "SYMBOL = ? longest run of characters other than whitespace, ( ) [ ] \" ' ; |"
      << (caps.allow_pipe ? " and " + kPipeGlyph : std::string()) << " ? ;\n";
  }
  std::set<std::string> excluded = caps.disabled_symbols;
  if (!caps.allow_do_async) excluded.insert("do/async");
  if (!excluded.empty() && !caps.closed_symbol_set) {
    o << "(* SYMBOL excludes:";
    for (const auto& s : excluded) o << " " << s;
    o << " *)\n";
  }
  if (caps.max_nesting_depth) {
    o << "(* maximum bracket nesting depth: " << *caps.max_nesting_depth << " *)\n";
  }
  o << "(* Ignored between tokens: whitespace, and comments from ; to end of line. *)\n";
  return o.str();
}

RegexNode::Ptr RegexNode::literal(std::string pattern, std::vector<std::string> samples) {
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::literal;
  n->pattern_ = std::move(pattern);
  n->samples_ = std::move(samples);
  n->size_ = measure(*n);
  return n;
}

RegexNode::Ptr RegexNode::seq(std::vector<Ptr> parts) {
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::seq;
  n->parts_ = std::move(parts);
  n->size_ = measure(*n);
  return n;
}

RegexNode::Ptr RegexNode::alt(std::vector<Ptr> options) {
  if (options.size() == 1) return options[0];
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::alt;
  n->parts_ = std::move(options);
  n->size_ = measure(*n);
  return n;
}

RegexNode::Ptr RegexNode::star(Ptr inner) {
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::star;
  n->parts_ = {std::move(inner)};
  n->size_ = measure(*n);
  return n;
}

RegexNode::Ptr RegexNode::opt(Ptr inner) {
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::opt;
  n->parts_ = {std::move(inner)};
  n->size_ = measure(*n);
  return n;
}

RegexNode::Ptr RegexNode::lookahead(std::string pattern) {
  auto n = std::make_shared<RegexNode>();
  n->kind_ = Kind::lookahead;
  n->pattern_ = std::move(pattern);
  n->size_ = measure(*n);
  return n;
}

std::string RegexNode::render() const {
  std::string out;
  out.reserve(rendered_size());
  std::function<void(const RegexNode&)> emit = [&](const RegexNode& n) {
    switch (n.kind_) {
      case Kind::literal:
      case Kind::choice_set:
      case Kind::lookahead:
        out += n.pattern_;
        return;
      case Kind::seq:
        for (const auto& p : n.parts_) emit(*p);
        return;
      case Kind::alt:
        out += "(?:";
        for (std::size_t i = 0; i < n.parts_.size(); ++i) {
          if (i) out += '|';
          emit(*n.parts_[i]);
        }
        out += ')';
        return;
      case Kind::star:
      case Kind::opt:
        out += "(?:";
        emit(*n.parts_[0]);
        out += n.kind_ == Kind::star ? ")*" : ")?";
        return;
    }
  };
  emit(*this);
  return out;
}

std::size_t RegexNode::measure(const RegexNode& n) {
  switch (n.kind_) {
    case Kind::literal:
    case Kind::choice_set:
    case Kind::lookahead:
      return n.pattern_.size();
    case Kind::seq: {
      std::size_t total = 0;
      for (const auto& p : n.parts_) total = saturating_add(total, p->size_);
      return total;
    }
    case Kind::alt: {
      std::size_t total = 4 + n.parts_.size() - 1;
      for (const auto& p : n.parts_) total = saturating_add(total, p->size_);
      return total;
    }
    case Kind::star:
    case Kind::opt:
      return saturating_add(5, n.parts_[0]->size_);
  }
  return 0;
}

std::string RegexNode::sample(std::mt19937& rng) const {
  switch (kind_) {
    case Kind::literal:
    case Kind::choice_set:
      return samples_.empty() ? std::string()
                              : samples_[std::uniform_int_distribution<std::size_t>(
                                    0, samples_.size() - 1)(rng)];
    case Kind::lookahead:
      return {};
    case Kind::seq: {
      std::string s;
      for (const auto& p : parts_) s += p->sample(rng);
      return s;
    }
    case Kind::alt:
      return parts_[std::uniform_int_distribution<std::size_t>(0, parts_.size() - 1)(rng)]
          ->sample(rng);
    case Kind::star: {
      std::string s;
      for (int i = std::uniform_int_distribution<int>(0, 3)(rng); i > 0; --i) {
        s += parts_[0]->sample(rng);
      }
      return s;
    }
    case Kind::opt:
      return std::uniform_int_distribution<int>(0, 1)(rng) ? parts_[0]->sample(rng)
                                                           : std::string();
  }
  return {};
}

RegexNode::Ptr grammar_regex(const CapabilityConfig& caps, std::size_t depth) {
  using N = RegexNode;
  // Samples always separate tokens so that atoms never run together.
  auto sep = N::literal(R"((?:\s|;[^\n]*)*)", {" ", "  ", "\n", " ; note\n"});

  auto boundary = N::lookahead(kBoundary);
  std::vector<N::Ptr> bare = {
      N::literal("#[tf]", {"#t", "#f"}),
      N::literal("#nil", {"#nil"}),
      N::literal(R"(-?[0-9]+(?:\.[0-9]+)?)", {"0", "42", "-7", "3.25"}),
      N::literal(R"(:[a-zA-Z0-9_+*/?!<=>.\-]+)", {":a", ":name", ":k-1", ":ok?"}),
  };

  std::set<std::string> excluded = caps.disabled_symbols;
  if (!caps.allow_do_async) excluded.insert("do/async");
  if (caps.closed_symbol_set) {
    auto allowed = caps.effective_allowed();
    std::vector<N::Ptr> names;
    for (const auto& s : allowed) names.push_back(N::literal(regex_escape(s), {s}));
    if (!names.empty()) bare.push_back(N::alt(std::move(names)));
  } else {
    std::vector<std::string> samples;
    for (const char* s : {"x", "f", "my-foo", "+", "gt", "len", "MAIN/FINANCE", "a1", "#"}) {
      if (!excluded.count(s)) samples.push_back(s);
    }
    if (caps.allow_pipe) samples.push_back("^");
    std::string guard;
    if (!excluded.empty()) {
      guard = "(?!(?:";
      bool first = true;
      for (const auto& s : excluded) {
        guard += (first ? "" : "|") + regex_escape(s);
        first = false;
      }
      guard += ")" + kBoundary + ")";
    }
    bare.push_back(N::literal(guard + kSymbolClass + "+", samples));
  }
  // `()` parses to #nil, so it counts as an atom rather than a nesting level.
  auto empty_call = N::seq({N::literal(R"(\()", {"("}), sep, N::literal(R"(\))", {")"})});
  auto atom = N::alt({N::seq({N::alt(bare), boundary}),
                      N::literal(R"("[^"]*")", {"\"\"", "\"hi\"", "\"a b; c\"", "\"x|y\""}),
                      empty_call});

  auto quotes = caps.allow_quote ? N::star(N::seq({N::literal("'", {"'"}), sep})) : nullptr;
  auto pipe = caps.allow_pipe
                  ? N::literal("(?:" + kPipeGlyph + R"(|\|>))", {kPipeGlyph, "|>"})
                  : nullptr;

  N::Ptr expr;  // expression of the previous depth
  for (std::size_t d = 0; d <= depth; ++d) {
    std::vector<N::Ptr> forms = {atom};
    if (expr) {
      auto body = N::seq({sep, N::star(N::seq({expr, sep}))});
      forms.push_back(N::seq({N::literal(R"(\()", {"("}), body, N::literal(R"(\))", {")"})}));
      if (caps.allow_literal_list) {
        forms.push_back(
            N::seq({N::literal(R"(\[)", {"["}), body, N::literal(R"(\])", {"]"})}));
      }
    }
    auto primary = quotes ? N::seq({quotes, N::alt(forms)}) : N::alt(forms);
    expr = pipe ? N::seq({primary, N::star(N::seq({sep, pipe, sep, primary}))}) : primary;
  }
  return N::seq({sep, N::star(N::seq({expr, sep}))});
}

std::string export_regex(const CapabilityConfig& caps, std::size_t depth, std::size_t max_bytes) {
  if (depth < 1) throw PelException(ErrorKind::PreconditionFailed, "regex depth must be at least 1");
  if (caps.max_nesting_depth) depth = std::min(depth, *caps.max_nesting_depth);
  auto tree = grammar_regex(caps, depth);
  const std::size_t size = tree->rendered_size();
  if (size > max_bytes) {
    throw PelException(ErrorKind::DepthTooLarge,
                       "regex for depth " + std::to_string(depth) + " would be " +
                           std::to_string(size) + " bytes, over the limit of " +
                           std::to_string(max_bytes));
  }
  return tree->render();
}

}  // namespace pel

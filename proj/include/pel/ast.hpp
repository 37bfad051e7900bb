#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pel/source.hpp"
#include "pel/value.hpp"

namespace pel {

enum class ExprKind {
  literal,       // number, string, bool, nil, key, or an injected value
  symbol,
  call,          // (head args...)
  literal_list,  // [items...]
  quoted,        // 'head
  pipe,          // items[0] ▷ items[1] ▷ ...
  pair,          // :name head  (head null when the key stood alone)
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable AST node. Which fields are meaningful depends on `kind`.
class Expr {
 public:
  ExprKind kind;
  Span span;
  SourcePtr source;
  Value value;                 // literal
  std::string name;            // symbol name, pair key
  ExprPtr head;                // call operator, quoted inner, pair value
  std::vector<ExprPtr> items;  // call args, list elements, pipe stages
  std::vector<Span> pipe_spans;  // one per PIPE token of a pipe chain

  static ExprPtr literal(Value v, const Span& span, SourcePtr src = nullptr);
  static ExprPtr symbol(std::string name, const Span& span, SourcePtr src = nullptr);
  static ExprPtr call(ExprPtr head, std::vector<ExprPtr> args, const Span& span,
                      SourcePtr src = nullptr);
  static ExprPtr literal_list(std::vector<ExprPtr> items, const Span& span,
                              SourcePtr src = nullptr);
  static ExprPtr quoted(ExprPtr inner, const Span& span, SourcePtr src = nullptr);
  static ExprPtr pipe(std::vector<ExprPtr> stages, std::vector<Span> pipe_spans,
                      const Span& span, SourcePtr src = nullptr);
  static ExprPtr pair(std::string key, ExprPtr value, const Span& span,
                      SourcePtr src = nullptr);

  bool is_symbol(std::string_view n) const { return kind == ExprKind::symbol && name == n; }
  bool is_caret() const { return is_symbol("^"); }
};

/// Structural equality ignoring spans and sources.
bool same_structure(const ExprPtr& a, const ExprPtr& b);

/// Canonical source text; parsing it yields a structurally equal tree.
std::string to_source(const ExprPtr& e);

}  // namespace pel

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pel/ast.hpp"
#include "pel/environment.hpp"
#include "pel/error.hpp"
#include "pel/value.hpp"

namespace pel {

class Interpreter;

struct Param {
  std::string name;
  ExprPtr default_expr;  // null when the parameter is required
  bool required() const { return default_expr == nullptr; }
};

/// An unevaluated argument handed to a non-strict closure, with the
/// environment it must be evaluated in.
struct Thunk {
  ExprPtr expr;
  EnvPtr env;
};

using Arg = std::variant<Value, Thunk>;

/// Where a builtin is being invoked from.
struct CallSite {
  EnvPtr env;
  Span span;
  SourcePtr source;
};

/// Builtin body. Receives one argument per parameter, in declaration order,
/// with defaults already filled in.
using BuiltinFn = std::function<Value(Interpreter&, const CallSite&, std::vector<Arg>&)>;

/// The single callable entity: builtins and lambdas alike.
///
/// Closures are immutable. Supplying fewer than the required arguments
/// produces a new closure with a larger bound set; the closure fires once
/// every required parameter is bound.
class Closure {
 public:
  using Bound = std::vector<std::optional<Arg>>;

  static ClosurePtr builtin(std::string name, std::vector<Param> params, bool strict,
                            BuiltinFn fn, DocPtr doc);
  static ClosurePtr lambda(std::vector<Param> params, ExprPtr body, EnvPtr env);

  const std::string& name() const { return name_; }
  const std::vector<Param>& params() const { return params_; }
  bool strict() const { return strict_; }
  bool is_builtin() const { return static_cast<bool>(fn_); }
  const BuiltinFn& fn() const { return fn_; }
  const ExprPtr& body() const { return body_; }
  const EnvPtr& env() const { return env_; }
  const DocPtr& doc() const { return doc_; }
  const Bound& bound() const { return bound_; }

  std::size_t arity() const { return params_.size(); }
  std::optional<std::size_t> param_index(std::string_view name) const;
  /// True when every required parameter has a bound argument.
  bool ready(const Bound& bound) const;
  bool ready() const { return ready(bound_); }

  ClosurePtr with_bound(Bound bound) const;
  ClosurePtr with_name(std::string name) const;

 private:
  Closure() = default;

  std::string name_;
  std::vector<Param> params_;
  bool strict_ = true;
  BuiltinFn fn_;
  ExprPtr body_;
  EnvPtr env_;
  DocPtr doc_;
  Bound bound_;
};

/// Binds additional named arguments without firing. Throws
/// DuplicateArgument or UnknownNamedArgument.
ClosurePtr make_partial(const ClosurePtr& closure,
                        const std::vector<std::pair<std::string, Arg>>& newly_bound);

}  // namespace pel

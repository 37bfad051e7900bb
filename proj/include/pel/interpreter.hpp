#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pel/ast.hpp"
#include "pel/closure.hpp"
#include "pel/environment.hpp"
#include "pel/task_engine.hpp"
#include "pel/value.hpp"

namespace pel {

namespace llm {
class Backend;
}

/// Arguments of one call: either all positional or all named.
struct CallArguments {
  std::vector<Arg> positional;
  std::vector<std::pair<std::string, Arg>> named;

  bool is_named() const { return !named.empty(); }
};

struct InterpreterOptions {
  std::shared_ptr<llm::Backend> backend;  // scripted mock with no rules if null
  std::ostream* out = nullptr;            // std::cout if null
  std::size_t jobs = 0;                   // TaskEngine::default_parallelism() if 0
  std::size_t max_depth = 1000;           // nested call limit per thread
};

/// Tree-walking evaluator.
///
/// Owns the pieces every builtin may need: the LLM backend, the serialized
/// output sink, and the task engine shared by `do/async` and the scheduler.
class Interpreter {
 public:
  explicit Interpreter(InterpreterOptions options = {});
  ~Interpreter();

  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// Fresh global environment with every core builtin installed.
  EnvPtr make_global_env();

  Value eval(const ExprPtr& expr, const EnvPtr& env);

  /// Calls a closure or a literal list.
  Value apply(const Value& callee, CallArguments args, const CallSite& site);
  Value apply_closure(const ClosurePtr& closure, CallArguments args, const CallSite& site);

  /// Feeds `value` into a pipe stage (first-argument or caret injection).
  Value pipe_into(const Value& value, const ExprPtr& stage, const EnvPtr& env);

  /// Value of an argument; thunks are evaluated in their own environment.
  Value force(const Arg& arg);

  void write(std::string_view text);

  llm::Backend& backend() { return *backend_; }
  const std::shared_ptr<llm::Backend>& backend_ptr() const { return backend_; }
  void set_backend(std::shared_ptr<llm::Backend> backend);
  TaskEngine& tasks() { return tasks_; }

 private:
  Value eval_call(const ExprPtr& expr, const EnvPtr& env);
  Value eval_pipe(const ExprPtr& expr, const EnvPtr& env);
  Value fire(const ClosurePtr& closure, const Closure::Bound& bound, const CallSite& site);

  std::shared_ptr<llm::Backend> backend_;
  std::ostream* out_;
  std::mutex out_mu_;
  TaskEngine tasks_;
  std::size_t max_depth_;
};

/// Literal-list invocation with optional `:at`, `:from`, `:to` (all 1-based,
/// nil meaning absent).
Value call_literal_list(const Value& list, const Value& at, const Value& from, const Value& to);

/// Rewrites a pipe stage so that it receives `value`: at every caret when the
/// stage contains one, otherwise as the first argument.
ExprPtr inject(const ExprPtr& stage, const Value& value);

/// Carets in `expr` that a pipe into `expr` would fill. Quoted code and the
/// later stages of nested pipes are not searched.
std::size_t count_carets(const ExprPtr& expr);

/// The data a quoted expression denotes.
Value reify(const ExprPtr& expr);

}  // namespace pel

#include "pel/interpreter.hpp"

#include <iostream>

#include "pel/builtins.hpp"
#include "pel/error.hpp"
#include "pel/llm.hpp"

namespace pel {

namespace {

thread_local std::size_t tls_depth = 0;

class DepthGuard {
 public:
  explicit DepthGuard(std::size_t limit) {
    if (++tls_depth > limit) {
      --tls_depth;
      throw PelException(ErrorKind::RecursionLimit,
                         "maximum call depth of " + std::to_string(limit) + " exceeded");
    }
  }
  ~DepthGuard() { --tls_depth; }
  DepthGuard(const DepthGuard&) = delete;
  DepthGuard& operator=(const DepthGuard&) = delete;
};

ExprPtr substitute(const ExprPtr& e, const Value& v) {
  switch (e->kind) {
    case ExprKind::symbol:
      return e->is_caret() ? Expr::literal(v, e->span, e->source) : e;
    case ExprKind::literal:
    case ExprKind::quoted:
      return e;
    case ExprKind::pair:
      return e->head ? Expr::pair(e->name, substitute(e->head, v), e->span, e->source) : e;
    case ExprKind::call: {
      std::vector<ExprPtr> args;
      args.reserve(e->items.size());
      for (const auto& a : e->items) args.push_back(substitute(a, v));
      return Expr::call(substitute(e->head, v), std::move(args), e->span, e->source);
    }
    case ExprKind::literal_list: {
      std::vector<ExprPtr> items;
      items.reserve(e->items.size());
      for (const auto& a : e->items) items.push_back(substitute(a, v));
      return Expr::literal_list(std::move(items), e->span, e->source);
    }
    case ExprKind::pipe: {
      std::vector<ExprPtr> stages = e->items;
      stages[0] = substitute(stages[0], v);
      return Expr::pipe(std::move(stages), e->pipe_spans, e->span, e->source);
    }
  }
  return e;
}

std::int64_t index_value(const Value& v, const char* param) {
  if (!v.is_number()) {
    throw PelException(ErrorKind::BadIndexType, std::string(":") + param +
                                                    " must be a number, got " + v.type_name());
  }
  auto i = v.as_number().exact_integer();
  if (!i) {
    throw PelException(ErrorKind::BadIndexType, std::string(":") + param +
                                                    " must be a whole number, got " +
                                                    v.display());
  }
  return *i;
}

const Value& element_at(const std::vector<Value>& items, std::int64_t index) {
  if (index < 1 || index > static_cast<std::int64_t>(items.size())) {
    throw PelException(ErrorKind::IndexOutOfRange,
                       "index " + std::to_string(index) + " is out of range for a list of length " +
                           std::to_string(items.size()) + " (indices start at 1)");
  }
  return items[static_cast<std::size_t>(index - 1)];
}

const Value& value_for_key(const std::vector<Value>& items, const std::string& key) {
  for (const auto& item : items) {
    if (item.is_pair() && item.as_pair().key == key) return item.as_pair().value;
  }
  throw PelException(ErrorKind::KeyNotFound, "key :" + key + " not found in list");
}

const Value& select(const std::vector<Value>& items, const Value& at) {
  if (at.is_key()) return value_for_key(items, at.as_key().name);
  return element_at(items, index_value(at, "at"));
}

}  // namespace

Interpreter::Interpreter(InterpreterOptions options)
    : backend_(options.backend ? std::move(options.backend)
                               : std::make_shared<llm::ScriptedMock>()),
      out_(options.out ? options.out : &std::cout),
      tasks_(options.jobs ? options.jobs : TaskEngine::default_parallelism()),
      max_depth_(options.max_depth) {}

Interpreter::~Interpreter() = default;

EnvPtr Interpreter::make_global_env() {
  auto env = Environment::make_root();
  install_builtins(*env);
  return env;
}

void Interpreter::set_backend(std::shared_ptr<llm::Backend> backend) {
  backend_ = std::move(backend);
}

void Interpreter::write(std::string_view text) {
  std::lock_guard lock(out_mu_);
  *out_ << text;
  out_->flush();
}

Value Interpreter::eval(const ExprPtr& e, const EnvPtr& env) {
  switch (e->kind) {
    case ExprKind::literal:
      return e->value;
    case ExprKind::symbol:
      return env->lookup(e->name, e->span, e->source);
    case ExprKind::pair:
      return Value::pair(e->name, e->head ? eval(e->head, env) : Value::nil());
    case ExprKind::literal_list: {
      std::vector<Value> items;
      items.reserve(e->items.size());
      for (const auto& item : e->items) items.push_back(eval(item, env));
      return Value::list(std::move(items));
    }
    case ExprKind::quoted:
      return reify(e->head);
    case ExprKind::call:
      return eval_call(e, env);
    case ExprKind::pipe:
      return eval_pipe(e, env);
  }
  return Value::nil();
}

Value Interpreter::eval_call(const ExprPtr& e, const EnvPtr& env) {
  DepthGuard guard(max_depth_);
  try {
    Value callee = eval(e->head, env);
    if (!callee.is_closure() && !callee.is_list()) {
      throw PelException(ErrorKind::NotCallable,
                         "cannot call " + callee.display() + " (a " + callee.type_name() +
                             "); only closures and literal lists are callable",
                         e->head->span, e->head->source);
    }
    bool named = false;
    bool positional = false;
    for (const auto& a : e->items) (a->kind == ExprKind::pair ? named : positional) = true;
    if (named && positional) {
      PelException ex(ErrorKind::MixedArguments,
                      "Mixing named and positional arguments is not allowed.", e->span,
                      e->source);
      if (callee.is_closure()) ex.set_context(callee.as_closure()->doc());
      throw ex;
    }
    const bool strict = !callee.is_closure() || callee.as_closure()->strict();
    CallArguments args;
    for (const auto& a : e->items) {
      if (a->kind == ExprKind::pair) {
        ExprPtr vexpr = a->head ? a->head : Expr::literal(Value::nil(), a->span, a->source);
        args.named.emplace_back(a->name,
                                strict ? Arg(eval(vexpr, env)) : Arg(Thunk{vexpr, env}));
      } else {
        args.positional.push_back(strict ? Arg(eval(a, env)) : Arg(Thunk{a, env}));
      }
    }
    return apply(callee, std::move(args), CallSite{env, e->span, e->source});
  } catch (PelException& ex) {
    if (!ex.span()) ex.set_location(e->span, e->source);
    if (!ex.origin()) ex.set_origin(e->span, e->source);
    ex.seal();
    throw;
  }
}

Value Interpreter::apply(const Value& callee, CallArguments args, const CallSite& site) {
  if (callee.is_closure()) return apply_closure(callee.as_closure(), std::move(args), site);
  if (!callee.is_list()) {
    throw PelException(ErrorKind::NotCallable, "cannot call " + callee.display());
  }
  static const char* kSlots[] = {"at", "from", "to"};
  Value slots[3];
  bool filled[3] = {false, false, false};
  if (args.is_named()) {
    for (auto& [name, arg] : args.named) {
      int idx = -1;
      for (int i = 0; i < 3; ++i) {
        if (name == kSlots[i]) idx = i;
      }
      if (idx < 0) {
        throw PelException(ErrorKind::UnknownNamedArgument,
                           "unknown named argument :" + name +
                               " for a literal list (expected :at, :from or :to)");
      }
      if (filled[idx]) {
        throw PelException(ErrorKind::DuplicateArgument, "argument :" + name + " supplied twice");
      }
      slots[idx] = force(arg);
      filled[idx] = true;
    }
  } else {
    if (args.positional.size() > 3) {
      throw PelException(ErrorKind::TooManyArguments,
                         "a literal list accepts at most 3 arguments (:at :from :to), got " +
                             std::to_string(args.positional.size()));
    }
    for (std::size_t i = 0; i < args.positional.size(); ++i) slots[i] = force(args.positional[i]);
  }
  return call_literal_list(callee, slots[0], slots[1], slots[2]);
}

Value Interpreter::apply_closure(const ClosurePtr& callee, CallArguments args,
                                 const CallSite& site) {
  ClosurePtr c = callee;
  try {
    Closure::Bound bound = c->bound();
    if (args.is_named()) {
      c = make_partial(c, args.named);
      bound = c->bound();
    } else {
      std::size_t k = 0;
      for (std::size_t i = 0; i < bound.size() && k < args.positional.size(); ++i) {
        if (!bound[i]) bound[i] = std::move(args.positional[k++]);
      }
      if (k < args.positional.size()) {
        std::size_t open = 0;
        for (const auto& b : c->bound()) open += b ? 0 : 1;
        throw PelException(ErrorKind::TooManyArguments,
                           "too many arguments: " +
                               (c->name().empty() ? std::string("closure") : c->name()) +
                               " accepts " + std::to_string(open) + " more, got " +
                               std::to_string(args.positional.size()));
      }
    }
    if (!c->ready(bound)) return Value::closure(c->with_bound(std::move(bound)));
    return fire(c, bound, site);
  } catch (PelException& ex) {
    if (!ex.context() && !ex.sealed()) ex.set_context(c->doc());
    ex.seal();
    throw;
  }
}

Value Interpreter::fire(const ClosurePtr& c, const Closure::Bound& bound, const CallSite& site) {
  const auto& params = c->params();
  const EnvPtr& def_env = c->env() ? c->env() : site.env;
  std::vector<Arg> args;
  args.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (bound[i]) {
      args.push_back(*bound[i]);
    } else if (c->strict()) {
      args.emplace_back(eval(params[i].default_expr, def_env));
    } else {
      args.emplace_back(Thunk{params[i].default_expr, def_env});
    }
  }
  if (c->is_builtin()) return c->fn()(*this, site, args);

  auto frame = Environment::make_child(c->env());
  for (std::size_t i = 0; i < params.size(); ++i) {
    frame->define(params[i].name, force(args[i]));
  }
  return eval(c->body(), frame);
}

Value Interpreter::eval_pipe(const ExprPtr& e, const EnvPtr& env) {
  Value v = eval(e->items[0], env);
  for (std::size_t i = 1; i < e->items.size(); ++i) v = pipe_into(v, e->items[i], env);
  return v;
}

Value Interpreter::pipe_into(const Value& value, const ExprPtr& stage, const EnvPtr& env) {
  if (stage->kind == ExprKind::pipe) {
    Value v = pipe_into(value, stage->items[0], env);
    for (std::size_t i = 1; i < stage->items.size(); ++i) v = pipe_into(v, stage->items[i], env);
    return v;
  }
  if (stage->kind != ExprKind::call && stage->kind != ExprKind::literal_list) {
    throw PelException(ErrorKind::PipeTargetNotCall,
                       "a pipe stage must be a call (...) or a literal list [...], got '" +
                           to_source(stage) + "'",
                       stage->span, stage->source);
  }
  return eval(inject(stage, value), env);
}

Value Interpreter::force(const Arg& arg) {
  if (const auto* v = std::get_if<Value>(&arg)) return *v;
  const auto& t = std::get<Thunk>(arg);
  try {
    return eval(t.expr, t.env);
  } catch (PelException& ex) {
    ex.seal();
    throw;
  }
}

Value call_literal_list(const Value& list, const Value& at, const Value& from, const Value& to) {
  const auto& items = list.as_list();
  if (at.is_nil() && from.is_nil() && to.is_nil()) return list;
  if (!at.is_nil()) {
    if (!from.is_nil() || !to.is_nil()) {
      throw PelException(ErrorKind::AtWithSlice, ":at cannot be combined with :from or :to");
    }
    if (at.is_list()) {
      std::vector<Value> out;
      out.reserve(at.as_list().size());
      for (const auto& sel : at.as_list()) out.push_back(select(items, sel));
      return Value::list(std::move(out));
    }
    if (!at.is_key() && !at.is_number()) {
      throw PelException(ErrorKind::BadIndexType,
                         std::string(":at must be a number, a quoted key, or a list of them, got ") +
                             at.type_name());
    }
    return select(items, at);
  }
  const auto n = static_cast<std::int64_t>(items.size());
  auto check = [n](std::int64_t i, const char* param) {
    if (i < 1 || i > n) {
      throw PelException(ErrorKind::IndexOutOfRange,
                         std::string(":") + param + " " + std::to_string(i) +
                             " is out of range for a list of length " + std::to_string(n) +
                             " (indices start at 1)");
    }
    return i;
  };
  std::int64_t first = from.is_nil() ? 1 : check(index_value(from, "from"), "from");
  std::int64_t last = to.is_nil() ? n : check(index_value(to, "to"), "to");
  if (first > last) {
    if (n == 0) return list;
    throw PelException(ErrorKind::IndexOutOfRange, ":from " + std::to_string(first) +
                                                       " is past :to " + std::to_string(last));
  }
  return Value::list(std::vector<Value>(items.begin() + (first - 1), items.begin() + last));
}

std::size_t count_carets(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::symbol:
      return e->is_caret() ? 1 : 0;
    case ExprKind::literal:
    case ExprKind::quoted:
      return 0;
    case ExprKind::pair:
      return e->head ? count_carets(e->head) : 0;
    case ExprKind::call: {
      std::size_t n = count_carets(e->head);
      for (const auto& a : e->items) n += count_carets(a);
      return n;
    }
    case ExprKind::literal_list: {
      std::size_t n = 0;
      for (const auto& a : e->items) n += count_carets(a);
      return n;
    }
    case ExprKind::pipe:
      return count_carets(e->items[0]);
  }
  return 0;
}

ExprPtr inject(const ExprPtr& stage, const Value& value) {
  if (count_carets(stage) > 0) return substitute(stage, value);
  auto lit = Expr::literal(value, stage->span, stage->source);
  if (stage->kind == ExprKind::call) {
    std::vector<ExprPtr> args;
    args.reserve(stage->items.size() + 1);
    args.push_back(lit);
    args.insert(args.end(), stage->items.begin(), stage->items.end());
    return Expr::call(stage->head, std::move(args), stage->span, stage->source);
  }
  if (stage->kind == ExprKind::literal_list) {
    std::vector<ExprPtr> items;
    items.reserve(stage->items.size() + 1);
    items.push_back(lit);
    items.insert(items.end(), stage->items.begin(), stage->items.end());
    return Expr::literal_list(std::move(items), stage->span, stage->source);
  }
  return stage;
}

Value reify(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::literal:
      return e->value;
    case ExprKind::symbol:
      return Value::symbol(e->name);
    case ExprKind::quoted:
      return reify(e->head);
    case ExprKind::pair:
      return Value::pair(e->name, e->head ? reify(e->head) : Value::nil());
    case ExprKind::call: {
      std::vector<Value> items{reify(e->head)};
      for (const auto& a : e->items) items.push_back(reify(a));
      return Value::list(std::move(items));
    }
    case ExprKind::literal_list: {
      std::vector<Value> items;
      for (const auto& a : e->items) items.push_back(reify(a));
      return Value::list(std::move(items));
    }
    case ExprKind::pipe: {
      std::vector<Value> items;
      for (std::size_t i = 0; i < e->items.size(); ++i) {
        if (i) items.push_back(Value::symbol("\xE2\x96\xB7"));
        items.push_back(reify(e->items[i]));
      }
      return Value::list(std::move(items));
    }
  }
  return Value::nil();
}

}  // namespace pel

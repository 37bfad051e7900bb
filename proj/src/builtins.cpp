#include "pel/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pel/interpreter.hpp"
#include "pel/llm.hpp"

namespace pel {

Param required_param(std::string name) { return Param{std::move(name), nullptr}; }

Param optional_param(std::string name, Value default_value) {
  return Param{std::move(name), Expr::literal(std::move(default_value), Span{})};
}

ClosurePtr make_builtin(std::string name, std::vector<Param> params, bool strict, BuiltinFn fn,
                        Docstring doc) {
  return Closure::builtin(std::move(name), std::move(params), strict, std::move(fn),
                          std::make_shared<const Docstring>(std::move(doc)));
}

namespace {

using Args = std::vector<Arg>;

const Value& val(const Arg& a) { return std::get<Value>(a); }
const Thunk& thunk(const Arg& a) { return std::get<Thunk>(a); }

[[noreturn]] void mismatch(const std::string& msg) {
  throw PelException(ErrorKind::TypeMismatch, msg);
}

const Number& number_arg(const Value& v, const char* fn, const char* param) {
  if (!v.is_number()) {
    mismatch(std::string(fn) + " expects :" + param + " to be a PelNum, got " + v.display() +
             " (" + v.type_name() + ")");
  }
  return v.as_number();
}

// Integer arithmetic stays exact until it would overflow.
Number add(const Number& a, const Number& b) {
  std::int64_t r;
  if (a.is_integer() && b.is_integer() &&
      !__builtin_add_overflow(a.as_integer(), b.as_integer(), &r)) {
    return Number::integer(r);
  }
  return Number::decimal(a.as_double() + b.as_double());
}

Number sub(const Number& a, const Number& b) {
  std::int64_t r;
  if (a.is_integer() && b.is_integer() &&
      !__builtin_sub_overflow(a.as_integer(), b.as_integer(), &r)) {
    return Number::integer(r);
  }
  return Number::decimal(a.as_double() - b.as_double());
}

Number mul(const Number& a, const Number& b) {
  std::int64_t r;
  if (a.is_integer() && b.is_integer() &&
      !__builtin_mul_overflow(a.as_integer(), b.as_integer(), &r)) {
    return Number::integer(r);
  }
  return Number::decimal(a.as_double() * b.as_double());
}

Number divide(const Number& a, const Number& b) {
  if (b.as_double() == 0.0) throw PelException(ErrorKind::ArithmeticError, "division by zero");
  if (a.is_integer() && b.is_integer()) {
    const auto x = a.as_integer();
    const auto y = b.as_integer();
    if (!(x == std::numeric_limits<std::int64_t>::min() && y == -1) && x % y == 0) {
      return Number::integer(x / y);
    }
  }
  return Number::decimal(a.as_double() / b.as_double());
}

using NumOp = Number (*)(const Number&, const Number&);

BuiltinFn arithmetic(const char* name, NumOp op, std::optional<std::int64_t> identity) {
  return [name, op, identity](Interpreter&, const CallSite&, Args& args) -> Value {
    const Value& x = val(args[0]);
    const Value& y = val(args[1]);
    if (y.is_nil()) {
      if (identity && x.is_list()) {
        Number acc = Number::integer(*identity);
        for (const auto& item : x.as_list()) {
          if (!item.is_number()) {
            mismatch(std::string(name) + " over a list needs numbers only, found " +
                     item.display() + " (" + item.type_name() + ")");
          }
          acc = op(acc, item.as_number());
        }
        return Value::number(acc);
      }
      if (identity) {
        mismatch(std::string(name) + " with a single argument expects a list of numbers, got " +
                 x.display() + " (" + x.type_name() + ")");
      }
      mismatch(std::string(name) + " requires both :x and :y");
    }
    return Value::number(op(number_arg(x, name, "x"), number_arg(y, name, "y")));
  };
}

Docstring arithmetic_doc(const std::string& name, const std::string& verb, bool reduces,
                         const std::string& example) {
  Docstring d;
  d.signature = "(" + name + " :x :y #nil)";
  d.types = {
      "x: PelNum" + std::string(reduces ? " or PelListLiteral of PelNum" : "") +
          " - left operand",
      "y: PelNum (optional) - right operand",
  };
  d.description = "Returns x " + verb + " y.";
  if (reduces) {
    d.description += " When y is omitted and x is a list of numbers, combines the whole list.";
  }
  d.description += " Integer results stay exact.";
  d.examples = example;
  return d;
}

Value builtin_print(Interpreter& in, const CallSite&, Args& args) {
  const Value& vals = val(args[0]);
  const Value& sep = val(args[1]);
  const Value& nl = val(args[2]);
  if (!sep.is_string()) mismatch("print expects :sep to be a PelString, got " + sep.display());
  if (!nl.is_bool()) mismatch("print expects :nl to be a PelBool, got " + nl.display());
  std::string text;
  if (vals.is_list()) {
    const auto& items = vals.as_list();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) text += sep.as_string();
      text += items[i].print_form();
    }
  } else {
    text = vals.print_form();
  }
  if (nl.as_bool()) text += "\n";
  in.write(text);
  return vals;
}

Value builtin_def(Interpreter& in, const CallSite&, Args& args) {
  const Thunk& target = thunk(args[0]);
  if (target.expr->kind != ExprKind::symbol) {
    throw PelException(ErrorKind::DefTargetNotSymbol,
                       "def needs a symbol to bind, got '" + to_source(target.expr) + "'",
                       target.expr->span, target.expr->source);
  }
  Value v = in.force(args[1]);
  if (v.is_closure() && v.as_closure()->name().empty()) {
    v = Value::closure(v.as_closure()->with_name(target.expr->name));
  }
  return target.env->define(target.expr->name, std::move(v));
}

Value builtin_lambda(Interpreter&, const CallSite&, Args& args) {
  const Thunk& spec = thunk(args[0]);
  const Thunk& body = thunk(args[1]);
  if (spec.expr->kind != ExprKind::literal_list) {
    throw PelException(ErrorKind::BadParamSpec,
                       "lambda parameters must be a literal list of keys like [:x :y 10], got '" +
                           to_source(spec.expr) + "'",
                       spec.expr->span, spec.expr->source);
  }
  std::vector<Param> params;
  for (const auto& item : spec.expr->items) {
    if (item->kind != ExprKind::pair) {
      throw PelException(ErrorKind::BadParamSpec,
                         "lambda parameter '" + to_source(item) + "' is not a key like :x",
                         item->span, item->source);
    }
    auto dup = std::find_if(params.begin(), params.end(),
                            [&](const Param& p) { return p.name == item->name; });
    if (dup != params.end()) {
      throw PelException(ErrorKind::BadParamSpec, "lambda parameter :" + item->name +
                                                      " appears twice",
                         item->span, item->source);
    }
    params.push_back(Param{item->name, item->head});
  }
  return Value::closure(Closure::lambda(std::move(params), body.expr, body.env));
}

bool require_bool(const Value& v, const std::string& what) {
  if (!v.is_bool()) {
    throw PelException(ErrorKind::ConditionNotBool,
                       what + " must be #t or #f, got " + v.display() + " (" + v.type_name() +
                           ")");
  }
  return v.as_bool();
}

Value builtin_if(Interpreter& in, const CallSite&, Args& args) {
  bool c = require_bool(in.force(args[0]), "if :cond");
  return in.force(args[c ? 1 : 2]);
}

Value builtin_case(Interpreter& in, const CallSite&, Args& args) {
  Value scrut = in.force(args[0]);
  const Thunk& body = thunk(args[1]);
  if (body.expr->kind != ExprKind::literal_list) {
    mismatch("case expects :body to be a literal list [condition result ...], got '" +
             to_source(body.expr) + "'");
  }
  const auto& items = body.expr->items;
  if (items.size() % 2 != 0) {
    throw PelException(ErrorKind::OddCaseBody,
                       "case body needs condition/result pairs, got " +
                           std::to_string(items.size()) + " elements",
                       body.expr->span, body.expr->source);
  }
  for (std::size_t i = 0; i < items.size(); i += 2) {
    const ExprPtr& cond = items[i];
    bool hit;
    if (cond->kind == ExprKind::literal && cond->value.is_bool()) {
      hit = cond->value.as_bool();
    } else if (cond->kind == ExprKind::literal && cond->value.is_string()) {
      hit = in.backend().eval_condition(scrut, cond->value.as_string());
    } else {
      hit = require_bool(in.pipe_into(scrut, cond, body.env),
                         "case condition '" + to_source(cond) + "'");
    }
    if (hit) return in.eval(items[i + 1], body.env);
  }
  return Value::nil();
}

Value builtin_for(Interpreter& in, const CallSite&, Args& args) {
  Value coll = in.force(args[0]);
  if (!coll.is_list()) {
    throw PelException(ErrorKind::IterTargetNotList,
                       "for expects :coll to be a PelListLiteral, got " + coll.display() + " (" +
                           coll.type_name() + ")");
  }
  const Thunk& it = thunk(args[1]);
  if (it.expr->kind != ExprKind::symbol) {
    throw PelException(ErrorKind::IteratorNotSymbol,
                       "for expects :iterator to be a symbol, got '" + to_source(it.expr) + "'",
                       it.expr->span, it.expr->source);
  }
  const Thunk& body = thunk(args[2]);
  std::vector<Value> out;
  out.reserve(coll.as_list().size());
  for (const auto& item : coll.as_list()) {
    auto frame = Environment::make_child(body.env);
    frame->define(it.expr->name, item);
    out.push_back(in.eval(body.expr, frame));
  }
  return Value::list(std::move(out));
}

const std::vector<ExprPtr>& block_items(const Thunk& t, const char* name) {
  if (t.expr->kind != ExprKind::literal_list) {
    mismatch(std::string(name) + " expects a literal list of expressions, got '" +
             to_source(t.expr) + "'");
  }
  return t.expr->items;
}

Value builtin_do(Interpreter& in, const CallSite&, Args& args) {
  const Thunk& t = thunk(args[0]);
  Value last;
  for (const auto& e : block_items(t, "do")) last = in.eval(e, t.env);
  return last;
}

Value builtin_do_async(Interpreter& in, const CallSite&, Args& args) {
  const Thunk& t = thunk(args[0]);
  const auto& items = block_items(t, "do/async");
  auto outcomes =
      in.tasks().run_all(items.size(), [&](std::size_t i) { return in.eval(items[i], t.env); });
  for (const auto& o : outcomes) {
    if (o.state == TaskEngine::State::failed) std::rethrow_exception(o.error);
  }
  return outcomes.empty() ? Value::nil() : outcomes.back().value;
}

Value builtin_summarize(Interpreter& in, const CallSite&, Args& args) {
  const Value& text = val(args[0]);
  if (!text.is_string()) {
    mismatch("summarize expects :text to be a PelString, got " + std::string(text.type_name()));
  }
  if (text.as_string().empty()) throw PelException(ErrorKind::BackendError, "empty input");
  return Value::string(in.backend().summarize_text(text.as_string()));
}

std::vector<ClosurePtr> core_table() {
  std::vector<ClosurePtr> t;
  auto bin = [] { return std::vector<Param>{required_param("x"), optional_param("y", Value())}; };

  t.push_back(make_builtin("+", bin(), true, arithmetic("+", add, 0),
                           arithmetic_doc("+", "plus", true,
                                          "(+ 2 3) => 5\n[1 2 3] |> (+) => 6")));
  t.push_back(make_builtin("-", bin(), true, arithmetic("-", sub, std::nullopt),
                           arithmetic_doc("-", "minus", false, "(- 10 4) => 6")));
  t.push_back(make_builtin("*", bin(), true, arithmetic("*", mul, 1),
                           arithmetic_doc("*", "times", true,
                                          "(* 6 7) => 42\n[2 3 4] |> (*) => 24")));
  t.push_back(make_builtin("/", bin(), true, arithmetic("/", divide, std::nullopt),
                           arithmetic_doc("/", "divided by", false,
                                          "(/ 10 4) => 2.5\n(/ 9 3) => 3")));

  t.push_back(make_builtin(
      "pow", {required_param("x"), required_param("y")}, true,
      [](Interpreter&, const CallSite&, Args& a) {
        const Number& x = number_arg(val(a[0]), "pow", "x");
        const Number& y = number_arg(val(a[1]), "pow", "y");
        return Value::decimal(std::pow(x.as_double(), y.as_double()));
      },
      {"(pow :x :y)",
       {"x: PelNum - base", "y: PelNum - exponent"},
       "Returns x raised to the power y.",
       "(pow 3 2) => 9"}));

  t.push_back(make_builtin(
      "sqrt", {required_param("x")}, true,
      [](Interpreter&, const CallSite&, Args& a) {
        const Number& x = number_arg(val(a[0]), "sqrt", "x");
        if (x.as_double() < 0) {
          throw PelException(ErrorKind::ArithmeticError,
                             "sqrt of negative number " + x.display());
        }
        return Value::decimal(std::sqrt(x.as_double()));
      },
      {"(sqrt :x)",
       {"x: PelNum - a non-negative number"},
       "Returns the square root of x.",
       "(sqrt 25) => 5"}));

  t.push_back(make_builtin(
      "len", {required_param("x")}, true,
      [](Interpreter&, const CallSite&, Args& a) {
        const Value& x = val(a[0]);
        if (x.is_list()) return Value::integer(static_cast<std::int64_t>(x.as_list().size()));
        if (x.is_string()) {
          std::int64_t n = 0;
          for (unsigned char c : x.as_string()) n += (c & 0xC0) != 0x80;
          return Value::integer(n);
        }
        mismatch("len expects a PelListLiteral or PelString, got " + x.display() + " (" +
                 x.type_name() + ")");
      },
      {"(len :x)",
       {"x: PelListLiteral or PelString - the collection to measure"},
       "Returns the number of elements of a list, or of characters of a string.",
       "(len [1 2 3 4]) => 4\n(len \"abc\") => 3"}));

  auto compare = [](const char* name, bool greater) {
    return [name, greater](Interpreter&, const CallSite&, Args& a) {
      double x = number_arg(val(a[0]), name, "x").as_double();
      double y = number_arg(val(a[1]), name, "y").as_double();
      return Value::boolean(greater ? x > y : x < y);
    };
  };
  t.push_back(make_builtin("gt", {required_param("x"), required_param("y")}, true,
                           compare("gt", true),
                           {"(gt :x :y)",
                            {"x: PelNum - left operand", "y: PelNum - right operand"},
                            "Returns #t when x is greater than y, otherwise #f.",
                            "(gt 3 2) => #t\n[1 2 3] |> (len) |> (gt 5) => #f"}));
  t.push_back(make_builtin("lt", {required_param("x"), required_param("y")}, true,
                           compare("lt", false),
                           {"(lt :x :y)",
                            {"x: PelNum - left operand", "y: PelNum - right operand"},
                            "Returns #t when x is less than y, otherwise #f.",
                            "(lt 2 3) => #t"}));
  t.push_back(make_builtin(
      "eq", {required_param("x"), required_param("y")}, true,
      [](Interpreter&, const CallSite&, Args& a) { return Value::boolean(val(a[0]) == val(a[1])); },
      {"(eq :x :y)",
       {"x: PelValue - any value", "y: PelValue - any value"},
       "Returns #t when x and y are structurally equal. Closures are equal only to themselves.",
       "(eq [1 2] [1 2]) => #t\n(eq 1 \"1\") => #f"}));

  t.push_back(make_builtin(
      "concat", {required_param("x"), required_param("y")}, true,
      [](Interpreter&, const CallSite&, Args& a) {
        const Value& x = val(a[0]);
        const Value& y = val(a[1]);
        if (!x.is_string()) {
          mismatch("concat expects :x to be a PelString, got " + x.display() + " (" +
                   x.type_name() + ")");
        }
        if (!y.is_string()) {
          mismatch("concat expects :y to be a PelString, got " + y.display() + " (" +
                   y.type_name() + ")");
        }
        return Value::string(x.as_string() + y.as_string());
      },
      {"(concat :x :y)",
       {"x: PelString - leading text", "y: PelString - trailing text"},
       "Returns the two strings joined together.",
       "(concat \"hello, \" \"world\") => \"hello, world\""}));

  t.push_back(make_builtin(
      "print",
      {required_param("vals"), optional_param("sep", Value::string("")),
       optional_param("nl", Value::boolean(true))},
      true, builtin_print,
      {"(print :vals :sep \"\" :nl #t)",
       {"vals: PelValue - a single value or a literal list of values to print",
        "sep: PelString (optional) - placed between list items, default \"\"",
        "nl: PelBool (optional) - end the output with a newline, default #t"},
       "Writes vals to standard output. A literal list prints its items one after another\n"
       "joined by sep. Strings are written without quotes.\n"
       "Returns vals unchanged.",
       "(print :vals [\"hello\" \"world\"] :sep \" \") prints hello world\n"
       "(print \"done\") prints done"}));

  t.push_back(make_builtin(
      "def", {required_param("name"), required_param("value")}, false, builtin_def,
      {"(def :name :value)",
       {"name: symbol - the name to bind (not evaluated)",
        "value: PelValue - the value to bind"},
       "Binds name to value in the current scope and returns the value.",
       "(def pi 3.14) => 3.14\n(lambda [:x] (* x 2)) |> (def double ^)"}));

  t.push_back(make_builtin(
      "lambda", {required_param("params"), required_param("body")}, false, builtin_lambda,
      {"(lambda :params :body)",
       {"params: literal list of keys - parameter names, a key followed by a value gives a "
        "default",
        "body: expression - evaluated when every required parameter is bound"},
       "Creates a closure over the current scope.",
       "(lambda [:x :y 10] (+ x y)) |> (def add10 ^)\n(add10 5) => 15"}));

  t.push_back(make_builtin(
      "if", {required_param("cond"), required_param("then"), optional_param("else", Value())},
      false, builtin_if,
      {"(if :cond :then :else #nil)",
       {"cond: PelBool - must evaluate to #t or #f",
        "then: expression - evaluated when cond is #t",
        "else: expression (optional) - evaluated when cond is #f, default #nil"},
       "Evaluates exactly one branch and returns its value.",
       "(if (gt 3 2) \"yes\" \"no\") => \"yes\"\n5 |> (if :cond (gt ^ 1) :then \"big\")"}));

  t.push_back(make_builtin(
      "case", {required_param("scrut"), required_param("body")}, false, builtin_case,
      {"(case :scrut :body)",
       {"scrut: PelValue - the value under test",
        "body: literal list - alternating conditions and results"},
       "Tries each condition in order and returns the result paired with the first one\n"
       "that holds, or #nil when none does. A call condition receives scrut as its first\n"
       "argument or at ^. A string condition is judged by the language model. #t always\n"
       "holds.",
       "(case [1 2 3] [(len) |> (gt 5) \"long\" #t \"short\"]) => \"short\""}));

  t.push_back(make_builtin(
      "for",
      {required_param("coll"), required_param("iterator"), required_param("body")}, false,
      builtin_for,
      {"(for :coll :iterator :body)",
       {"coll: PelListLiteral - the items to visit",
        "iterator: symbol - bound to each item in turn (not evaluated)",
        "body: expression - evaluated once per item"},
       "Returns a list holding the value of body for each item of coll.",
       "(for :coll [1 2 3] :iterator i :body (* i 2)) => [2 4 6]"}));

  t.push_back(make_builtin(
      "do", {required_param("exprs")}, false, builtin_do,
      {"(do :exprs)",
       {"exprs: literal list of expressions - evaluated in order"},
       "Evaluates the expressions one after another and returns the value of the last.\n"
       "(do a b c) is shorthand for (do [a b c]).",
       "(do [(print \"Starting...\") (def x 5) (+ x 10)]) => 15"}));

  t.push_back(make_builtin(
      "do/async", {required_param("exprs")}, false, builtin_do_async,
      {"(do/async :exprs)",
       {"exprs: literal list of expressions - evaluated concurrently"},
       "Evaluates the expressions concurrently, waits for all of them, and returns the\n"
       "value of the last one listed. If any fails, the first failure in listing order\n"
       "is raised.",
       "(do/async [(fetch-a) (fetch-b) (+ 1 2)]) => 3"}));

  t.push_back(make_builtin(
      "summarize", {required_param("text")}, true, builtin_summarize,
      {"(summarize :text)",
       {"text: PelString - non-empty text to condense"},
       "Asks the language model for a summary of text and returns it.",
       "(meeting ...) |> (summarize)"}));
  return t;
}

}  // namespace

void install_builtins(Environment& env) {
  for (const auto& c : core_table()) env.install_builtin(c->name(), Value::closure(c));
}

std::vector<std::string> core_builtin_names() {
  std::vector<std::string> names;
  for (const auto& c : core_table()) names.push_back(c->name());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace pel

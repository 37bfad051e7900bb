#include "pel/scheduler.hpp"

#include <map>

#include <json.hpp>

#include "pel/error.hpp"
#include "pel/interpreter.hpp"

namespace pel {

namespace {

// Argument `name` of a call to a builtin with parameters `params`, whether
// it was passed by position or by name.
ExprPtr argument(const ExprPtr& call, const std::vector<std::string>& params,
                 const std::string& name) {
  bool named = false;
  for (const auto& a : call->items) named |= a->kind == ExprKind::pair;
  if (named) {
    for (const auto& a : call->items) {
      if (a->kind == ExprKind::pair && a->name == name) return a->head;
    }
    return nullptr;
  }
  for (std::size_t i = 0; i < params.size() && i < call->items.size(); ++i) {
    if (params[i] == name) return call->items[i];
  }
  return nullptr;
}

bool is_call_to(const ExprPtr& e, std::string_view name) {
  return e->kind == ExprKind::call && e->head->is_symbol(name);
}

class Walker {
 public:
  explicit Walker(const std::set<std::string>& builtins) : builtins_(builtins) {}

  std::set<std::string> free;
  std::set<std::string> defines;

  void walk(const ExprPtr& e, std::set<std::string>& bound) {
    if (!e) return;
    switch (e->kind) {
      case ExprKind::literal:
      case ExprKind::quoted:
        return;
      case ExprKind::symbol:
        if (!e->is_caret() && !bound.count(e->name) && !builtins_.count(e->name)) {
          free.insert(e->name);
        }
        return;
      case ExprKind::pair:
        walk(e->head, bound);
        return;
      case ExprKind::literal_list:
      case ExprKind::pipe:
        for (const auto& i : e->items) walk(i, bound);
        return;
      case ExprKind::call:
        walk_call(e, bound);
        return;
    }
  }

 private:
  void walk_call(const ExprPtr& e, std::set<std::string>& bound) {
    if (is_call_to(e, "def")) {
      ExprPtr name = argument(e, {"name", "value"}, "name");
      walk(argument(e, {"name", "value"}, "value"), bound);
      if (name && name->kind == ExprKind::symbol) {
        defines.insert(name->name);
        bound.insert(name->name);
      } else {
        walk(name, bound);
      }
      return;
    }
    if (is_call_to(e, "lambda")) {
      ExprPtr params = argument(e, {"params", "body"}, "params");
      std::set<std::string> inner = bound;
      if (params && params->kind == ExprKind::literal_list) {
        for (const auto& p : params->items) {
          if (p->kind != ExprKind::pair) continue;
          walk(p->head, bound);
          inner.insert(p->name);
        }
      }
      walk(argument(e, {"params", "body"}, "body"), inner);
      return;
    }
    if (is_call_to(e, "for")) {
      static const std::vector<std::string> ps = {"coll", "iterator", "body"};
      walk(argument(e, ps, "coll"), bound);
      ExprPtr it = argument(e, ps, "iterator");
      std::set<std::string> inner = bound;
      if (it && it->kind == ExprKind::symbol) inner.insert(it->name);
      walk(argument(e, ps, "body"), inner);
      return;
    }
    walk(e->head, bound);
    for (const auto& a : e->items) walk(a, bound);
  }

  const std::set<std::string>& builtins_;
};

}  // namespace

std::vector<std::vector<std::size_t>> DepGraph::predecessors() const {
  std::vector<std::vector<std::size_t>> preds(nodes.size());
  for (const auto& [i, j] : edges) preds[j].push_back(i);
  return preds;
}

std::set<std::string> free_symbols(const ExprPtr& expr, const std::set<std::string>& bound,
                                   const std::set<std::string>& builtins) {
  Walker w(builtins);
  std::set<std::string> b = bound;
  w.walk(expr, b);
  return w.free;
}

std::set<std::string> defined_symbols(const ExprPtr& expr) {
  static const std::set<std::string> none;
  Walker w(none);
  std::set<std::string> b;
  w.walk(expr, b);
  return w.defines;
}

DepGraph analyze(const std::vector<ExprPtr>& program, const std::set<std::string>& builtins) {
  DepGraph g;
  std::vector<std::set<std::string>> direct(program.size());
  for (std::size_t i = 0; i < program.size(); ++i) {
    Walker w(builtins);
    std::set<std::string> bound;
    w.walk(program[i], bound);
    g.nodes.push_back(FormMeta{i, std::move(w.defines), w.free, {}});
    direct[i] = std::move(w.free);
  }

  for (std::size_t j = 0; j < program.size(); ++j) {
    std::set<std::string> uses;
    std::vector<std::string> work(direct[j].begin(), direct[j].end());
    while (!work.empty()) {
      std::string s = std::move(work.back());
      work.pop_back();
      if (!uses.insert(s).second) continue;
      for (std::size_t i = 0; i < j; ++i) {
        if (g.nodes[i].defines.count(s)) {
          for (const auto& t : g.nodes[i].reads) {
            if (!uses.count(t)) work.push_back(t);
          }
        }
      }
    }
    g.nodes[j].reads = std::move(uses);
  }

  auto meets = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& s : a) {
      if (b.count(s)) return true;
    }
    return false;
  };
  for (std::size_t j = 0; j < program.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      if (meets(b.reads, a.defines) || meets(b.defines, a.defines) || meets(b.defines, a.reads)) {
        g.edges.emplace_back(i, j);
      }
    }
  }
  return g;
}

Value run_concurrent(Interpreter& interp, const std::vector<ExprPtr>& program, const EnvPtr& env,
                     std::vector<ScheduleEvent>* trace) {
  EnvPtr root = env;
  while (root->parent()) root = root->parent();
  auto names = root->builtin_names();
  DepGraph g = analyze(program, std::set<std::string>(names.begin(), names.end()));

  auto outcomes = interp.tasks().run_graph(
      g.predecessors(), [&](std::size_t i) { return interp.eval(program[i], env); }, trace);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].state != TaskEngine::State::failed) continue;
    try {
      std::rethrow_exception(outcomes[i].error);
    } catch (PelException& e) {
      e.set_form_index(i);
      throw;
    }
  }
  return outcomes.empty() ? Value::nil() : outcomes.back().value;
}

void write_schedule_trace(std::ostream& out, const std::vector<ScheduleEvent>& events,
                          const std::string& agent) {
  for (const auto& e : events) {
    nlohmann::json j;
    if (!agent.empty()) j["agent"] = agent;
    j["form"] = e.index;
    j["event"] = e.start ? "start" : "finish";
    j["t_ms"] = e.t_ms;
    out << j.dump() << '\n';
  }
  out.flush();
}

}  // namespace pel

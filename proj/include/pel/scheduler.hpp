#pragma once

#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pel/ast.hpp"
#include "pel/environment.hpp"
#include "pel/task_engine.hpp"

namespace pel {

class Interpreter;

/// Syntactic summary of one top-level form.
struct FormMeta {
  std::size_t index = 0;
  std::set<std::string> defines;
  /// Free symbols the form reads directly.
  std::set<std::string> uses;
  /// `uses` closed over earlier definitions: reading a name defined by an
  /// earlier form may run a closure from that form, which reads what that
  /// form read. Edges are computed from this set.
  std::set<std::string> reads;
};

struct DepGraph {
  std::vector<FormMeta> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (i, j) with i < j

  /// Predecessor lists in the shape TaskEngine::run_graph expects.
  std::vector<std::vector<std::size_t>> predecessors() const;
};

/// Symbols `expr` reads that are not in `bound`, not builtins, not `^`, and
/// not inside quoted code. Lambda parameters and for iterators are scoped to
/// their bodies; a def makes its name bound for the rest of the walk.
std::set<std::string> free_symbols(const ExprPtr& expr, const std::set<std::string>& bound,
                                   const std::set<std::string>& builtins);

/// Names bound by any def inside `expr`, including conditional ones.
std::set<std::string> defined_symbols(const ExprPtr& expr);

/// Dependency graph with read-after-write, write-after-write and
/// write-after-read edges.
DepGraph analyze(const std::vector<ExprPtr>& program, const std::set<std::string>& builtins);

/// Evaluates the forms concurrently in `env`, each as soon as its
/// predecessors are done. Returns the last form's value. If forms fail, their
/// dependents are cancelled, independent forms still run, and the failure of
/// the earliest form is rethrown with its form index.
Value run_concurrent(Interpreter& interp, const std::vector<ExprPtr>& program, const EnvPtr& env,
                     std::vector<ScheduleEvent>* trace = nullptr);

/// Writes one JSON object per line for each event:
/// {"event":"start"|"finish","form":i,"t_ms":x}, plus "agent" when given.
void write_schedule_trace(std::ostream& out, const std::vector<ScheduleEvent>& events,
                          const std::string& agent = "");

}  // namespace pel

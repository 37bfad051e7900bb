#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <vector>

#include "pel/value.hpp"

namespace pel {

/// Start/finish record of one task, in milliseconds since the run began.
struct ScheduleEvent {
  std::size_t index;
  bool start;
  double t_ms;
};

/// Runs dependency graphs of tasks on worker threads.
///
/// At most `max_parallel` tasks execute at once across every graph running
/// on the same engine, including graphs started from inside a task (a task
/// that waits on a nested graph gives its slot back while it waits).
class TaskEngine {
 public:
  enum class State { done, failed, cancelled };

  struct Outcome {
    State state = State::cancelled;
    Value value;
    std::exception_ptr error;
  };

  using Work = std::function<Value(std::size_t)>;

  explicit TaskEngine(std::size_t max_parallel);

  std::size_t max_parallel() const { return max_parallel_; }

  /// `preds[i]` lists the tasks that must finish before task `i` starts.
  /// A task whose predecessor failed or was cancelled is cancelled.
  std::vector<Outcome> run_graph(const std::vector<std::vector<std::size_t>>& preds,
                                 const Work& work,
                                 std::vector<ScheduleEvent>* trace = nullptr);

  /// Independent tasks.
  std::vector<Outcome> run_all(std::size_t count, const Work& work);

  /// Default slot count: hardware parallelism, but never below 4 because
  /// tasks are usually waiting on LLM backends rather than computing.
  static std::size_t default_parallelism();

 private:
  void acquire();
  void release();

  std::size_t max_parallel_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_slots_;
};

}  // namespace pel

#include "pel/task_engine.hpp"

#include <algorithm>
#include <thread>

namespace pel {

namespace {

// Engine whose slot the current thread holds, if any.
thread_local const TaskEngine* tls_slot_owner = nullptr;

}  // namespace

TaskEngine::TaskEngine(std::size_t max_parallel)
    : max_parallel_(std::max<std::size_t>(1, max_parallel)), free_slots_(max_parallel_) {}

std::size_t TaskEngine::default_parallelism() {
  return std::max<std::size_t>(4, std::thread::hardware_concurrency());
}

void TaskEngine::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_slots_ > 0; });
  --free_slots_;
}

void TaskEngine::release() {
  {
    std::lock_guard lock(mu_);
    ++free_slots_;
  }
  cv_.notify_one();
}

std::vector<TaskEngine::Outcome> TaskEngine::run_all(std::size_t count, const Work& work) {
  return run_graph(std::vector<std::vector<std::size_t>>(count), work);
}

std::vector<TaskEngine::Outcome> TaskEngine::run_graph(
    const std::vector<std::vector<std::size_t>>& preds, const Work& work,
    std::vector<ScheduleEvent>* trace) {
  enum class Status { pending, running, finished };
  const std::size_t n = preds.size();
  std::vector<Outcome> out(n);
  std::vector<Status> status(n, Status::pending);
  std::size_t finished = 0;
  std::mutex m;
  std::condition_variable done_cv;
  std::vector<std::thread> threads;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const bool holding_slot = tls_slot_owner == this;
  if (holding_slot) release();

  auto body = [&](std::size_t i) {
    acquire();
    const TaskEngine* previous = tls_slot_owner;
    tls_slot_owner = this;
    if (trace) {
      std::lock_guard lock(m);
      trace->push_back({i, true, elapsed_ms()});
    }
    Outcome o;
    try {
      o.value = work(i);
      o.state = State::done;
    } catch (...) {
      o.error = std::current_exception();
      o.state = State::failed;
    }
    tls_slot_owner = previous;
    release();
    {
      std::lock_guard lock(m);
      if (trace) trace->push_back({i, false, elapsed_ms()});
      out[i] = std::move(o);
      status[i] = Status::finished;
      ++finished;
    }
    done_cv.notify_all();
  };

  {
    std::unique_lock lock(m);
    while (finished < n) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (status[i] != Status::pending) continue;
        bool ready = true;
        bool blocked = false;
        for (std::size_t p : preds[i]) {
          if (status[p] != Status::finished) {
            ready = false;
          } else if (out[p].state != State::done) {
            blocked = true;
          }
        }
        if (blocked) {
          out[i].state = State::cancelled;
          status[i] = Status::finished;
          ++finished;
          changed = true;
        } else if (ready) {
          status[i] = Status::running;
          threads.emplace_back(body, i);
          changed = true;
        }
      }
      if (!changed && finished < n) done_cv.wait(lock);
    }
  }
  for (auto& t : threads) t.join();

  if (holding_slot) acquire();
  return out;
}

}  // namespace pel

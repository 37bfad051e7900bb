#pragma once

#include <sstream>
#include <string>

#include "pel/error.hpp"
#include "pel/interpreter.hpp"
#include "pel/llm.hpp"
#include "pel/parser.hpp"

namespace pel::testing {

/// An interpreter with captured output and its global environment.
struct Harness {
  std::ostringstream out;
  Interpreter interp;
  EnvPtr env;

  explicit Harness(std::shared_ptr<llm::Backend> backend = nullptr, std::size_t jobs = 4)
      : interp(InterpreterOptions{std::move(backend), &out, jobs}), env(interp.make_global_env()) {}

  /// Evaluates every form of `src` and returns the last value.
  Value run(const std::string& src) {
    Value last;
    for (const auto& form : parse_source(src)) last = interp.eval(form, env);
    return last;
  }

  std::string show(const std::string& src) { return run(src).display(); }

  /// Kind of the error `src` raises, or nullopt when it succeeds.
  std::optional<ErrorKind> error_of(const std::string& src) {
    try {
      run(src);
    } catch (const PelException& e) {
      return e.kind();
    }
    return std::nullopt;
  }
};

inline std::shared_ptr<llm::ScriptedMock> mock(const std::string& script) {
  return std::make_shared<llm::ScriptedMock>(llm::MockScript::parse(script));
}

}  // namespace pel::testing

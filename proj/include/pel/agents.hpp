#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pel/environment.hpp"
#include "pel/llm.hpp"

namespace pel {

class Interpreter;

namespace agents {

enum class AgentKind { router, terminal };

struct AgentSpec {
  std::string path;  // "MAIN/MARKETING/SOCIAL_MEDIA"
  std::string role;
  AgentKind kind = AgentKind::terminal;
  std::vector<std::string> children;
  std::vector<std::string> tools;

  llm::Persona persona() const { return {path, role, tools}; }
};

/// The agent tree of an organisation file.
///
/// The file is a JSON array of `{path, role, kind, children, tools}` objects
/// (or an object holding that array under "agents"). Exactly one agent is
/// the root; every other agent is listed as a child of exactly one router,
/// and a child's path extends its parent's path with "/".
class Registry {
 public:
  /// Throws MalformedOrg.
  static Registry parse(std::string_view json_text);
  /// Throws IoError or MalformedOrg.
  static Registry load(const std::filesystem::path& file);

  const std::vector<AgentSpec>& agents() const { return agents_; }
  const AgentSpec& root() const { return agents_.at(root_); }
  /// Null when no agent has this path.
  const AgentSpec* find(std::string_view path) const;

 private:
  std::vector<AgentSpec> agents_;
  std::size_t root_ = 0;
};

struct Turn {
  std::string speaker;
  std::string utterance;
};

struct MeetingTranscript {
  std::vector<std::string> participants;
  std::string topic;
  std::size_t rounds = 0;
  std::vector<Turn> turns;

  /// "SPEAKER: utterance" lines joined with newlines.
  std::string render() const;
};

/// One line of the orchestration log.
struct Event {
  std::size_t depth = 0;  // nesting of agent calls, the outermost is 0
  std::string agent;
  std::string what;  // call, reply, program, retry, turn, result
  std::string detail;
};

struct Options {
  /// Regenerations a router may request after its program fails.
  std::size_t heal_attempts = 3;
  /// Run router programs with the dependency scheduler.
  bool async = false;
  /// Receives `--trace-schedule` JSON lines for router programs run async.
  std::ostream* trace = nullptr;
};

/// Connects a Registry to an interpreter: agent paths become callable
/// closures, routers run the Pel programs their model writes, and the
/// `meeting` builtin is available.
class Orchestrator : public std::enable_shared_from_this<Orchestrator> {
 public:
  static std::shared_ptr<Orchestrator> create(Registry registry, Options options = {});

  const Registry& registry() const { return registry_; }
  const Options& options() const { return options_; }

  /// Defines every agent path and `meeting` in the root frame `env`.
  void install(Environment& env);

  /// Calls `agent`. Callers outside the agent's scope get UnknownAgent.
  Value call(Interpreter& interp, const AgentSpec& agent, const std::string& query,
             const Value& context, std::string_view expect, const EnvPtr& caller);

  /// Hands `task` to the root agent. For a router the raw final value of its
  /// program is returned without coercion.
  Value run_task(Interpreter& interp, const std::string& task, const Value& context = Value());

  MeetingTranscript meeting(Interpreter& interp, const std::vector<std::string>& group,
                            std::size_t rounds, const std::string& topic, const Value& context,
                            const EnvPtr& caller);

  std::vector<Event> events() const;
  /// The event log, one indented line per event.
  std::string log() const;

 private:
  Orchestrator(Registry registry, Options options)
      : registry_(std::move(registry)), options_(options) {}

  Value run_router(Interpreter& interp, const AgentSpec& router, const std::string& task,
                   const Value& context);
  Value execute_program(Interpreter& interp, const AgentSpec& router, const std::string& source,
                        const Value& context);
  const AgentSpec& reachable(const std::string& path, const EnvPtr& caller) const;
  void record(const std::string& agent, std::string what, std::string detail);

  Registry registry_;
  Options options_;
  mutable std::mutex mu_;
  std::vector<Event> events_;
};

}  // namespace agents
}  // namespace pel

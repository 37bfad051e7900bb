#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pel/error.hpp"
#include "pel/value.hpp"

namespace pel::llm {

/// What the interpreter is asking the model for. Mock scripts match on it.
enum class RequestKind { condition, fix, agent, summarize, complete };

const char* to_string(RequestKind kind);
std::optional<RequestKind> parse_kind(std::string_view text);

/// One round trip to a model.
///
/// `subject` is the compact text scripted mocks match against. `prompt` is
/// the full instruction sent to a real chat endpoint. `input` is the part a
/// mock reply may echo back through `{input}`.
struct Request {
  RequestKind kind = RequestKind::complete;
  std::string subject;
  std::string input;
  std::string prompt;
};

/// How an agent presents itself to the model.
struct Persona {
  std::string path;
  std::string role;
  std::vector<std::string> tools;
};

/// Versioned prompt templates. `{name}` placeholders are filled by fill().
namespace prompts {
inline constexpr std::string_view kVersion = "pel-prompts/1";
extern const std::string_view condition;
extern const std::string_view summarize;
extern const std::string_view fix;
extern const std::string_view agent;
extern const std::string_view router;
extern const std::string_view meeting;

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& vars);
}  // namespace prompts

/// Accepts true/false/yes/no in any case, otherwise throws BackendError.
bool parse_bool_reply(std::string_view reply);

/// Converts a reply into the type an agent call asked for ("string",
/// "number" or "bool"). Throws CoercionError.
Value coerce_reply(std::string_view reply, std::string_view expect);

/// Removes a surrounding Markdown code fence, if any, and trims.
std::string strip_code_fence(std::string_view reply);

/// Base of every model backend. Subclasses implement send(); the typed
/// helpers build the request and validate the reply.
class Backend {
 public:
  virtual ~Backend() = default;

  std::string complete(const std::string& prompt);
  /// Truth of a natural-language `condition` about `scrutinee`.
  bool eval_condition(const Value& scrutinee, const std::string& condition);
  std::string summarize_text(const std::string& text);
  /// Replacement source for `snippet`, already checked to parse.
  std::string propose_fix(const PelException& error, const std::string& snippet);
  /// A leaf agent's answer, coerced to `expect`.
  Value agent_reply(const Persona& agent, const std::string& query, const Value& context,
                    std::string_view expect);
  /// Pel source a router agent will run to serve `task`.
  std::string router_program(const Persona& router, const std::vector<Persona>& children,
                             const std::string& task, const Value& context,
                             const std::string& feedback);
  /// One participant's turn in a meeting.
  std::string meeting_turn(const Persona& speaker, const std::string& topic,
                           const Value& context, const std::string& transcript);

 protected:
  virtual std::string send(const Request& request) = 0;
};

/// Rules of a scripted mock, one per line:
///
///     KIND[@ms] | pattern | reply
///
/// KIND is condition, fix, agent, summarize or complete. The pattern is `*`
/// or substrings joined with `&&` that must all occur in the request
/// subject. The reply may use `{input}` and `\n`. `@ms` delays the reply.
/// `#` starts a comment line. `%default echo` makes unmatched requests
/// echo their input instead of failing.
struct MockScript {
  struct Rule {
    RequestKind kind = RequestKind::complete;
    std::vector<std::string> patterns;  // empty matches anything
    std::string reply;
    std::chrono::milliseconds delay{0};
  };
  enum class Fallback { error, echo };

  std::vector<Rule> rules;
  Fallback fallback = Fallback::error;

  static MockScript parse(std::string_view text);
  static MockScript load(const std::filesystem::path& file);
};

/// Deterministic backend that answers from a MockScript. The first rule
/// matching kind and subject wins. Thread safe.
class ScriptedMock : public Backend {
 public:
  ScriptedMock() = default;
  explicit ScriptedMock(MockScript script) : script_(std::move(script)) {}

  void add_rule(MockScript::Rule rule);
  std::size_t calls() const { return calls_.load(); }
  std::vector<Request> history() const;

 protected:
  std::string send(const Request& request) override;

 private:
  mutable std::mutex mu_;
  MockScript script_;
  std::vector<Request> history_;
  std::atomic<std::size_t> calls_{0};
};

/// OpenAI-compatible chat completion endpoint.
class HttpChat : public Backend {
 public:
  struct Config {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{30};

    /// PEL_LLM_URL, PEL_LLM_MODEL, PEL_LLM_KEY.
    static Config from_env();
  };

  explicit HttpChat(Config config) : config_(std::move(config)) {}

 protected:
  std::string send(const Request& request) override;

 private:
  Config config_;
};

}  // namespace pel::llm

#include "pel/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pel/parser.hpp"

namespace pel::llm {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string context_suffix(const Value& context) {
  return context.is_nil() ? std::string() : "\ncontext: " + context.print_form();
}

std::string join_tools(const std::vector<std::string>& tools) {
  std::string out;
  for (const auto& t : tools) out += (out.empty() ? "" : ", ") + t;
  return out.empty() ? "none" : out;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char c = s[i + 1];
      if (c == 'n') { out += '\n'; ++i; continue; }
      if (c == 't') { out += '\t'; ++i; continue; }
      if (c == '\\') { out += '\\'; ++i; continue; }
    }
    out += s[i];
  }
  return out;
}

std::string replace_all(std::string s, std::string_view what, std::string_view with) {
  for (std::size_t pos = s.find(what); pos != std::string::npos;
       pos = s.find(what, pos + with.size())) {
    s.replace(pos, what.size(), with);
  }
  return s;
}

}  // namespace

const char* to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::condition: return "condition";
    case RequestKind::fix: return "fix";
    case RequestKind::agent: return "agent";
    case RequestKind::summarize: return "summarize";
    case RequestKind::complete: return "complete";
  }
  return "?";
}

std::optional<RequestKind> parse_kind(std::string_view text) {
  for (auto k : {RequestKind::condition, RequestKind::fix, RequestKind::agent,
                 RequestKind::summarize, RequestKind::complete}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

namespace prompts {

const std::string_view condition =
    "You judge conditions inside a running program.\n"
    "Value: {value}\n"
    "Condition: {condition}\n"
    "Answer with exactly one word: true or false.";

const std::string_view summarize =
    "Summarize the following text in a few sentences. Reply with the summary only.\n\n{text}";

const std::string_view fix =
    "A program written in Pel failed.\n"
    "Pel syntax: (f a b) calls f; (f :name value) passes named arguments; "
    "[a b] is a list; x |> (f) pipes x into f as its first argument or at ^.\n"
    "Error: {error}\n"
    "{context}"
    "Failing code:\n{code}\n"
    "Reply with a corrected replacement for the failing code only, as Pel source, "
    "with no explanation.";

const std::string_view agent =
    "You are the agent {path}. Role: {role}. Tools: {tools}.\n"
    "Answer the query below. Reply with a {expect} and nothing else.\n"
    "Query: {query}\n"
    "{context}";

const std::string_view router =
    "You are the router agent {path}. Role: {role}.\n"
    "You coordinate these agents, each callable as (PATH :query \"...\" :context value):\n"
    "{children}"
    "Write a Pel program that accomplishes the task. Use def to name results, "
    "do/async to run independent calls concurrently, and make the last form the answer.\n"
    "Only the listed agents and core builtins are available.\n"
    "Task: {task}\n"
    "{context}"
    "{feedback}"
    "Reply with Pel source only.";

const std::string_view meeting =
    "You are {path} ({role}) in a meeting about: {topic}\n"
    "{context}"
    "Transcript so far:\n{transcript}\n"
    "Give your next contribution in one or two sentences.";

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out(tmpl);
  for (const auto& [k, v] : vars) out = replace_all(out, "{" + k + "}", v);
  return out;
}

}  // namespace prompts

bool parse_bool_reply(std::string_view reply) {
  std::string t = lower(trim(reply));
  while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
  if (t == "true" || t == "yes") return true;
  if (t == "false" || t == "no") return false;
  throw PelException(ErrorKind::BackendError,
                     "expected a true/false answer from the model, got \"" + trim(reply) + "\"");
}

Value coerce_reply(std::string_view reply, std::string_view expect) {
  std::string t = trim(reply);
  if (expect == "string") return Value::string(t);
  if (expect == "num" || expect == "number") {
    static const std::regex number(R"(-?[0-9]+(\.[0-9]+)?)");
    if (!std::regex_match(t, number)) {
      throw PelException(ErrorKind::CoercionError,
                         "agent reply \"" + t + "\" is not a number");
    }
    return Value::number(Number::parse(t));
  }
  if (expect == "bool") {
    try {
      return Value::boolean(parse_bool_reply(t));
    } catch (const PelException&) {
      throw PelException(ErrorKind::CoercionError, "agent reply \"" + t + "\" is not a bool");
    }
  }
  throw PelException(ErrorKind::CoercionError,
                     "unknown :expect \"" + std::string(expect) +
                         "\" (use \"string\", \"num\" or \"bool\")");
}

std::string strip_code_fence(std::string_view reply) {
  std::string t = trim(reply);
  if (t.rfind("```", 0) != 0) return t;
  auto first_nl = t.find('\n');
  if (first_nl == std::string::npos) return trim(std::string_view(t).substr(3));
  auto close = t.rfind("```");
  if (close == std::string::npos || close <= first_nl) close = t.size();
  return trim(std::string_view(t).substr(first_nl + 1, close - first_nl - 1));
}

std::string Backend::complete(const std::string& prompt) {
  return send({RequestKind::complete, prompt, prompt, prompt});
}

bool Backend::eval_condition(const Value& scrutinee, const std::string& condition) {
  Request r;
  r.kind = RequestKind::condition;
  r.subject = "condition: " + condition + "\nvalue: " + scrutinee.display();
  r.input = condition;
  r.prompt = prompts::fill(prompts::condition,
                           {{"value", scrutinee.display()}, {"condition", condition}});
  return parse_bool_reply(send(r));
}

std::string Backend::summarize_text(const std::string& text) {
  Request r;
  r.kind = RequestKind::summarize;
  r.subject = text;
  r.input = text;
  r.prompt = prompts::fill(prompts::summarize, {{"text", text}});
  return trim(send(r));
}

std::string Backend::propose_fix(const PelException& error, const std::string& snippet) {
  Request r;
  r.kind = RequestKind::fix;
  r.subject = "error: " + error.message() + "\ncode: " + snippet;
  r.input = snippet;
  r.prompt = prompts::fill(
      prompts::fix,
      {{"error", error.message()},
       {"context", error.context() ? "Documentation of the failing function:\n" +
                                         error.context()->render()
                                   : std::string()},
       {"code", snippet}});
  std::string code = strip_code_fence(send(r));
  try {
    auto forms = parse_source(code);
    if (forms.empty()) throw PelException(ErrorKind::ParseError, "empty program");
  } catch (const PelException& e) {
    throw PelException(ErrorKind::UnparseableFix,
                       "the proposed fix does not parse (" + e.message() + "): " + code);
  }
  return code;
}

Value Backend::agent_reply(const Persona& agent, const std::string& query, const Value& context,
                           std::string_view expect) {
  Request r;
  r.kind = RequestKind::agent;
  r.subject = agent.path + " " + query + context_suffix(context);
  r.input = query;
  r.prompt = prompts::fill(prompts::agent, {{"path", agent.path},
                                            {"role", agent.role},
                                            {"tools", join_tools(agent.tools)},
                                            {"expect", std::string(expect)},
                                            {"query", query},
                                            {"context", context_suffix(context).substr(
                                                            context.is_nil() ? 0 : 1)}});
  return coerce_reply(send(r), expect);
}

std::string Backend::router_program(const Persona& router, const std::vector<Persona>& children,
                                    const std::string& task, const Value& context,
                                    const std::string& feedback) {
  std::string listing;
  for (const auto& c : children) {
    listing += "- " + c.path + ": " + c.role + " (tools: " + join_tools(c.tools) + ")\n";
  }
  Request r;
  r.kind = RequestKind::agent;
  r.subject = router.path + " " + task + context_suffix(context) +
              (feedback.empty() ? "" : "\nfeedback: " + feedback);
  r.input = task;
  r.prompt = prompts::fill(
      prompts::router,
      {{"path", router.path},
       {"role", router.role},
       {"children", listing},
       {"task", task},
       {"context", context.is_nil() ? "" : "Context: " + context.print_form() + "\n"},
       {"feedback", feedback.empty()
                        ? ""
                        : "Your previous program failed: " + feedback + "\nFix it.\n"}});
  return strip_code_fence(send(r));
}

std::string Backend::meeting_turn(const Persona& speaker, const std::string& topic,
                                  const Value& context, const std::string& transcript) {
  Request r;
  r.kind = RequestKind::agent;
  r.subject = speaker.path + " meeting: " + topic + context_suffix(context) + "\n" + transcript;
  r.input = topic;
  r.prompt = prompts::fill(
      prompts::meeting,
      {{"path", speaker.path},
       {"role", speaker.role},
       {"topic", topic},
       {"context", context.is_nil() ? "" : "Context: " + context.print_form() + "\n"},
       {"transcript", transcript.empty() ? "(nothing yet)" : transcript}});
  return trim(send(r));
}

MockScript MockScript::parse(std::string_view text) {
  MockScript script;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw PelException(ErrorKind::IoError,
                       "mock script line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '%') {
      if (t == "%default echo") {
        script.fallback = Fallback::echo;
      } else if (t == "%default error") {
        script.fallback = Fallback::error;
      } else {
        fail("unknown directive " + t);
      }
      continue;
    }
    auto bar1 = t.find('|');
    auto bar2 = bar1 == std::string::npos ? bar1 : t.find('|', bar1 + 1);
    if (bar2 == std::string::npos) fail("expected KIND | pattern | reply");
    Rule rule;
    std::string kind = trim(std::string_view(t).substr(0, bar1));
    if (auto at = kind.find('@'); at != std::string::npos) {
      try {
        rule.delay = std::chrono::milliseconds(std::stoll(kind.substr(at + 1)));
      } catch (const std::exception&) {
        fail("bad delay in " + kind);
      }
      kind = kind.substr(0, at);
    }
    auto k = parse_kind(kind);
    if (!k) fail("unknown request kind " + kind);
    rule.kind = *k;
    std::string pattern = trim(std::string_view(t).substr(bar1 + 1, bar2 - bar1 - 1));
    if (pattern != "*") {
      std::size_t start = 0;
      while (true) {
        auto amp = pattern.find("&&", start);
        std::string part = trim(std::string_view(pattern).substr(
            start, amp == std::string::npos ? std::string::npos : amp - start));
        if (!part.empty()) rule.patterns.push_back(unescape(part));
        if (amp == std::string::npos) break;
        start = amp + 2;
      }
    }
    rule.reply = unescape(trim(std::string_view(t).substr(bar2 + 1)));
    script.rules.push_back(std::move(rule));
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PelException(ErrorKind::IoError, "cannot read mock script " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ScriptedMock::add_rule(MockScript::Rule rule) {
  std::lock_guard lock(mu_);
  script_.rules.push_back(std::move(rule));
}

std::vector<Request> ScriptedMock::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

std::string ScriptedMock::send(const Request& request) {
  ++calls_;
  std::optional<MockScript::Rule> hit;
  MockScript::Fallback fallback;
  {
    std::lock_guard lock(mu_);
    history_.push_back(request);
    fallback = script_.fallback;
    for (const auto& rule : script_.rules) {
      if (rule.kind != request.kind) continue;
      bool all = std::all_of(rule.patterns.begin(), rule.patterns.end(), [&](const auto& p) {
        return request.subject.find(p) != std::string::npos;
      });
      if (all) {
        hit = rule;
        break;
      }
    }
  }
  if (!hit) {
    if (fallback == MockScript::Fallback::echo) return request.input;
    auto first_line = request.subject.substr(0, request.subject.find('\n'));
    throw PelException(ErrorKind::BackendError, std::string("scripted mock has no rule for ") +
                                                    to_string(request.kind) + " request \"" +
                                                    first_line + "\"");
  }
  if (hit->delay.count() > 0) std::this_thread::sleep_for(hit->delay);
  return replace_all(hit->reply, "{input}", request.input);
}

HttpChat::Config HttpChat::Config::from_env() {
  Config c;
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  c.base_url = get("PEL_LLM_URL");
  c.model = get("PEL_LLM_MODEL");
  c.api_key = get("PEL_LLM_KEY");
  if (c.model.empty()) c.model = "default";
  return c;
}

std::string HttpChat::send(const Request& request) {
  if (config_.base_url.empty()) {
    throw PelException(ErrorKind::BackendError,
                       "LLM backend not configured (set PEL_LLM_URL or use a mock script)");
  }
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw PelException(ErrorKind::BackendError, "malformed PEL_LLM_URL " + config_.base_url);
  }
  std::string path = m[2].matched ? m[2].str() : std::string();
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  nlohmann::json body = {{"model", config_.model},
                         {"temperature", 0},
                         {"messages", {{{"role", "user"}, {"content", request.prompt}}}}};

  httplib::Client client(m[1].str());
  const auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw PelException(ErrorKind::BackendError,
                       "LLM request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw PelException(ErrorKind::BackendError,
                       "LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw PelException(ErrorKind::BackendError,
                       std::string("unexpected LLM response shape: ") + e.what());
  }
}

}  // namespace pel::llm

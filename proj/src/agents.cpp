#include "pel/agents.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pel/builtins.hpp"
#include "pel/grammar.hpp"
#include "pel/interpreter.hpp"
#include "pel/parser.hpp"
#include "pel/scheduler.hpp"

namespace pel::agents {

namespace {

using json = nlohmann::json;
using Args = std::vector<Arg>;

thread_local std::size_t call_depth = 0;

struct DepthScope {
  DepthScope() { ++call_depth; }
  ~DepthScope() { --call_depth; }
};

[[noreturn]] void malformed(const std::string& why) {
  throw PelException(ErrorKind::MalformedOrg, why);
}

std::vector<std::string> string_list(const json& obj, const char* field, const std::string& path) {
  std::vector<std::string> out;
  if (!obj.contains(field) || obj[field].is_null()) return out;
  if (!obj[field].is_array()) malformed("agent " + path + ": " + field + " must be an array");
  for (const auto& item : obj[field]) {
    if (!item.is_string()) malformed("agent " + path + ": " + field + " must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

const Value& value_arg(const Arg& a) { return std::get<Value>(a); }

const std::string& string_arg(const Arg& a, const std::string& who, const char* param) {
  const Value& v = value_arg(a);
  if (!v.is_string()) {
    throw PelException(ErrorKind::TypeMismatch, who + " expects :" + param +
                                                    " to be a PelString, got " + v.type_name());
  }
  return v.as_string();
}

// Router programs return arbitrary values; agent callers asked for a type.
Value coerce_value(const Value& v, std::string_view expect) {
  if (expect == "string" && v.is_string()) return v;
  if ((expect == "num" || expect == "number") && v.is_number()) return v;
  if (expect == "bool" && v.is_bool()) return v;
  return llm::coerce_reply(v.is_string() ? v.as_string() : v.print_form(), expect);
}

std::string describe(const PelException& e) {
  std::string s = std::string(to_string(e.kind())) + ": " + e.message();
  if (e.span()) s += " (line " + std::to_string(e.span()->line) + ")";
  return s;
}

// Errors raised before the program runs: the model wrote bad code.
bool is_static_failure(ErrorKind k) {
  return k == ErrorKind::LexError || k == ErrorKind::ParseError ||
         k == ErrorKind::CapabilityViolation;
}

}  // namespace

const AgentSpec* Registry::find(std::string_view path) const {
  for (const auto& a : agents_) {
    if (a.path == path) return &a;
  }
  return nullptr;
}

Registry Registry::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed(std::string("organisation file is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("agents")) doc = doc["agents"];
  if (!doc.is_array() || doc.empty()) malformed("organisation file must list at least one agent");

  Registry reg;
  std::map<std::string, std::size_t> index;
  for (const auto& obj : doc) {
    if (!obj.is_object() || !obj.contains("path") || !obj["path"].is_string()) {
      malformed("every agent needs a string \"path\"");
    }
    AgentSpec spec;
    spec.path = obj["path"].get<std::string>();
    if (spec.path.empty()) malformed("agent path must not be empty");
    if (obj.contains("role")) {
      if (!obj["role"].is_string()) malformed("agent " + spec.path + ": role must be a string");
      spec.role = obj["role"].get<std::string>();
    }
    std::string kind = obj.value("kind", std::string());
    if (kind == "router") {
      spec.kind = AgentKind::router;
    } else if (kind == "terminal") {
      spec.kind = AgentKind::terminal;
    } else {
      malformed("agent " + spec.path + ": kind must be \"router\" or \"terminal\"");
    }
    spec.children = string_list(obj, "children", spec.path);
    spec.tools = string_list(obj, "tools", spec.path);
    if (index.count(spec.path)) malformed("duplicate agent path " + spec.path);
    index[spec.path] = reg.agents_.size();
    reg.agents_.push_back(std::move(spec));
  }

  std::map<std::string, std::string> parent_of;
  for (const auto& a : reg.agents_) {
    if (a.kind == AgentKind::router && a.children.empty()) {
      malformed("router " + a.path + " has no children");
    }
    if (a.kind == AgentKind::terminal && !a.children.empty()) {
      malformed("terminal " + a.path + " cannot have children");
    }
    for (const auto& c : a.children) {
      if (!index.count(c)) malformed("agent " + a.path + " lists unknown child " + c);
      if (c.rfind(a.path + "/", 0) != 0) {
        malformed("child " + c + " of " + a.path + " must have the prefix " + a.path + "/");
      }
      auto [it, fresh] = parent_of.emplace(c, a.path);
      if (!fresh) malformed("agent " + c + " has two parents, " + it->second + " and " + a.path);
    }
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < reg.agents_.size(); ++i) {
    if (!parent_of.count(reg.agents_[i].path)) roots.push_back(i);
  }
  if (roots.size() != 1) {
    std::string names;
    for (auto r : roots) names += " " + reg.agents_[r].path;
    malformed(roots.empty() ? "organisation has no root agent (cycle)"
                            : "organisation needs exactly one root agent, found:" + names);
  }
  reg.root_ = roots[0];

  // With one root and one parent per agent, a cycle shows up as agents the
  // root cannot reach.
  std::set<std::string> seen;
  std::vector<std::string> work = {reg.root().path};
  while (!work.empty()) {
    std::string p = work.back();
    work.pop_back();
    if (!seen.insert(p).second) malformed("cycle through agent " + p);
    for (const auto& c : reg.agents_[index[p]].children) work.push_back(c);
  }
  if (seen.size() != reg.agents_.size()) malformed("organisation contains a cycle");
  return reg;
}

Registry Registry::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PelException(ErrorKind::IoError, "cannot read organisation file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string MeetingTranscript::render() const {
  std::string out;
  for (const auto& t : turns) {
    if (!out.empty()) out += '\n';
    out += t.speaker + ": " + t.utterance;
  }
  return out;
}

std::shared_ptr<Orchestrator> Orchestrator::create(Registry registry, Options options) {
  return std::shared_ptr<Orchestrator>(new Orchestrator(std::move(registry), options));
}

void Orchestrator::install(Environment& env) {
  auto self = shared_from_this();
  for (const auto& spec : registry_.agents()) {
    const std::string path = spec.path;
    Docstring doc{"(" + path + " :query :context #nil :expect \"string\")",
                  {"query: PelString - the request for this agent",
                   "context: PelValue (optional) - extra information shown to the agent",
                   "expect: PelString (optional) - \"string\", \"num\" or \"bool\""},
                  (spec.kind == AgentKind::router ? "Router agent. " : "Terminal agent. ") +
                      spec.role,
                  "(" + path + " :query \"...\" :expect \"string\") |> (def answer ^)"};
    auto fn = [self, path](Interpreter& in, const CallSite& site, Args& a) {
      const std::string& query = string_arg(a[0], path, "query");
      const std::string& expect = string_arg(a[2], path, "expect");
      return self->call(in, *self->registry_.find(path), query, value_arg(a[1]), expect, site.env);
    };
    env.install_builtin(
        path, Value::closure(make_builtin(path,
                                          {required_param("query"),
                                           optional_param("context", Value()),
                                           optional_param("expect", Value::string("string"))},
                                          true, fn, std::move(doc))));
  }

  auto meeting_fn = [self](Interpreter& in, const CallSite& site, Args& a) {
    const Value& group = value_arg(a[0]);
    if (!group.is_list()) {
      throw PelException(ErrorKind::TypeMismatch,
                         std::string("meeting expects :group to be a PelList, got ") +
                             group.type_name());
    }
    std::vector<std::string> names;
    for (const auto& g : group.as_list()) {
      if (!g.is_string()) {
        throw PelException(ErrorKind::TypeMismatch, "meeting expects :group to hold agent paths");
      }
      names.push_back(g.as_string());
    }
    const Value& rounds = value_arg(a[1]);
    if (!rounds.is_number() || !rounds.as_number().is_integer()) {
      throw PelException(ErrorKind::TypeMismatch, "meeting expects :rounds to be a whole number");
    }
    if (rounds.as_number().as_double() < 1) {
      throw PelException(ErrorKind::PreconditionFailed, "meeting needs at least one round");
    }
    const std::string& topic = string_arg(a[2], "meeting", "topic");
    auto t = self->meeting(in, names, static_cast<std::size_t>(rounds.as_number().as_double()),
                           topic, value_arg(a[3]), site.env);
    return Value::string(t.render());
  };
  env.install_builtin(
      "meeting",
      Value::closure(make_builtin(
          "meeting",
          {required_param("group"), required_param("rounds"), required_param("topic"),
           optional_param("context", Value())},
          true, meeting_fn,
          {"(meeting :group :rounds :topic :context #nil)",
           {"group: PelList - agent paths taking part, in speaking order",
            "rounds: PelNum - how many times every participant speaks, at least 1",
            "topic: PelString - what the meeting is about",
            "context: PelValue (optional) - information shared with every participant"},
           "Simulates a discussion and returns the transcript as \"AGENT: text\" lines.",
           "(meeting :group [\"A/B\" \"A/C\"] :rounds 2 :topic \"plan\") |> (summarize)"})));
}

const AgentSpec& Orchestrator::reachable(const std::string& path, const EnvPtr& caller) const {
  const AgentSpec* spec = registry_.find(path);
  if (!spec) throw PelException(ErrorKind::UnknownAgent, "no agent named " + path);
  AgentScope scope = caller ? caller->agent_scope() : nullptr;
  if (scope && !scope->count(path)) {
    std::string allowed;
    for (const auto& s : *scope) allowed += (allowed.empty() ? "" : ", ") + s;
    throw PelException(ErrorKind::UnknownAgent, "agent " + path +
                                                    " cannot be called from here; reachable: " +
                                                    (allowed.empty() ? "none" : allowed));
  }
  return *spec;
}

Value Orchestrator::call(Interpreter& interp, const AgentSpec& agent, const std::string& query,
                         const Value& context, std::string_view expect, const EnvPtr& caller) {
  reachable(agent.path, caller);
  record(agent.path, "call",
         query + (context.is_nil() ? "" : "\ncontext: " + context.print_form()) +
             "\nexpect: " + std::string(expect));
  Value result;
  {
    DepthScope depth;
    if (agent.kind == AgentKind::terminal) {
      result = interp.backend().agent_reply(agent.persona(), query, context, expect);
    } else {
      result = coerce_value(run_router(interp, agent, query, context), expect);
    }
  }
  record(agent.path, "reply", result.display());
  return result;
}

Value Orchestrator::run_task(Interpreter& interp, const std::string& task, const Value& context) {
  const AgentSpec& root = registry_.root();
  record(root.path, "call", task);
  Value result;
  {
    DepthScope depth;
    result = root.kind == AgentKind::router
                 ? run_router(interp, root, task, context)
                 : interp.backend().agent_reply(root.persona(), task, context, "string");
  }
  record(root.path, "reply", result.display());
  return result;
}

Value Orchestrator::run_router(Interpreter& interp, const AgentSpec& router,
                               const std::string& task, const Value& context) {
  std::vector<llm::Persona> children;
  for (const auto& c : router.children) children.push_back(registry_.find(c)->persona());

  std::string feedback;
  std::optional<PelException> last;
  for (std::size_t attempt = 0; attempt <= options_.heal_attempts; ++attempt) {
    std::string code =
        interp.backend().router_program(router.persona(), children, task, context, feedback);
    record(router.path, attempt == 0 ? "program" : "retry", code);
    try {
      Value v = execute_program(interp, router, code, context);
      record(router.path, "result", v.display());
      return v;
    } catch (const PelException& e) {
      if (e.kind() == ErrorKind::BackendError || e.kind() == ErrorKind::RecursionLimit) throw;
      feedback = describe(e);
      record(router.path, "error", feedback);
      last = e;
    }
  }
  if (is_static_failure(last->kind())) {
    throw PelException(ErrorKind::RouterCodeInvalid,
                       "router " + router.path + " wrote invalid Pel " +
                           std::to_string(options_.heal_attempts + 1) +
                           " times; last problem: " + feedback);
  }
  throw *last;
}

Value Orchestrator::execute_program(Interpreter& interp, const AgentSpec& router,
                                    const std::string& source, const Value& context) {
  SourcePtr src = make_source(source);
  auto program = parse_source(src);

  CapabilityConfig caps;
  caps.closed_symbol_set = true;
  for (const auto& n : core_builtin_names()) caps.allowed_symbols.insert(n);
  for (const auto& a : registry_.agents()) caps.allowed_symbols.insert(a.path);
  caps.allowed_symbols.insert("meeting");
  caps.allowed_symbols.insert("context");
  for (const auto& v : validate(program, caps)) {
    // A path-like name that is not an agent is a call to an unknown agent.
    if (v.flag == "closed_symbol_set" && v.construct.find('/') != std::string::npos) {
      throw PelException(ErrorKind::UnknownAgent,
                         "no agent named " + v.construct.substr(v.construct.find(' ') + 1),
                         v.span, src);
    }
  }
  enforce(program, caps, src);

  EnvPtr env = Environment::make_root();
  install_builtins(*env);
  install(*env);
  env->define("context", context);
  env->set_agent_scope(std::make_shared<const std::set<std::string>>(router.children.begin(),
                                                                     router.children.end()));
  if (options_.async) {
    std::vector<ScheduleEvent> trace;
    Value v = run_concurrent(interp, program, env, options_.trace ? &trace : nullptr);
    if (options_.trace) {
      std::lock_guard lock(mu_);
      write_schedule_trace(*options_.trace, trace, router.path);
    }
    return v;
  }
  Value last;
  for (const auto& form : program) last = interp.eval(form, env);
  return last;
}

MeetingTranscript Orchestrator::meeting(Interpreter& interp, const std::vector<std::string>& group,
                                        std::size_t rounds, const std::string& topic,
                                        const Value& context, const EnvPtr& caller) {
  if (group.empty()) throw PelException(ErrorKind::PreconditionFailed, "meeting needs participants");
  if (rounds < 1) throw PelException(ErrorKind::PreconditionFailed, "meeting needs at least one round");
  std::vector<const AgentSpec*> people;
  for (const auto& p : group) people.push_back(&reachable(p, caller));

  MeetingTranscript t{group, topic, rounds, {}};
  for (std::size_t r = 0; r < rounds; ++r) {
    for (const auto* who : people) {
      std::string said;
      {
        DepthScope depth;
        said = interp.backend().meeting_turn(who->persona(), topic, context, t.render());
      }
      t.turns.push_back({who->path, said});
      record(who->path, "turn", said);
    }
  }
  return t;
}

void Orchestrator::record(const std::string& agent, std::string what, std::string detail) {
  std::lock_guard lock(mu_);
  events_.push_back({call_depth, agent, std::move(what), std::move(detail)});
}

std::vector<Event> Orchestrator::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::string Orchestrator::log() const {
  std::string out;
  for (const auto& e : events()) {
    std::string indent(2 * e.depth, ' ');
    out += indent + "[" + e.agent + "] " + e.what + ":";
    std::istringstream lines(e.detail);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
      out += (first ? " " : "\n" + indent + "    ") + line;
      first = false;
    }
    out += '\n';
  }
  return out;
}

}  // namespace pel::agents

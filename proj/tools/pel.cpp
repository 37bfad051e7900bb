#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "pel/agents.hpp"
#include "pel/error.hpp"
#include "pel/grammar.hpp"
#include "pel/interpreter.hpp"
#include "pel/llm.hpp"
#include "pel/repl.hpp"
#include "pel/scheduler.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kPelError = 1;
constexpr int kUsage = 2;

struct Common {
  std::string llm = "mock";
  std::string mock_script;
  std::string caps;
  std::string answers;
  std::string org;
  bool async = false;
  bool auto_heal = false;
  bool trace = false;
  std::size_t jobs = 0;
  std::size_t heal_cap = 3;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pel::PelException(pel::ErrorKind::IoError, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::shared_ptr<pel::llm::Backend> make_backend(const Common& c) {
  if (c.llm == "http") return std::make_shared<pel::llm::HttpChat>(pel::llm::HttpChat::Config::from_env());
  if (c.mock_script.empty()) return std::make_shared<pel::llm::ScriptedMock>();
  return std::make_shared<pel::llm::ScriptedMock>(pel::llm::MockScript::load(c.mock_script));
}

void add_backend_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--llm", c.llm, "Model backend")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--mock-script", c.mock_script, "Rules for the scripted mock backend");
}

void add_eval_flags(CLI::App* cmd, Common& c) {
  add_backend_flags(cmd, c);
  cmd->add_flag("--async", c.async, "Run independent top-level forms concurrently");
  cmd->add_option("--jobs", c.jobs, "Worker threads for concurrent evaluation");
  cmd->add_flag("--auto-heal", c.auto_heal, "Accept helper-agent rewrites without asking");
  cmd->add_option("--heal-cap", c.heal_cap, "Automatic rewrites allowed per form");
  cmd->add_option("--answers", c.answers, "Restart and heal answers, one per line");
  cmd->add_option("--caps", c.caps, "Capability file checked before evaluation");
  cmd->add_option("--org", c.org, "Organisation file whose agents become callable");
  cmd->add_flag("--trace-schedule", c.trace, "Write scheduler events as JSON lines to stderr");
}

// Everything a run or repl session needs, kept alive together.
struct Runtime {
  std::unique_ptr<pel::Interpreter> interp;
  pel::EnvPtr env;
  std::shared_ptr<pel::agents::Orchestrator> org;
  std::unique_ptr<std::ifstream> answers;
  pel::repl::Options options;
};

Runtime make_runtime(const Common& c) {
  Runtime rt;
  rt.interp = std::make_unique<pel::Interpreter>(
      pel::InterpreterOptions{make_backend(c), &std::cout, c.jobs});
  rt.env = rt.interp->make_global_env();
  if (!c.org.empty()) {
    pel::agents::Options o;
    o.async = c.async;
    o.trace = c.trace ? &std::cerr : nullptr;
    rt.org = pel::agents::Orchestrator::create(pel::agents::Registry::load(c.org), o);
    rt.org->install(*rt.env);
  }
  if (!c.answers.empty()) {
    rt.answers = std::make_unique<std::ifstream>(c.answers);
    if (!*rt.answers) throw pel::PelException(pel::ErrorKind::IoError, "cannot read " + c.answers);
  }
  rt.options.auto_heal = c.auto_heal;
  rt.options.heal_cap = c.heal_cap;
  rt.options.async = c.async;
  rt.options.trace = c.trace ? &std::cerr : nullptr;
  if (!c.caps.empty()) rt.options.caps = pel::CapabilityConfig::load(c.caps);
  return rt;
}

int cmd_run(const Common& c, const std::string& file) {
  Runtime rt = make_runtime(c);
  const std::string text = read_file(file);
  rt.options.scripted = true;
  rt.options.echo_values = false;
  rt.options.report = &std::cerr;
  pel::repl::Session session(*rt.interp, rt.env, std::cout, rt.answers.get(), rt.options);
  return session.eval_chunk(text) == pel::repl::Outcome::completed ? kOk : kPelError;
}

int cmd_repl(const Common& c, const std::string& script) {
  Runtime rt = make_runtime(c);
  std::istream* answers = rt.answers.get();
  if (!answers && script.empty()) answers = &std::cin;
  rt.options.scripted = !script.empty() || !isatty(STDIN_FILENO);
  pel::repl::Session session(*rt.interp, rt.env, std::cout, answers, rt.options);
  std::size_t aborted = 0;
  if (script.empty()) {
    aborted = session.run(std::cin);
  } else {
    std::istringstream in(read_file(script));
    aborted = session.run(in);
  }
  return aborted == 0 ? kOk : kPelError;
}

int cmd_grammar(const std::string& caps_file, const std::string& format, std::size_t depth) {
  pel::CapabilityConfig caps = caps_file.empty() ? pel::CapabilityConfig{}
                                                 : pel::CapabilityConfig::load(caps_file);
  if (format == "ebnf") {
    std::cout << pel::export_ebnf(caps);
  } else {
    std::cout << pel::export_regex(caps, depth) << "\n";
  }
  return kOk;
}

int cmd_agents(const Common& c, const std::string& org_file, const std::string& task) {
  pel::agents::Options o;
  o.async = c.async;
  o.trace = c.trace ? &std::cerr : nullptr;
  auto org = pel::agents::Orchestrator::create(pel::agents::Registry::load(org_file), o);
  pel::Interpreter interp(pel::InterpreterOptions{make_backend(c), &std::cout, c.jobs});
  pel::Value result;
  try {
    result = org->run_task(interp, task);
  } catch (const pel::PelException&) {
    std::cerr << org->log();
    throw;
  }
  std::cerr << org->log();
  std::cout << "⇒ " << result.display() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pel interpreter and toolchain"};
  app.require_subcommand(1);

  Common run_opts;
  std::string run_file;
  auto* run = app.add_subcommand("run", "Evaluate a .pel file");
  run->add_option("file", run_file, "Program to run")->required();
  add_eval_flags(run, run_opts);

  Common repl_opts;
  std::string repl_script;
  auto* repl = app.add_subcommand("repl", "Interactive session with restarts");
  repl->add_option("--script", repl_script, "Read entries from this file instead of stdin");
  add_eval_flags(repl, repl_opts);

  std::string caps_file;
  std::string format = "ebnf";
  std::size_t depth = 2;
  auto* grammar = app.add_subcommand("grammar", "Grammar artifacts");
  grammar->require_subcommand(1);
  auto* gexport = grammar->add_subcommand("export", "Print the grammar for a capability set");
  gexport->add_option("--caps", caps_file, "Capability file");
  gexport->add_option("--format", format, "Output format")->check(CLI::IsMember({"ebnf", "regex"}));
  gexport->add_option("--depth", depth, "Nesting depth for the regex");

  Common agent_opts;
  std::string org_file;
  std::string task;
  auto* agents = app.add_subcommand("agents", "Hierarchical agents");
  agents->require_subcommand(1);
  auto* arun = agents->add_subcommand("run", "Hand a task to the root agent");
  arun->add_option("org", org_file, "Organisation JSON file")->required();
  arun->add_option("--task", task, "Task for the root agent")->required();
  add_backend_flags(arun, agent_opts);
  arun->add_flag("--async", agent_opts.async, "Schedule router programs concurrently");
  arun->add_option("--jobs", agent_opts.jobs, "Worker threads");
  arun->add_flag("--trace-schedule", agent_opts.trace, "Write scheduler events to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(run_opts, run_file);
    if (*repl) return cmd_repl(repl_opts, repl_script);
    if (*gexport) return cmd_grammar(caps_file, format, depth);
    if (*arun) return cmd_agents(agent_opts, org_file, task);
  } catch (const pel::PelException& e) {
    std::cerr << pel::repl::render_error(e);
    switch (e.kind()) {
      case pel::ErrorKind::IoError:
      case pel::ErrorKind::MalformedOrg:
      case pel::ErrorKind::PreconditionFailed:
        return kUsage;
      default:
        return kPelError;
    }
  }
  return kUsage;
}

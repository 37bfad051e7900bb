#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kSamples = PEL_SAMPLES;
const std::string kPel = PEL_BIN;

struct Result {
  int status = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout. Stderr is discarded.
Result pel(const std::string& args) {
  const std::string cmd = kPel + " " + args + " 2>/dev/null </dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = "/tmp/pel_cli_" + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("run prints and exits cleanly") {
  auto r = pel("run " + kSamples + "/pipes.pel");
  CHECK(r.status == 0);
  CHECK(r.out == "9\n");
}

TEST_CASE("exit codes") {
  CHECK(pel("run /nonexistent/missing.pel").status == 2);
  CHECK(pel("").status == 2);
  CHECK(pel("run").status == 2);
  CHECK(pel("run " + kSamples + "/pipes.pel --llm nonsense").status == 2);
  CHECK(pel("run " + write_temp("bad.pel", "(+ 1 nope)") ).status == 1);
  CHECK(pel("run " + write_temp("syntax.pel", "(+ 1")).status == 1);
  CHECK(pel("--help").status == 0);
}

TEST_CASE("caps files gate run") {
  auto r = pel("run " + kSamples + "/pipes.pel --caps " + kSamples + "/restricted.caps");
  CHECK(r.status == 1);
  CHECK(r.out.empty());
  CHECK(pel("run " + kSamples + "/pipes.pel --caps /nonexistent.caps").status == 2);
}

TEST_CASE("grammar export") {
  auto ebnf = pel("grammar export --format ebnf");
  CHECK(ebnf.status == 0);
  CHECK(ebnf.out.find("PIPE") != std::string::npos);
  auto gated = pel("grammar export --caps " + kSamples + "/restricted.caps");
  CHECK(gated.status == 0);
  CHECK(gated.out.find("PIPE =") == std::string::npos);
  auto regex = pel("grammar export --format regex --depth 2");
  CHECK(regex.status == 0);
  CHECK(regex.out.size() > 100);
  CHECK(pel("grammar export --format regex --depth 0").status == 2);
}

TEST_CASE("scripted repl reproduces the golden transcript") {
  auto r = pel("repl --script " + kSamples + "/greet.pel --answers " + kSamples +
               "/greet.answers --mock-script " + kSamples + "/greet.mock");
  CHECK(r.status == 0);
  CHECK(r.out == read_file(kSamples + "/greet.transcript"));
}

TEST_CASE("run with answers uses the restart protocol") {
  const std::string answers = write_temp("answers", "3\n(+ 1 2)\n");
  auto r = pel("run " + write_temp("heal.pel", "(def x (+ 1 y))\n(print x)") + " --answers " +
               answers);
  CHECK(r.status == 0);
  CHECK(r.out.find("3\n") != std::string::npos);
  auto healed = pel("run " + write_temp("auto.pel", "(print (+ 1 y))") + " --auto-heal --mock-script " +
                    write_temp("auto.mock", "fix | * | 41"));
  CHECK(healed.status == 0);
  CHECK(healed.out.find("41\n") != std::string::npos);
}

TEST_CASE("agents run") {
  const std::string args = "agents run " + kSamples + "/org.json --mock-script " + kSamples +
                           "/agents.mock --task \"come up with a comprehensive plan for social "
                           "media advertising\"";
  auto first = pel(args);
  auto second = pel(args);
  CHECK(first.status == 0);
  CHECK(first.out.rfind("⇒ [:social_media_budget 50000 :social_media_strategy ", 0) == 0);
  CHECK(first.out == second.out);
  CHECK(pel("agents run /nonexistent.json --task x").status == 2);
}

TEST_CASE("async run with an organisation") {
  auto r = pel("run " + kSamples + "/parallel.pel --org " + kSamples + "/org.json --mock-script " +
               kSamples + "/agents.mock --async");
  CHECK(r.status == 0);
  CHECK(r.out.find("Campaign") != std::string::npos);
}

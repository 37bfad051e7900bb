#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pel/repl.hpp"
#include "support.hpp"

using namespace pel;
using pel::testing::Harness;
using pel::testing::mock;

namespace {

const std::string kSamples = PEL_SAMPLES;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A scripted session over a fresh harness.
struct Scripted {
  Harness h;
  std::istringstream answers;
  repl::Session session;

  Scripted(std::shared_ptr<llm::Backend> backend, const std::string& answer_lines,
           repl::Options options = {})
      : h(std::move(backend)), answers(answer_lines),
        session(h.interp, h.env, h.out, &answers, with_scripted(options)) {}

  static repl::Options with_scripted(repl::Options o) {
    o.scripted = true;
    return o;
  }

  bool bound(const std::string& name) const { return h.env->find(name).has_value(); }
  std::string value_of(const std::string& name) const {
    auto v = h.env->find(name);
    return v ? v->display() : "<unbound>";
  }
};

const std::string kThreeForms =
    "(def a 1)\n"
    "(def b 2)\n"
    "[(def partial 7) (def c (+ a zz))]";

}  // namespace

TEST_CASE("error rendering") {
  SUBCASE("mixed arguments header and underline") {
    Harness h;
    try {
      h.run("(def name \"Behnam\")\n(print [\"hello\" name] :sep \" \")");
      FAIL("expected an error");
    } catch (const PelException& e) {
      const std::string text = repl::render_error(e);
      CHECK(text.rfind("Error at line 2, col 1-31: Mixing named and positional arguments is not "
                       "allowed.\n1 | (def name \"Behnam\")\n2 | (print [\"hello\" name] :sep \" \")\n    " +
                           std::string(31, '^') + "\nerror context:\nFUNCTION SIGNATURE: (print",
                       0) == 0);
      CHECK(text.find("EXAMPLE USAGE:") != std::string::npos);
    }
  }
  SUBCASE("one character span gets one caret and no context") {
    Harness h;
    try {
      h.run("(+ 1 x)");
      FAIL("expected an error");
    } catch (const PelException& e) {
      CHECK(e.kind() == ErrorKind::UnboundSymbol);
      const std::string text = repl::render_error(e);
      CHECK(text.find("col 6-6") != std::string::npos);
      CHECK(text.find("1 | (+ 1 x)\n         ^\n") != std::string::npos);
      CHECK(text.find("error context") == std::string::npos);
    }
  }
  SUBCASE("no location") {
    CHECK(repl::render_error(PelException(ErrorKind::BackendError, "down")) == "Error: down\n");
  }
  SUBCASE("multi-line span lists the following lines") {
    Harness h;
    try {
      h.run("(print [1 2]\n  :sep 3\n  4)");
      FAIL("expected an error");
    } catch (const PelException& e) {
      const std::string text = repl::render_error(e);
      CHECK(text.find("Error at line 1, col 1-12:") == 0);
      CHECK(text.find("2 |   :sep 3\n3 |   4)\n") != std::string::npos);
    }
  }
}

TEST_CASE("entry splitting") {
  CHECK(repl::is_balanced("(a [b] \"(\")"));
  CHECK_FALSE(repl::is_balanced("(a [b"));
  CHECK_FALSE(repl::is_balanced("\"open"));
  CHECK(repl::is_balanced("(a) ; (unclosed in a comment"));
  const auto chunks = repl::split_chunks("(def x 1)\n\n; only a comment\n\n(f\n\n  2)\n(g)\n");
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0] == "(def x 1)");
  CHECK(chunks[1] == "(f\n\n  2)\n(g)");
  CHECK(repl::split_chunks("").empty());
}

TEST_CASE("transcript reproduction against the golden file") {
  auto backend = std::make_shared<llm::ScriptedMock>(llm::MockScript::load(kSamples + "/greet.mock"));
  std::ostringstream out;
  Harness h(backend);
  std::ifstream answers(kSamples + "/greet.answers");
  repl::Options options;
  options.scripted = true;
  repl::Session session(h.interp, h.env, out, &answers, options);
  std::istringstream script(read_file(kSamples + "/greet.pel"));
  CHECK(session.run(script) == 0);
  // print writes to the interpreter's sink, which the CLI shares with the session.
  const std::string golden = read_file(kSamples + "/greet.transcript");
  const std::string printed = h.out.str();
  CHECK(printed == "hello Behnam\n");
  std::string session_text = out.str();
  const auto at = session_text.find("⇒ [\"hello\" \"Behnam\"]");
  REQUIRE(at != std::string::npos);
  session_text.insert(at, printed);
  CHECK(session_text == golden);
  CHECK(golden.find("Helper agent proposed rewrite:\n(print :vals [\"hello\" name] :sep \" \")\n") !=
        std::string::npos);
  CHECK(backend->calls() == 1);
}

TEST_CASE("every restart keeps the bindings of completed forms") {
  const char* fix = "fix | * | (+ a b)";
  struct Case {
    const char* name;
    std::string answers;
    bool expect_c;
  };
  const Case cases[] = {
      {"1 rewrite program", "1\n(def c (+ a b))\n", true},
      {"2 rewrite from error", "2\n(def c (+ a b))\n", true},
      {"3 rewrite expression", "3\n(+ a b)\n", true},
      {"4 abort", "4\n", false},
      {"5 self-heal", "5\na\n", true},
  };
  for (const auto& c : cases) {
    SUBCASE(c.name) {
      Scripted s(mock(fix), c.answers);
      const auto outcome = s.session.eval_chunk(kThreeForms);
      CHECK(outcome == (c.expect_c ? repl::Outcome::completed : repl::Outcome::aborted));
      CHECK(s.value_of("a") == "1");
      CHECK(s.value_of("b") == "2");
      if (c.expect_c) CHECK(s.bound("c"));
      if (!c.expect_c) {
        CHECK_FALSE(s.bound("c"));
        // The failing form's partial effect is rolled back.
        CHECK_FALSE(s.bound("partial"));
      }
      CHECK(s.session.history().size() == 3u - (c.expect_c ? 0u : 1u));
    }
  }
  SUBCASE("expression restarts fix only the failing call") {
    Scripted s(mock(fix), "3\n(- b a)\n");
    s.session.eval_chunk(kThreeForms);
    CHECK(s.value_of("c") == "1");
    CHECK(s.value_of("partial") == "7");
  }
  SUBCASE("self-heal replaces the innermost failing call") {
    Scripted s(mock(fix), "5\na\n");
    s.session.eval_chunk(kThreeForms);
    CHECK(s.value_of("c") == "3");
    CHECK(s.h.out.str().find("1 | [(def partial 7) (def c (+ a b))]") != std::string::npos);
  }
}

TEST_CASE("restart 3 keeps the forms after the failure") {
  // The innermost failing call is replaced, not the unbound symbol alone.
  Scripted s(mock(""), "3\n10\n");
  CHECK(s.session.eval_chunk("(def x (+ 1 y))\n(def z (* x 2))") == repl::Outcome::completed);
  CHECK(s.value_of("x") == "10");
  CHECK(s.value_of("z") == "20");
}

TEST_CASE("restart 2 drops the forms after the failure") {
  Scripted s(mock(""), "2\n(def x 5)\n");
  CHECK(s.session.eval_chunk("(def x (+ 1 y))\n(def z 1)") == repl::Outcome::completed);
  CHECK(s.value_of("x") == "5");
  CHECK_FALSE(s.bound("z"));
}

TEST_CASE("a failing replacement re-enters the menu") {
  // After the first splice the failing call is the def itself.
  Scripted s(mock(""), "3\nqq\n3\n(def x 4)\n");
  CHECK(s.session.eval_chunk("(def x (+ 1 y))") == repl::Outcome::completed);
  CHECK(s.value_of("x") == "4");
  const std::string text = s.h.out.str();
  CHECK(text.find("unbound symbol 'qq'") != std::string::npos);
  CHECK(text.find("1 | (def x qq)") != std::string::npos);
}

TEST_CASE("menu input handling") {
  SUBCASE("invalid choices re-prompt") {
    Scripted s(mock(""), "9\nx\n4\n");
    CHECK(s.session.eval_chunk("(+ 1 y)") == repl::Outcome::aborted);
    const std::string text = s.h.out.str();
    const std::string nag = "Please answer 1, 2, 3, 4 or 5.";
    CHECK(text.find(nag) != text.rfind(nag));
  }
  SUBCASE("rejecting a proposal returns to the menu") {
    Scripted s(mock("fix | * | (+ 1 2)"), "5\nr\n4\n");
    CHECK(s.session.eval_chunk("(+ 1 y)") == repl::Outcome::aborted);
  }
  SUBCASE("editing a proposal") {
    Scripted s(mock("fix | * | (+ 1 2)"), "5\ne\n(def w 4)\n");
    CHECK(s.session.eval_chunk("(def v y)") == repl::Outcome::completed);
    CHECK(s.value_of("w") == "4");
  }
  SUBCASE("backend failure is reported and the menu returns") {
    Scripted s(mock(""), "5\n4\n");
    CHECK(s.session.eval_chunk("(+ 1 y)") == repl::Outcome::aborted);
  }
  SUBCASE("end of answers aborts") {
    Scripted s(mock(""), "");
    CHECK(s.session.eval_chunk("(+ 1 y)") == repl::Outcome::aborted);
  }
}

TEST_CASE("automatic healing") {
  SUBCASE("an accepted fix continues without prompts") {
    Harness h(mock("fix | * | 2"));
    std::ostringstream out;
    repl::Options o;
    o.auto_heal = true;
    repl::Session s(h.interp, h.env, out, nullptr, o);
    CHECK(s.eval_chunk("(def x (+ 1 y))\n(def z x)") == repl::Outcome::completed);
    CHECK(h.env->find("z")->display() == "2");
    CHECK(out.str().find("Possible restarts") == std::string::npos);
  }
  SUBCASE("three broken fixes fall back to the menu") {
    auto backend = mock("fix | * | (nope 1)");
    Harness h(backend);
    std::ostringstream out;
    std::istringstream answers("4\n");
    repl::Options o;
    o.auto_heal = true;
    repl::Session s(h.interp, h.env, out, &answers, o);
    CHECK(s.eval_chunk("(def x (+ 1 y))") == repl::Outcome::aborted);
    CHECK(backend->calls() == 3);
    CHECK(out.str().find("Possible restarts") != std::string::npos);
  }
  SUBCASE("without answers the cap aborts") {
    auto backend = mock("fix | * | (nope 1)");
    Harness h(backend);
    std::ostringstream out;
    repl::Options o;
    o.auto_heal = true;
    o.heal_cap = 2;
    repl::Session s(h.interp, h.env, out, nullptr, o);
    CHECK(s.eval_chunk("(def x (+ 1 y))") == repl::Outcome::aborted);
    CHECK(backend->calls() == 2);
    CHECK(out.str().find("Evaluation aborted.") != std::string::npos);
  }
}

TEST_CASE("sessions") {
  SUBCASE("empty input exits cleanly") {
    Scripted s(mock(""), "");
    std::istringstream in("");
    CHECK(s.session.run(in) == 0);
  }
  SUBCASE("parse errors go through the menu") {
    Scripted s(mock(""), "1\n(def ok 1)\n");
    CHECK(s.session.eval_chunk("(def broken") == repl::Outcome::completed);
    CHECK(s.bound("ok"));
  }
  SUBCASE("capability violations are caught before evaluation") {
    repl::Options o;
    o.caps = CapabilityConfig::parse("allow_pipe = false");
    Scripted s(mock(""), "4\n", o);
    CHECK(s.session.eval_chunk("(def x 1)\n1 ▷ (def y ^)") == repl::Outcome::aborted);
    CHECK_FALSE(s.bound("x"));
    CHECK(s.h.out.str().find("pipe") != std::string::npos);
  }
  SUBCASE("async entries abort on error and keep independent results") {
    repl::Options o;
    o.async = true;
    Scripted s(mock(""), "", o);
    CHECK(s.session.eval_chunk("(def x 1)\n(def y (+ x q))\n(def z (+ y 1))\n(def w 2)") ==
          repl::Outcome::aborted);
    CHECK(s.bound("x"));
    CHECK(s.bound("w"));
    CHECK_FALSE(s.bound("z"));
    CHECK(s.h.out.str().find("Form 2 failed") != std::string::npos);
  }
  SUBCASE("interactive mode reads until brackets balance") {
    Harness h;
    std::ostringstream out;
    repl::Session s(h.interp, h.env, out, nullptr);
    std::istringstream in("(def x\n  5)\n\n(+ x 1)\n");
    CHECK(s.run(in) == 0);
    CHECK(out.str().find("⇒ 6") != std::string::npos);
    CHECK(s.history().size() == 2);
  }
}

#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pel/environment.hpp"
#include "pel/grammar.hpp"

namespace pel::testing {

// Random programs built only from pure builtins. Every name is defined before
// it is read in program order, so the sequential run never fails, and names
// are redefined often to exercise write-after-write and write-after-read
// ordering.
inline std::string random_program(std::mt19937& rng) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  std::vector<std::string> vars;
  std::vector<std::string> funcs;
  auto operand = [&]() -> std::string {
    if (vars.empty() || pick(3) == 0) return std::to_string(pick(20));
    return vars[pick(static_cast<int>(vars.size()))];
  };
  auto fresh_var = [&]() {
    std::string v = "v" + std::to_string(pick(6));
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    return v;
  };
  std::string src;
  const int forms = 3 + pick(10);
  for (int i = 0; i < forms; ++i) {
    switch (pick(7)) {
      case 0: {
        std::string a = operand(), b = operand();
        src += "(def " + fresh_var() + " (+ " + a + " " + b + "))\n";
        break;
      }
      case 1: {
        std::string a = operand();
        std::string f = "f" + std::to_string(pick(3));
        src += "(def " + f + " (lambda [:n 1] (* n " + a + ")))\n";
        if (std::find(funcs.begin(), funcs.end(), f) == funcs.end()) funcs.push_back(f);
        break;
      }
      case 2: {
        if (funcs.empty()) break;
        std::string f = funcs[pick(static_cast<int>(funcs.size()))];
        std::string a = operand();
        src += "(def " + fresh_var() + " (" + f + " " + a + "))\n";
        break;
      }
      case 3: {
        std::string a = operand(), b = operand();
        src += "[" + a + " " + b + "] \xE2\x96\xB7 (len) \xE2\x96\xB7 (def " + fresh_var() + " ^)\n";
        break;
      }
      case 4: {
        std::string a = operand(), b = operand();
        std::string v = fresh_var();
        src += "(if (gt " + a + " 9) (def " + v + " " + b + ") (def " + v + " 0))\n";
        break;
      }
      case 5: {
        std::string a = operand();
        std::string v1 = fresh_var();
        std::string v2 = fresh_var();
        src += "(do [(def " + v1 + " " + a + ") (def " + v2 + " (+ " + v1 + " 1))])\n";
        break;
      }
      default: {
        std::string a = operand(), b = operand();
        src += "(for [" + a + " " + b + "] i (+ i " + operand() + "))\n";
        break;
      }
    }
  }
  return src;
}

inline std::map<std::string, std::string> bindings(const EnvPtr& env) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : env->user_bindings()) out[k] = v.display();
  return out;
}

inline std::size_t program_depth(const std::vector<ExprPtr>& program) {
  std::size_t d = 0;
  for (const auto& f : program) d = std::max(d, nesting_depth(f));
  return d;
}

// Random source text that is not necessarily well formed. Callers keep the
// strings that parse.
class ProgramGen {
 public:
  explicit ProgramGen(unsigned seed) : rng_(seed) {}

  std::string program(int max_depth) {
    std::string s = sep();
    for (int i = pick(4); i > 0; --i) s += expr(max_depth) + sep(true);
    return s;
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::string sep(bool required = false) {
    static const std::vector<std::string> seps = {" ", "\n", "  ", " ; note ( [\n", "\t"};
    if (!required && pick(3) == 0) return "";
    return seps[pick(static_cast<int>(seps.size()))];
  }

  std::string atom() {
    static const std::vector<std::string> atoms = {
        "x", "foo", "my-foo", "+", "gt", "print", "do/async", "a:b", "#", "x?", "->",
        "1", "-3", "2.5", "#t", "#f", "#nil", "\"\"", "\"a b\"", "\"a;b|c\"", "\"multi\nline\"",
        ":k", ":k-1", ":a?", "^", "do", "def", "lambda", "MAIN/FINANCE", "1a", "#true"};
    return atoms[pick(static_cast<int>(atoms.size()))];
  }

  std::string seq(int d) {
    std::string s = sep();
    for (int i = pick(4); i > 0; --i) s += expr(d) + sep(true);
    return s;
  }

  std::string primary(int d) {
    std::string q = pick(5) == 0 ? "'" + sep() : "";
    if (d == 0 || pick(3) == 0) return q + atom();
    if (pick(2) == 0) return q + "(" + seq(d - 1) + ")";
    return q + "[" + seq(d - 1) + "]";
  }

  std::string expr(int d) {
    std::string s = primary(d);
    if (pick(4) == 0) s += sep() + (pick(2) ? "\xE2\x96\xB7" : "|>") + sep() + primary(d);
    return s;
  }

  std::mt19937 rng_;
};

}  // namespace pel::testing

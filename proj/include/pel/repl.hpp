#pragma once

#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pel/error.hpp"
#include "pel/grammar.hpp"
#include "pel/interpreter.hpp"

namespace pel::repl {

enum class Restart {
  rewrite_program = 1,
  rewrite_from_error = 2,
  rewrite_expression = 3,
  abort = 4,
  self_heal = 5,
};

struct Options {
  /// Input comes from a file or pipe: echo it, and echo every answer read,
  /// so the output reads as a complete transcript.
  bool scripted = false;
  /// Print `⇒ value` after each top-level form.
  bool echo_values = true;
  /// Accept helper-agent rewrites without asking, up to heal_cap per form.
  bool auto_heal = false;
  std::size_t heal_cap = 3;
  /// Evaluate each chunk with the dependency scheduler. Errors then abort the
  /// chunk after the in-flight forms settle; there is no restart menu.
  bool async = false;
  std::ostream* trace = nullptr;
  std::optional<CapabilityConfig> caps;
  /// Where error reports go when no restart menu can be shown (no answers
  /// stream). Defaults to the session output.
  std::ostream* report = nullptr;
};

enum class Outcome { completed, aborted };

/// `Error at line L, col A-B: message`, the surrounding numbered source
/// lines, a caret underline, and the docstring context if any.
std::string render_error(const PelException& error);

/// The five restart choices, one per line, ending with a newline.
std::string menu_text();

/// True when every bracket and string in `text` is closed.
bool is_balanced(std::string_view text);

/// Splits a script into REPL entries at blank lines that fall outside any
/// open bracket or string. Entries holding only comments are dropped.
std::vector<std::string> split_chunks(std::string_view text);

/// One REPL session over a global environment.
///
/// Each entry is parsed and its top-level forms evaluated in order. Before a
/// form runs the environment is snapshotted; if the form fails the snapshot
/// is restored and the restart protocol runs, reading choices and
/// replacement code from the answers stream. Without an answers stream an
/// unresolved error aborts the entry.
class Session {
 public:
  Session(Interpreter& interp, EnvPtr env, std::ostream& out, std::istream* answers,
          Options options = {});

  /// Evaluates one entry with the restart protocol.
  Outcome eval_chunk(const std::string& text);

  /// Reads entries from `in` until end of input. Scripted sessions split the
  /// whole input with split_chunks and echo each entry after a `Pel> `
  /// prompt; interactive sessions prompt and read until brackets balance.
  /// Returns the number of aborted entries.
  std::size_t run(std::istream& in);

  const EnvPtr& env() const { return env_; }
  /// Source of every form that completed, in order.
  const std::vector<std::string>& history() const { return history_; }

 private:
  struct Resolution {
    bool abort = false;
    std::vector<ExprPtr> replace;  // forms replacing the failing one onward
    bool keep_rest = false;        // keep the forms after the failing one
  };

  std::vector<ExprPtr> parse_checked(const SourcePtr& source) const;
  Outcome eval_async(const std::vector<ExprPtr>& forms);
  Resolution handle_error(const PelException& error, const ExprPtr& failing,
                          const SourcePtr& chunk_source);
  std::optional<Resolution> self_heal(const PelException& error, const ExprPtr& failing,
                                      const SourcePtr& chunk_source, bool automatic);
  std::optional<std::string> ask(const std::string& prompt);
  std::optional<std::string> read_code(const std::string& prompt);
  void echo_entry(std::string_view text, std::string_view first_prompt);
  std::ostream& report();

  Interpreter& interp_;
  EnvPtr env_;
  std::ostream& out_;
  std::istream* answers_;
  Options options_;
  std::vector<std::string> history_;
  std::size_t heals_this_form_ = 0;
};

}  // namespace pel::repl

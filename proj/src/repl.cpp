#include "pel/repl.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "pel/llm.hpp"
#include "pel/parser.hpp"
#include "pel/scheduler.hpp"

namespace pel::repl {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Anything besides whitespace and comments.
bool has_code(std::string_view text) {
  bool comment = false;
  for (char c : text) {
    if (comment) {
      comment = c != '\n';
    } else if (c == ';') {
      comment = true;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      return true;
    }
  }
  return false;
}

std::string numbered(std::string_view text) {
  auto lines = split_lines(text);
  const std::size_t width = std::to_string(lines.size()).size();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string n = std::to_string(i + 1);
    out += std::string(width - n.size(), ' ') + n + " | " + lines[i] + "\n";
  }
  return out;
}

// The part of the failing form a rewrite replaces: the innermost failing
// call when it lies inside the form, else the whole form.
Span target_span(const PelException& e, const ExprPtr& form) {
  if (e.origin() && e.origin_source() == form->source && form->span.contains(*e.origin())) {
    return *e.origin();
  }
  if (e.span() && e.source() == form->source && form->span.contains(*e.span())) return *e.span();
  return form->span;
}

std::string splice(const ExprPtr& form, const Span& target, const std::string& replacement) {
  const std::string& s = *form->source;
  const Span& f = form->span;
  return s.substr(f.begin, target.begin - f.begin) + replacement +
         s.substr(target.end, f.end - target.end);
}

}  // namespace

std::string render_error(const PelException& e) {
  std::ostringstream o;
  const auto& span = e.span();
  if (!span) {
    o << "Error: " << e.message() << "\n";
  } else {
    std::vector<std::string> lines = e.source() ? split_lines(*e.source()) : std::vector<std::string>{};
    std::uint32_t last_col = span->end_col;
    if (!span->single_line()) {
      last_col = span->line <= lines.size()
                     ? static_cast<std::uint32_t>(code_points(lines[span->line - 1]))
                     : span->col;
    }
    o << "Error at line " << span->line << ", col " << span->col << "-" << last_col << ": "
      << e.message() << "\n";
    if (span->line <= lines.size()) {
      const std::size_t first = span->line > 2 ? span->line - 2 : 1;
      const std::size_t last = std::min<std::size_t>(
          lines.size(), span->single_line() ? span->line : std::min(span->end_line, span->line + 3));
      const std::size_t width = std::to_string(last).size();
      auto emit = [&](std::size_t n) {
        std::string num = std::to_string(n);
        o << std::string(width - num.size(), ' ') << num << " | " << lines[n - 1] << "\n";
      };
      for (std::size_t n = first; n <= span->line; ++n) emit(n);
      const std::size_t carets = last_col >= span->col ? last_col - span->col + 1 : 1;
      o << std::string(width + 3 + span->col - 1, ' ') << std::string(carets, '^') << "\n";
      for (std::size_t n = span->line + 1; n <= last; ++n) emit(n);
    }
  }
  if (e.context()) o << "error context:\n" << e.context()->render();
  return o.str();
}

std::string menu_text() {
  return "1. Rewrite entire program\n"
         "2. Rewrite from error point forward\n"
         "3. Rewrite only the current expression\n"
         "4. Abort evaluation\n"
         "5. Use self-healing mode\n";
}

bool is_balanced(std::string_view text) {
  int depth = 0;
  bool in_string = false;
  bool comment = false;
  for (char c : text) {
    if (comment) {
      comment = c != '\n';
    } else if (in_string) {
      in_string = c != '"';
    } else if (c == '"') {
      in_string = true;
    } else if (c == ';') {
      comment = true;
    } else if (c == '(' || c == '[') {
      ++depth;
    } else if (c == ')' || c == ']') {
      --depth;
    }
  }
  return !in_string && depth <= 0;
}

std::vector<std::string> split_chunks(std::string_view text) {
  std::vector<std::string> chunks;
  std::string current;
  auto flush = [&] {
    if (has_code(current)) {
      while (!current.empty() && (current.back() == '\n' || current.back() == '\r')) current.pop_back();
      chunks.push_back(current);
    }
    current.clear();
  };
  for (const auto& line : split_lines(text)) {
    if (trim(line).empty() && is_balanced(current)) {
      flush();
      continue;
    }
    current += line + "\n";
  }
  flush();
  return chunks;
}

Session::Session(Interpreter& interp, EnvPtr env, std::ostream& out, std::istream* answers,
                 Options options)
    : interp_(interp), env_(std::move(env)), out_(out), answers_(answers),
      options_(std::move(options)) {}

std::ostream& Session::report() { return options_.report ? *options_.report : out_; }

std::vector<ExprPtr> Session::parse_checked(const SourcePtr& source) const {
  auto forms = parse_source(source);
  if (options_.caps) enforce(forms, *options_.caps, source);
  return forms;
}

void Session::echo_entry(std::string_view text, std::string_view first_prompt) {
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out_ << (i == 0 ? std::string(first_prompt) : std::string(first_prompt.size(), ' '))
         << lines[i] << "\n";
  }
}

std::optional<std::string> Session::ask(const std::string& prompt) {
  out_ << prompt << std::flush;
  std::string line;
  if (!answers_ || !std::getline(*answers_, line)) {
    out_ << "\n";
    return std::nullopt;
  }
  if (options_.scripted) out_ << line << "\n";
  return trim(line);
}

std::optional<std::string> Session::read_code(const std::string& prompt) {
  out_ << prompt << std::flush;
  std::string code;
  std::string line;
  while (answers_ && std::getline(*answers_, line)) {
    code += (code.empty() ? "" : "\n") + line;
    if (has_code(code) && is_balanced(code)) {
      if (options_.scripted) echo_entry(code, "> ");
      return code;
    }
  }
  out_ << "\n";
  return std::nullopt;
}

Outcome Session::eval_chunk(const std::string& text) {
  heals_this_form_ = 0;
  SourcePtr source = make_source(text);
  std::deque<ExprPtr> pending;
  try {
    auto forms = parse_checked(source);
    pending.assign(forms.begin(), forms.end());
  } catch (const PelException& e) {
    Resolution r = handle_error(e, nullptr, source);
    if (r.abort) return Outcome::aborted;
    pending.assign(r.replace.begin(), r.replace.end());
  }

  if (options_.async) return eval_async({pending.begin(), pending.end()});

  while (!pending.empty()) {
    ExprPtr form = pending.front();
    auto snapshot = env_->snapshot();
    try {
      Value v = interp_.eval(form, env_);
      pending.pop_front();
      heals_this_form_ = 0;
      history_.emplace_back(slice(*form->source, form->span));
      if (options_.echo_values) out_ << "⇒ " << v.display() << "\n";
    } catch (const PelException& e) {
      env_->restore(std::move(snapshot));
      Resolution r = handle_error(e, form, form->source);
      if (r.abort) return Outcome::aborted;
      if (r.keep_rest) {
        pending.pop_front();
      } else {
        pending.clear();
        heals_this_form_ = 0;
      }
      pending.insert(pending.begin(), r.replace.begin(), r.replace.end());
    }
  }
  return Outcome::completed;
}

Outcome Session::eval_async(const std::vector<ExprPtr>& forms) {
  std::vector<ScheduleEvent> trace;
  auto* sink = options_.trace ? &trace : nullptr;
  try {
    Value v = run_concurrent(interp_, forms, env_, sink);
    if (options_.trace) write_schedule_trace(*options_.trace, trace);
    for (const auto& f : forms) history_.emplace_back(slice(*f->source, f->span));
    if (options_.echo_values && !forms.empty()) out_ << "⇒ " << v.display() << "\n";
    return Outcome::completed;
  } catch (const PelException& e) {
    if (options_.trace) write_schedule_trace(*options_.trace, trace);
    report() << render_error(e);
    if (e.form_index()) {
      report() << "Form " << *e.form_index() + 1
               << " failed; forms depending on it were cancelled.\n";
    }
    report() << "Evaluation aborted.\n";
    return Outcome::aborted;
  }
}

Session::Resolution Session::handle_error(const PelException& error, const ExprPtr& failing,
                                          const SourcePtr& chunk_source) {
  const bool can_heal_automatically =
      options_.auto_heal && heals_this_form_ < options_.heal_cap;
  if (!answers_ && !can_heal_automatically) {
    report() << render_error(error) << "Evaluation aborted.\n";
    return {true, {}, false};
  }
  out_ << render_error(error);
  if (can_heal_automatically) {
    ++heals_this_form_;
    if (auto r = self_heal(error, failing, chunk_source, true)) return *r;
    if (!answers_) {
      report() << "Evaluation aborted.\n";
      return {true, {}, false};
    }
  }

  while (true) {
    out_ << "Possible restarts:\n" << menu_text();
    auto choice = ask("Select option (1-5): ");
    if (!choice) return {true, {}, false};

    if (*choice == "1" || *choice == "2" || *choice == "3") {
      const int n = (*choice)[0] - '0';
      const char* prompt = n == 1   ? "Enter the new program:\n"
                           : n == 2 ? "Enter code to run from the failing form onward:\n"
                                    : "Enter a replacement for the failing expression:\n";
      auto code = read_code(prompt);
      if (!code) return {true, {}, false};
      std::string text = *code;
      if (n == 3 && failing) text = splice(failing, target_span(error, failing), *code);
      try {
        return {false, parse_checked(make_source(text)), n == 3};
      } catch (const PelException& e) {
        out_ << render_error(e);
        continue;
      }
    }
    if (*choice == "4") {
      out_ << "Evaluation aborted.\n";
      return {true, {}, false};
    }
    if (*choice == "5") {
      if (auto r = self_heal(error, failing, chunk_source, false)) return *r;
      continue;
    }
    out_ << "Please answer 1, 2, 3, 4 or 5.\n";
  }
}

std::optional<Session::Resolution> Session::self_heal(const PelException& error,
                                                      const ExprPtr& failing,
                                                      const SourcePtr& chunk_source,
                                                      bool automatic) {
  out_ << "SELF-HEALING...\n";
  const std::string snippet = failing
                                  ? std::string(slice(*failing->source, target_span(error, failing)))
                                  : *chunk_source;
  std::string fix;
  try {
    fix = interp_.backend().propose_fix(error, snippet);
  } catch (const PelException& e) {
    out_ << "Helper agent failed: " << e.message() << "\n";
    return std::nullopt;
  }
  out_ << "Helper agent proposed rewrite:\n" << fix << "\n";
  if (automatic) {
    out_ << "Rewrite accepted automatically (attempt " << heals_this_form_ << " of "
         << options_.heal_cap << ").\n";
  } else {
    while (true) {
      auto c = ask("Press 'a' to accept, 'e' to edit, 'r' to abort.\nChoice (a/e/r)? ");
      if (!c || *c == "r") return std::nullopt;
      if (*c == "a") break;
      if (*c == "e") {
        auto edited = read_code("Enter the edited rewrite:\n");
        if (!edited) return std::nullopt;
        fix = *edited;
        break;
      }
      out_ << "Please answer a, e or r.\n";
    }
  }
  const std::string text = failing ? splice(failing, target_span(error, failing), fix) : fix;
  std::vector<ExprPtr> forms;
  try {
    forms = parse_checked(make_source(text));
  } catch (const PelException& e) {
    out_ << render_error(e);
    return std::nullopt;
  }
  out_ << numbered(text);
  return Resolution{false, std::move(forms), failing != nullptr};
}

std::size_t Session::run(std::istream& in) {
  std::size_t aborted = 0;
  if (options_.scripted) {
    std::ostringstream all;
    all << in.rdbuf();
    for (const auto& chunk : split_chunks(all.str())) {
      echo_entry(chunk, "Pel> ");
      if (eval_chunk(chunk) == Outcome::aborted) ++aborted;
    }
    return aborted;
  }
  std::string entry;
  std::string line;
  out_ << "Pel> " << std::flush;
  while (std::getline(in, line)) {
    entry += line + "\n";
    if (!has_code(entry)) {
      entry.clear();
      out_ << "Pel> " << std::flush;
      continue;
    }
    if (!is_balanced(entry)) {
      out_ << "     " << std::flush;
      continue;
    }
    entry.pop_back();
    if (eval_chunk(entry) == Outcome::aborted) ++aborted;
    entry.clear();
    out_ << "Pel> " << std::flush;
  }
  out_ << "\n";
  return aborted;
}

}  // namespace pel::repl

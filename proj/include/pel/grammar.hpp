#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pel/ast.hpp"

namespace pel {

/// Which language features a program may use.
struct CapabilityConfig {
  bool allow_pipe = true;
  bool allow_quote = true;
  bool allow_literal_list = true;
  bool allow_do_async = true;
  std::set<std::string> disabled_symbols;
  std::optional<std::size_t> max_nesting_depth;
  /// When set, a symbol must be in allowed_symbols (the core builtins if
  /// left empty) or be bound by the program itself.
  bool closed_symbol_set = false;
  std::set<std::string> allowed_symbols;

  /// Flat `key = value` text. Booleans are true/false, lists are
  /// `["a", "b"]` or comma separated, `#` starts a comment.
  static CapabilityConfig parse(std::string_view text);
  static CapabilityConfig load(const std::filesystem::path& file);

  /// Symbols the closed set admits (allowed_symbols or the core builtins),
  /// minus disabled ones.
  std::set<std::string> effective_allowed() const;
  /// Whether `name` is forbidden regardless of program bindings.
  bool symbol_disabled(std::string_view name) const;
};

struct Violation {
  std::string construct;  // "pipe", "quote", "literal list", "symbol print", "nesting"
  std::string flag;       // the capability that forbids it
  Span span;
  std::string message;
};

std::vector<Violation> validate(const std::vector<ExprPtr>& program, const CapabilityConfig& caps);

/// Throws PelException(CapabilityViolation) for the first violation.
void enforce(const std::vector<ExprPtr>& program, const CapabilityConfig& caps,
             const SourcePtr& source = nullptr);

/// Bracket nesting: atoms 0, `(a)` and `[a]` 1, `[[a]]` 2. Quotes and pipes
/// add nothing.
std::size_t nesting_depth(const ExprPtr& expr);

std::string export_ebnf(const CapabilityConfig& caps);

/// Regular-expression building block that renders to ECMAScript syntax and
/// can also produce random strings from its language.
class RegexNode {
 public:
  enum class Kind { literal, choice_set, seq, alt, star, opt, lookahead };
  using Ptr = std::shared_ptr<const RegexNode>;

  static Ptr literal(std::string pattern, std::vector<std::string> samples);
  static Ptr seq(std::vector<Ptr> parts);
  static Ptr alt(std::vector<Ptr> options);
  static Ptr star(Ptr inner);
  static Ptr opt(Ptr inner);
  static Ptr lookahead(std::string pattern);

  std::string render() const;
  /// Size of render() without building it.
  std::size_t rendered_size() const { return size_; }
  std::string sample(std::mt19937& rng) const;

 private:
  static std::size_t measure(const RegexNode& n);

  Kind kind_ = Kind::literal;
  std::string pattern_;
  std::vector<std::string> samples_;
  std::vector<Ptr> parts_;
  std::size_t size_ = 0;  // computed once the node is built
};

/// Regex tree for programs of nesting depth at most `depth` under `caps`.
RegexNode::Ptr grammar_regex(const CapabilityConfig& caps, std::size_t depth);

/// grammar_regex rendered. Throws DepthTooLarge past `max_bytes`.
std::string export_regex(const CapabilityConfig& caps, std::size_t depth,
                         std::size_t max_bytes = 1u << 20);

}  // namespace pel

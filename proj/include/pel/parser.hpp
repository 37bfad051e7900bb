#pragma once

#include <string_view>
#include <vector>

#include "pel/ast.hpp"
#include "pel/lexer.hpp"

namespace pel {

/// Builds top-level expressions from tokens.
///
/// Keys followed by a value fold into pair nodes inside call arguments,
/// literal lists and at top level, never under a quote. `()` is nil, and
/// `(do a b c)` is normalized to `(do [a b c])` (likewise `do/async`).
/// Throws PelException(ParseError).
std::vector<ExprPtr> parse_program(const std::vector<Token>& tokens,
                                   SourcePtr source = nullptr);

/// tokenize + parse_program over a shared copy of `text`.
std::vector<ExprPtr> parse_source(std::string_view text);
std::vector<ExprPtr> parse_source(const SourcePtr& text);

/// Pair folding over already parsed elements. With `allow_pairs` off the
/// elements pass through untouched.
std::vector<ExprPtr> fold_pairs(std::vector<ExprPtr> elements, bool allow_pairs);

}  // namespace pel

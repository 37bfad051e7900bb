#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pel/source.hpp"

namespace pel {

enum class TokenKind {
  lparen,
  rparen,
  lbracket,
  rbracket,
  quote,
  pipe,
  boolean,
  nil,
  string,
  key,
  number,
  symbol,
};

const char* to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string text;  // exact lexeme; strings keep their quotes
  Span span;
};

/// Splits UTF-8 source into tokens, dropping whitespace and `;` comments.
///
/// At every position the longest matching terminal wins; ties resolve in the
/// order BOOL, NIL, STRING, KEY, NUMBER, PIPE, delimiters, QUOTE, SYMBOL.
/// Throws PelException(LexError) with a span inside the source.
std::vector<Token> tokenize(std::string_view source);

/// Characters a symbol may not contain (besides whitespace and `▷`).
bool is_symbol_excluded(char c);
bool is_key_char(char c);

}  // namespace pel

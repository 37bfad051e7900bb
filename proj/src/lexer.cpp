#include "pel/lexer.hpp"

#include <array>

#include "pel/error.hpp"

namespace pel {

namespace {

constexpr std::string_view kPipeGlyph = "\xE2\x96\xB7";  // U+25B7

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

// Length of the well-formed UTF-8 sequence at `pos`, or 0 if malformed.
std::size_t utf8_length(std::string_view s, std::size_t pos) {
  auto c = static_cast<unsigned char>(s[pos]);
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) { len = 2; cp = c & 0x1F; }
  else if ((c & 0xF0) == 0xE0) { len = 3; cp = c & 0x0F; }
  else if ((c & 0xF8) == 0xF0) { len = 4; cp = c & 0x07; }
  else return 0;
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    auto cc = static_cast<unsigned char>(s[pos + i]);
    if (!is_continuation(cc)) return 0;
    cp = (cp << 6) | (cc & 0x3F);
  }
  static constexpr std::array<std::uint32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    validate_utf8();
    std::vector<Token> out;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (is_space(c)) {
        advance(1);
        continue;
      }
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
        continue;
      }
      out.push_back(next_token());
    }
    return out;
  }

 private:
  Token next_token() {
    std::size_t best = 0;
    TokenKind kind = TokenKind::symbol;
    auto consider = [&](std::size_t len, TokenKind k) {
      if (len > best) {
        best = len;
        kind = k;
      }
    };
    std::string_view rest = src_.substr(pos_);

    if (rest.starts_with("#t") || rest.starts_with("#f")) consider(2, TokenKind::boolean);
    if (rest.starts_with("#nil")) consider(4, TokenKind::nil);
    if (rest[0] == '"') {
      auto close = rest.find('"', 1);
      if (close == std::string_view::npos) {
        Span span = span_for(src_.size() - pos_);
        throw PelException(ErrorKind::LexError, "unterminated string literal", span);
      }
      consider(close + 1, TokenKind::string);
    }
    consider(match_key(rest), TokenKind::key);
    consider(match_number(rest), TokenKind::number);
    if (rest.starts_with(kPipeGlyph)) consider(kPipeGlyph.size(), TokenKind::pipe);
    if (rest.starts_with("|>")) consider(2, TokenKind::pipe);
    switch (rest[0]) {
      case '(': consider(1, TokenKind::lparen); break;
      case ')': consider(1, TokenKind::rparen); break;
      case '[': consider(1, TokenKind::lbracket); break;
      case ']': consider(1, TokenKind::rbracket); break;
      case '\'': consider(1, TokenKind::quote); break;
      default: break;
    }
    consider(match_symbol(rest), TokenKind::symbol);

    if (best == 0) {
      std::string what = rest[0] == '|' ? "'|' must be followed by '>' to form a pipe"
                                        : "unexpected character";
      throw PelException(ErrorKind::LexError, what, span_for(utf8_length(src_, pos_)));
    }
    Token tok{kind, std::string(rest.substr(0, best)), span_for(best)};
    advance(best);
    return tok;
  }

  static std::size_t match_key(std::string_view s) {
    if (s[0] != ':') return 0;
    std::size_t i = 1;
    while (i < s.size() && is_key_char(s[i])) ++i;
    return i > 1 ? i : 0;
  }

  static std::size_t match_number(std::string_view s) {
    std::size_t i = 0;
    if (s[i] == '-') ++i;
    std::size_t digits = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == digits) return 0;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
    return i;
  }

  static std::size_t match_symbol(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (is_space(c) || is_symbol_excluded(c)) break;
      if (s.substr(i).starts_with(kPipeGlyph)) break;
      ++i;
    }
    return i;
  }

  // Span of the next `len` bytes starting at the cursor.
  Span span_for(std::size_t len) const {
    Span span;
    span.begin = pos_;
    span.end = pos_ + len;
    span.line = line_;
    span.col = col_;
    std::uint32_t line = line_;
    std::uint32_t col = col_;
    std::uint32_t last_line = line_;
    std::uint32_t last_col = col_;
    for (std::size_t i = pos_; i < pos_ + len && i < src_.size(); ++i) {
      auto c = static_cast<unsigned char>(src_[i]);
      if (is_continuation(c)) continue;
      last_line = line;
      last_col = col;
      if (c == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    span.end_line = last_line;
    span.end_col = last_col;
    return span;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      auto c = static_cast<unsigned char>(src_[pos_]);
      if (is_continuation(c)) continue;
      if (c == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  // Runs before tokenizing, with the cursor at the start of the source.
  void validate_utf8() {
    for (std::size_t i = 0; i < src_.size();) {
      std::size_t len = utf8_length(src_, i);
      if (len == 0) {
        advance(i);
        throw PelException(ErrorKind::LexError, "invalid UTF-8 byte sequence", span_for(1));
      }
      i += len;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

}  // namespace

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::lparen: return "LPAREN";
    case TokenKind::rparen: return "RPAREN";
    case TokenKind::lbracket: return "LBRACKET";
    case TokenKind::rbracket: return "RBRACKET";
    case TokenKind::quote: return "QUOTE";
    case TokenKind::pipe: return "PIPE";
    case TokenKind::boolean: return "BOOL";
    case TokenKind::nil: return "NIL";
    case TokenKind::string: return "STRING";
    case TokenKind::key: return "KEY";
    case TokenKind::number: return "NUMBER";
    case TokenKind::symbol: return "SYMBOL";
  }
  return "?";
}

bool is_symbol_excluded(char c) {
  switch (c) {
    case '(': case ')': case '[': case ']':
    case '"': case '\'': case ';': case '|':
      return true;
    default:
      return false;
  }
}

bool is_key_char(char c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_digit(c)) return true;
  switch (c) {
    case '_': case '+': case '*': case '/': case '?': case '!':
    case '<': case '=': case '>': case '.': case '-':
      return true;
    default:
      return false;
  }
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace pel

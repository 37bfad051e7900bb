#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace pel {

/// Location of a token or expression in its source text.
///
/// `begin`/`end` are byte offsets (half open). Lines and columns are 1-based;
/// columns count Unicode code points and `end_col` is inclusive.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::uint32_t line = 1;
  std::uint32_t col = 1;
  std::uint32_t end_line = 1;
  std::uint32_t end_col = 1;

  /// Smallest span covering both `a` and `b` (`a` must start first).
  static Span cover(const Span& a, const Span& b) {
    return Span{a.begin, b.end, a.line, a.col, b.end_line, b.end_col};
  }

  bool single_line() const { return line == end_line; }
  bool contains(const Span& other) const {
    return begin <= other.begin && other.end <= end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

using SourcePtr = std::shared_ptr<const std::string>;

inline SourcePtr make_source(std::string text) {
  return std::make_shared<const std::string>(std::move(text));
}

inline std::string_view slice(const std::string& source, const Span& span) {
  if (span.begin >= source.size() || span.end < span.begin) return {};
  return std::string_view(source).substr(span.begin, span.end - span.begin);
}

}  // namespace pel

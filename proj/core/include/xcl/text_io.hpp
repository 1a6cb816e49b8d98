#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Shared helpers for the line-oriented text formats (datasets, transfer
// sets, model files). Numbers are written with 17 significant digits so that
// every double survives a write/read cycle bit for bit.

namespace xcl::text {

std::string format_double(double v);
void write_row(std::ostream& out, std::span<const double> values);

/// Line reader that tracks 1-based line numbers for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next line; throws ParseError("unexpected end of file") at EOF.
  std::string next(std::string_view expecting);
  bool next_if_any(std::string& line);
  std::size_t line_number() const noexcept { return line_; }

  /// Reads `key=value` and returns the value; throws on a different key.
  std::string expect_key(std::string_view key);

  double parse_double(std::string_view token) const;
  long long parse_int(std::string_view token) const;
  std::vector<double> parse_row(std::string_view line, std::size_t expected) const;

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace xcl::text

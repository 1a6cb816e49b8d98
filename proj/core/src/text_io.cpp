#include "xcl/text_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "xcl/errors.hpp"

namespace xcl::text {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ',';
    out << format_double(values[i]);
  }
  out << '\n';
}

std::string LineReader::next(std::string_view expecting) {
  std::string line;
  if (!next_if_any(line)) {
    throw ParseError("unexpected end of file, expected " + std::string(expecting), line_ + 1);
  }
  return line;
}

bool LineReader::next_if_any(std::string& line) {
  if (!std::getline(in_, line)) return false;
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string LineReader::expect_key(std::string_view key) {
  const std::string line = next(key);
  const auto eq = line.find('=');
  if (eq == std::string::npos || trim(std::string_view(line).substr(0, eq)) != key) {
    throw ParseError("expected '" + std::string(key) + "=...', got '" + line + "'", line_);
  }
  return std::string(trim(std::string_view(line).substr(eq + 1)));
}

double LineReader::parse_double(std::string_view token) const {
  token = trim(token);
  // from_chars rejects a leading '+', and the writer never emits one.
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw ParseError("invalid number '" + std::string(token) + "'", line_);
  }
  return v;
}

long long LineReader::parse_int(std::string_view token) const {
  token = trim(token);
  long long v = 0;
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, v);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw ParseError("invalid integer '" + std::string(token) + "'", line_);
  }
  return v;
}

std::vector<double> LineReader::parse_row(std::string_view line, std::size_t expected) const {
  const auto tokens = split(line, ',');
  if (tokens.size() != expected) {
    throw ParseError("row has " + std::to_string(tokens.size()) + " fields, expected " +
                         std::to_string(expected),
                     line_);
  }
  std::vector<double> values;
  values.reserve(tokens.size());
  for (auto t : tokens) values.push_back(parse_double(t));
  return values;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t");
  return text.substr(first, last - first + 1);
}

}  // namespace xcl::text

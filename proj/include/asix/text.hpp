#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace asix::text {

/// Splits on `sep`, keeping empty fields.
std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

/// True for blank lines and `#` comments.
bool is_skippable(std::string_view line);

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(std::string_view s);

/// Calls fn(lineno, line) for every non-skippable line; lineno is 1-based.
template <class Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_skippable(line)) continue;
    fn(lineno, std::string_view(line));
  }
}

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Shortest round-tripping decimal form.
std::string format_double(double v);

}  // namespace asix::text

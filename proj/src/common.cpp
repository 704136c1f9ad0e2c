#include <charconv>
#include <cstdio>

#include "asix/net.hpp"
#include "asix/text.hpp"
#include "asix/types.hpp"

namespace asix {

std::optional<ASNumber> ASNumber::parse(std::string_view text) {
  auto v = text::parse_int<std::uint32_t>(text::trim(text));
  if (!v || *v == 0) return std::nullopt;
  return ASNumber(*v);
}

std::optional<IXId> IXId::parse(std::string_view text) {
  auto v = text::parse_int<std::uint32_t>(text::trim(text));
  if (!v || *v == 0) return std::nullopt;
  return IXId(*v);
}

std::string format_path(const ASPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += ' ';
    out += path[i].str();
  }
  return out;
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  int octets = 0;
  std::size_t pos = 0;
  while (octets < 4) {
    std::size_t start = pos;
    std::uint32_t octet = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      octet = octet * 10 + static_cast<std::uint32_t>(text[pos] - '0');
      if (octet > 255 || pos - start >= 3) return std::nullopt;
      ++pos;
    }
    if (pos == start) return std::nullopt;
    value = (value << 8) | octet;
    ++octets;
    if (octets < 4) {
      if (pos >= text.size() || text[pos] != '.') return std::nullopt;
      ++pos;
    }
  }
  if (pos != text.size()) return std::nullopt;
  return Ipv4{value};
}

std::string Ipv4::str() const {
  char buf[16];
  int n = std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (value >> 24) & 255u, (value >> 16) & 255u,
                        (value >> 8) & 255u, value & 255u);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::optional<Prefix> Prefix::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = Ipv4::parse(text.substr(0, slash));
  auto len = text::parse_int<unsigned>(text.substr(slash + 1));
  if (!addr || !len || *len > 32) return std::nullopt;
  Prefix p{*addr, static_cast<std::uint8_t>(*len)};
  if ((addr->value & p.mask()) != addr->value) return std::nullopt;
  return p;
}

Prefix Prefix::containing(Ipv4 addr, std::uint8_t length) {
  Prefix p{Ipv4{0}, length};
  p.network.value = addr.value & p.mask();
  return p;
}

std::string Prefix::str() const { return network.str() + "/" + std::to_string(length); }

namespace text {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_skippable(std::string_view line) {
  auto t = trim(line);
  return t.empty() || t.front() == '#';
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace text
}  // namespace asix

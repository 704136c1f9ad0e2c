#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asix {

/// Autonomous system number. Always non-zero; 32-bit.
class ASNumber {
 public:
  constexpr explicit ASNumber(std::uint32_t value) : value_(value) {
    if (value == 0) throw std::invalid_argument("AS number must be positive");
  }

  static std::optional<ASNumber> parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  std::string str() const { return std::to_string(value_); }

  friend constexpr auto operator<=>(ASNumber, ASNumber) = default;

 private:
  std::uint32_t value_;
};

using ASPath = std::vector<ASNumber>;

/// Registry-local Internet exchange identifier.
class IXId {
 public:
  constexpr explicit IXId(std::uint32_t value) : value_(value) {
    if (value == 0) throw std::invalid_argument("IX id must be positive");
  }

  static std::optional<IXId> parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  std::string str() const { return std::to_string(value_); }

  friend constexpr auto operator<=>(IXId, IXId) = default;

 private:
  std::uint32_t value_;
};

/// Space-separated AS numbers, e.g. "1 2 3".
std::string format_path(const ASPath& path);

}  // namespace asix

template <>
struct std::hash<asix::ASNumber> {
  std::size_t operator()(asix::ASNumber as) const noexcept {
    return std::hash<std::uint32_t>{}(as.value());
  }
};

template <>
struct std::hash<asix::IXId> {
  std::size_t operator()(asix::IXId ix) const noexcept {
    return std::hash<std::uint32_t>{}(ix.value());
  }
};

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asix {

/// IPv4 address in host byte order.
struct Ipv4 {
  std::uint32_t value = 0;

  static std::optional<Ipv4> parse(std::string_view text);
  std::string str() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

/// CIDR block. Host bits are always zero.
struct Prefix {
  Ipv4 network;
  std::uint8_t length = 0;

  /// Rejects blocks with host bits set.
  static std::optional<Prefix> parse(std::string_view text);
  static Prefix containing(Ipv4 addr, std::uint8_t length);

  constexpr std::uint32_t mask() const {
    return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  }
  constexpr bool contains(Ipv4 addr) const { return (addr.value & mask()) == network.value; }
  constexpr bool contains(const Prefix& other) const {
    return other.length >= length && contains(other.network);
  }
  constexpr bool overlaps(const Prefix& other) const {
    return contains(other) || other.contains(*this);
  }
  std::string str() const;

  friend constexpr auto operator<=>(const Prefix&, const Prefix&) = default;
};

/// Binary trie with longest-prefix-match lookup.
template <class V>
class PrefixTrie {
 public:
  struct Entry {
    Prefix prefix;
    V value;
  };

  PrefixTrie() { nodes_.push_back(Node{}); }

  /// Inserts or overwrites. Returns false when the block was already present.
  bool insert(const Prefix& prefix, V value) {
    std::uint32_t node = walk_create(prefix);
    if (nodes_[node].entry >= 0) {
      entries_[static_cast<std::size_t>(nodes_[node].entry)].value = std::move(value);
      return false;
    }
    nodes_[node].entry = static_cast<std::int32_t>(entries_.size());
    entries_.push_back(Entry{prefix, std::move(value)});
    return true;
  }

  const Entry* longest_match(Ipv4 addr) const {
    const Entry* best = nullptr;
    std::uint32_t node = 0;
    for (int depth = 0;; ++depth) {
      const Node& n = nodes_[node];
      if (n.entry >= 0) best = &entries_[static_cast<std::size_t>(n.entry)];
      if (depth == 32) break;
      std::uint32_t bit = (addr.value >> (31 - depth)) & 1u;
      if (n.child[bit] == 0) break;
      node = n.child[bit];
    }
    return best;
  }

  const Entry* exact(const Prefix& prefix) const {
    std::uint32_t node = 0;
    for (int depth = 0; depth < prefix.length; ++depth) {
      std::uint32_t bit = (prefix.network.value >> (31 - depth)) & 1u;
      if (nodes_[node].child[bit] == 0) return nullptr;
      node = nodes_[node].child[bit];
    }
    return nodes_[node].entry >= 0 ? &entries_[static_cast<std::size_t>(nodes_[node].entry)]
                                   : nullptr;
  }

  /// Any stored block that contains or is contained by `prefix`.
  const Entry* find_overlap(const Prefix& prefix) const {
    std::uint32_t node = 0;
    for (int depth = 0;; ++depth) {
      const Node& n = nodes_[node];
      if (n.entry >= 0) return &entries_[static_cast<std::size_t>(n.entry)];
      if (depth == prefix.length) return first_below(node);
      std::uint32_t bit = (prefix.network.value >> (31 - depth)) & 1u;
      if (n.child[bit] == 0) return nullptr;
      node = n.child[bit];
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  struct Node {
    std::array<std::uint32_t, 2> child{0, 0};
    std::int32_t entry = -1;
  };

  std::uint32_t walk_create(const Prefix& prefix) {
    std::uint32_t node = 0;
    for (int depth = 0; depth < prefix.length; ++depth) {
      std::uint32_t bit = (prefix.network.value >> (31 - depth)) & 1u;
      if (nodes_[node].child[bit] == 0) {
        nodes_[node].child[bit] = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back(Node{});
      }
      node = nodes_[node].child[bit];
    }
    return node;
  }

  const Entry* first_below(std::uint32_t node) const {
    std::vector<std::uint32_t> stack{node};
    while (!stack.empty()) {
      std::uint32_t n = stack.back();
      stack.pop_back();
      if (nodes_[n].entry >= 0) return &entries_[static_cast<std::size_t>(nodes_[n].entry)];
      for (std::uint32_t c : nodes_[n].child)
        if (c != 0) stack.push_back(c);
    }
    return nullptr;
  }

  std::vector<Node> nodes_;
  std::vector<Entry> entries_;
};

}  // namespace asix

template <>
struct std::hash<asix::Prefix> {
  std::size_t operator()(const asix::Prefix& p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.network.value} << 8) | p.length);
  }
};

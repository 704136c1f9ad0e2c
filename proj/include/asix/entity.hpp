#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asix/types.hpp"

namespace asix {

/// An AS or an IX that can observe traffic.
struct Entity {
  enum class Kind : std::uint8_t { AS, IX };

  Kind kind;
  std::uint32_t id;

  static Entity as(ASNumber a) { return Entity{Kind::AS, a.value()}; }
  static Entity ix(IXId x) { return Entity{Kind::IX, x.value()}; }
  static std::optional<Entity> parse(std::string_view s);  // "AS123" / "IX7"

  std::string str() const { return (kind == Kind::AS ? "AS" : "IX") + std::to_string(id); }

  friend auto operator<=>(const Entity&, const Entity&) = default;
};

/// Sorted, duplicate-free.
class EntitySet {
 public:
  EntitySet() = default;
  EntitySet(std::initializer_list<Entity> items) : items_(items) { normalize(); }
  explicit EntitySet(std::vector<Entity> items) : items_(std::move(items)) { normalize(); }

  void insert(Entity e) {
    auto it = std::lower_bound(items_.begin(), items_.end(), e);
    if (it == items_.end() || *it != e) items_.insert(it, e);
  }
  bool contains(Entity e) const { return std::binary_search(items_.begin(), items_.end(), e); }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<Entity>& items() const { return items_; }

  EntitySet filter(Entity::Kind kind) const;
  std::string str() const;  // comma separated, "-" when empty

  friend bool operator==(const EntitySet&, const EntitySet&) = default;

 private:
  void normalize() {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  }
  std::vector<Entity> items_;
};

EntitySet intersect(const EntitySet& a, const EntitySet& b);
EntitySet unite(const EntitySet& a, const EntitySet& b);
EntitySet subtract(const EntitySet& a, const EntitySet& b);
bool disjoint(const EntitySet& a, const EntitySet& b);

}  // namespace asix

#include "asix/entity.hpp"

#include <iterator>

#include "asix/text.hpp"

namespace asix {

std::optional<Entity> Entity::parse(std::string_view s) {
  if (s.size() < 3) return std::nullopt;
  auto id = text::parse_int<std::uint32_t>(s.substr(2));
  if (!id || *id == 0) return std::nullopt;
  if (s.substr(0, 2) == "AS") return Entity{Kind::AS, *id};
  if (s.substr(0, 2) == "IX") return Entity{Kind::IX, *id};
  return std::nullopt;
}

EntitySet EntitySet::filter(Entity::Kind kind) const {
  std::vector<Entity> out;
  for (const auto& e : items_)
    if (e.kind == kind) out.push_back(e);
  return EntitySet(std::move(out));
}

std::string EntitySet::str() const {
  if (items_.empty()) return "-";
  std::string out;
  for (const auto& e : items_) {
    if (!out.empty()) out += ',';
    out += e.str();
  }
  return out;
}

EntitySet intersect(const EntitySet& a, const EntitySet& b) {
  std::vector<Entity> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EntitySet(std::move(out));
}

EntitySet unite(const EntitySet& a, const EntitySet& b) {
  std::vector<Entity> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EntitySet(std::move(out));
}

EntitySet subtract(const EntitySet& a, const EntitySet& b) {
  std::vector<Entity> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EntitySet(std::move(out));
}

bool disjoint(const EntitySet& a, const EntitySet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j)
      ++i;
    else if (*j < *i)
      ++j;
    else
      return false;
  }
  return true;
}

}  // namespace asix

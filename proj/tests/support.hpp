#pragma once

#include <initializer_list>
#include <string>
#include <tuple>
#include <vector>

#include "asix/asgraph.hpp"
#include "asix/tracepipe.hpp"
#include "asix/types.hpp"

namespace testing {

inline asix::ASNumber as(std::uint32_t v) { return asix::ASNumber(v); }

inline asix::ASPath path(std::initializer_list<std::uint32_t> values) {
  asix::ASPath out;
  for (auto v : values) out.push_back(asix::ASNumber(v));
  return out;
}

inline asix::Ipv4 ip(const char* s) { return *asix::Ipv4::parse(s); }
inline asix::Prefix pfx(const char* s) { return *asix::Prefix::parse(s); }

inline asix::RibTable rib_of(std::initializer_list<std::initializer_list<std::uint32_t>> paths) {
  asix::RibTable rib;
  for (auto p : paths) {
    asix::ASPath ap = path(p);
    rib.entries.push_back({ap.front(), pfx("10.0.0.0/8"), ap});
  }
  return rib;
}

using Link = std::tuple<asix::ASNumber, asix::ASNumber, asix::Relationship>;

inline asix::ASGraph graph_of(std::initializer_list<std::tuple<std::uint32_t, std::uint32_t, asix::Relationship>> links) {
  std::vector<Link> out;
  for (const auto& [a, b, r] : links) out.emplace_back(asix::ASNumber(a), asix::ASNumber(b), r);
  return asix::ASGraph::from_links(out);
}

/// AS n owns 10.n.0.0/16.
inline asix::PrefixToASTable numbered_table(std::initializer_list<std::uint32_t> ases) {
  asix::PrefixToASTable t;
  for (auto a : ases) t.insert(pfx(("10." + std::to_string(a) + ".0.0/16").c_str()), asix::ASNumber(a));
  return t;
}

}  // namespace testing

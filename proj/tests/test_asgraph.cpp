#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "asix/asgraph.hpp"
#include "asix/errors.hpp"
#include "support.hpp"

using namespace asix;
using testing::as;
using testing::path;
using testing::rib_of;
using R = Relationship;

TEST_CASE("normalize collapses prepending and rejects loops") {
  CHECK(normalize_as_path(path({1, 1, 2, 3, 3, 3})) == path({1, 2, 3}));
  CHECK(normalize_as_path(path({7})) == path({7}));
  try {
    normalize_as_path(path({1, 2, 1}));
    FAIL("expected a loop");
  } catch (const LoopDetected& e) {
    CHECK(e.as() == as(1));
  }
  std::optional<ASNumber> loop;
  CHECK_FALSE(try_normalize_as_path(path({4, 5, 6, 4}), &loop));
  CHECK(loop == as(4));
}

TEST_CASE("highest-degree AS is the apex") {
  auto built = build_graph(rib_of({{1, 2}, {3, 2}, {4, 2}, {2, 5}}));
  const ASGraph& g = built.graph;
  CHECK(g.relationship(as(1), as(2)) == R::CustomerToProvider);
  CHECK(g.relationship(as(3), as(2)) == R::CustomerToProvider);
  CHECK(g.relationship(as(4), as(2)) == R::CustomerToProvider);
  CHECK(g.relationship(as(2), as(5)) == R::ProviderToCustomer);
  CHECK(g.relationship(as(5), as(2)) == R::CustomerToProvider);
  CHECK(built.violations.empty());
}

TEST_CASE("equal degrees on a single link make the lower AS the customer") {
  auto g = build_graph(rib_of({{1, 2}})).graph;
  CHECK(g.relationship(as(1), as(2)) == R::CustomerToProvider);
  auto g2 = build_graph(rib_of({{2, 1}})).graph;
  CHECK(g2.relationship(as(1), as(2)) == R::CustomerToProvider);
}

TEST_CASE("mutual transit yields a sibling link") {
  auto g = build_graph(rib_of({{1, 2, 3}, {2, 1, 3}})).graph;
  CHECK(g.relationship(as(1), as(2)) == R::Sibling);
  CHECK(g.relationship(as(2), as(1)) == R::Sibling);
}

TEST_CASE("equal-degree neighbours across an interior apex peer") {
  // 10 and 20 each have three neighbours; the tie puts the apex on 20.
  auto g = build_graph(rib_of({{1, 10, 20, 4}, {2, 10}, {20, 5}})).graph;
  CHECK(g.relationship(as(10), as(20)) == R::PeerToPeer);
  CHECK(g.relationship(as(1), as(10)) == R::CustomerToProvider);
  CHECK(g.relationship(as(20), as(4)) == R::ProviderToCustomer);
}

TEST_CASE("peer ratio widens peer candidacy") {
  auto rib = rib_of({{1, 10, 20, 4}, {2, 10}, {3, 10}, {20, 5}});
  CHECK(build_graph(rib).graph.relationship(as(10), as(20)) == R::ProviderToCustomer);
  CHECK(build_graph(rib, GaoOptions{1.5}).graph.relationship(as(10), as(20)) == R::PeerToPeer);
}

TEST_CASE("loops are dropped and counted; empty input is an error") {
  auto built = build_graph(rib_of({{1, 2, 1}, {3, 4}}));
  CHECK(built.loops_dropped == 1);
  CHECK(built.paths_used == 1);
  CHECK_THROWS_AS(build_graph(rib_of({{1, 2, 1}})), EmptyInput);
  CHECK_THROWS_AS(build_graph(rib_of({{7}})), EmptyInput);
  CHECK_THROWS_AS(build_graph(RibTable{}), EmptyInput);
}

TEST_CASE("valley-free pattern") {
  auto vf = [](std::initializer_list<R> rels) { return is_valley_free(std::vector<R>(rels)); };
  CHECK(vf({R::CustomerToProvider, R::ProviderToCustomer}));
  CHECK_FALSE(vf({R::ProviderToCustomer, R::CustomerToProvider}));
  CHECK_FALSE(vf({R::CustomerToProvider, R::PeerToPeer, R::PeerToPeer}));
  CHECK(vf({R::Sibling, R::CustomerToProvider, R::PeerToPeer, R::Sibling, R::ProviderToCustomer}));
  CHECK_FALSE(vf({R::PeerToPeer, R::CustomerToProvider}));
  CHECK(vf({}));

  auto g = testing::graph_of({{1, 3, R::CustomerToProvider},
                              {3, 2, R::PeerToPeer},
                              {2, 5, R::ProviderToCustomer},
                              {1, 6, R::CustomerToProvider}});
  CHECK(is_valley_free(g, path({1, 3, 2, 5})));
  CHECK(is_valley_free(g, path({5, 2, 3, 1})));
  CHECK_FALSE(is_valley_free(g, path({3, 1, 6})));
  CHECK_THROWS_AS(is_valley_free(g, path({1, 5})), UnknownLink);
}

TEST_CASE("rib lines: malformed lines are skipped and counted") {
  std::istringstream in(
      "# comment\n"
      "1|10.0.0.0/8|1 2 3\n"
      "bad line\n"
      "2|10.0.0.1/8|2 3\n"
      "3|10.0.0.0/8|\n"
      "4|192.0.2.0/24|4 4 5\n");
  ParseStats st;
  RibTable rib = parse_rib(in, &st);
  CHECK(rib.entries.size() == 2);
  CHECK(st.malformed == 3);
  std::ostringstream out;
  write_rib(out, rib);
  CHECK(out.str() == "1|10.0.0.0/8|1 2 3\n4|192.0.2.0/24|4 4 5\n");
}

namespace {

RibTable random_rib(std::mt19937& rng, int paths, int ases) {
  RibTable rib;
  for (int i = 0; i < paths; ++i) {
    const int len = 1 + static_cast<int>(rng() % 6);
    ASPath p;
    for (int j = 0; j < len; ++j) p.push_back(ASNumber(1 + rng() % static_cast<unsigned>(ases)));
    rib.entries.push_back({p.front(), testing::pfx("10.0.0.0/8"), p});
  }
  return rib;
}

}  // namespace

TEST_CASE("graph invariants hold on random ribs") {
  std::mt19937 rng(7);
  for (int round = 0; round < 40; ++round) {
    RibTable rib = random_rib(rng, 60, 25);
    GraphBuild built;
    try {
      built = build_graph(rib);
    } catch (const EmptyInput&) {
      continue;
    }
    const ASGraph& g = built.graph;

    // Degrees from an independent neighbour-set computation.
    std::map<ASNumber, std::set<ASNumber>> nb;
    std::set<ASNumber> seen;
    for (const auto& e : rib.entries) {
      auto p = try_normalize_as_path(e.as_path);
      if (!p) continue;
      for (ASNumber a : *p) seen.insert(a);
      for (std::size_t j = 0; j + 1 < p->size(); ++j) {
        nb[(*p)[j]].insert((*p)[j + 1]);
        nb[(*p)[j + 1]].insert((*p)[j]);
      }
    }
    for (ASNumber a : seen) {
      CHECK(g.contains(a));
      CHECK(g.degree(a) == nb[a].size());
    }

    // Link symmetry with inverse labels.
    for (ASNumber a : g.nodes())
      for (const auto& n : g.neighbors(a)) {
        auto back = g.relationship(n.as, a);
        REQUIRE(back);
        CHECK(*back == inverse(n.rel));
      }

    // Every usable path is either valley-free or logged.
    std::set<std::size_t> logged(built.violations.begin(), built.violations.end());
    for (std::size_t i = 0; i < rib.entries.size(); ++i) {
      auto p = try_normalize_as_path(rib.entries[i].as_path);
      if (!p || p->size() < 2) continue;
      CHECK((is_valley_free(g, *p) || logged.count(i) == 1));
    }

    // Deterministic canonical form, and it reads back equal.
    std::ostringstream a, b;
    g.write(a);
    build_graph(rib).graph.write(b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    CHECK(ASGraph::read(in) == g);
  }
}

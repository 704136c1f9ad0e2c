#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "asix/errors.hpp"
#include "asix/pathinfer.hpp"
#include "asix/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace asix;
using testing::as;
using testing::path;
using R = Relationship;

namespace {

ASGraph small_graph(bool with_direct) {
  if (with_direct)
    return testing::graph_of({{1, 3, R::CustomerToProvider},
                              {3, 2, R::PeerToPeer},
                              {2, 5, R::ProviderToCustomer},
                              {1, 2, R::CustomerToProvider}});
  return testing::graph_of(
      {{1, 3, R::CustomerToProvider}, {3, 2, R::PeerToPeer}, {2, 5, R::ProviderToCustomer}});
}

std::vector<ASPath> paths_of(const InferredPathSet& s) {
  std::vector<ASPath> out;
  for (const auto& p : s.paths) out.push_back(p.path);
  return out;
}

}  // namespace

TEST_CASE("source equal to destination gives the one-AS path") {
  const std::vector<std::tuple<ASNumber, ASNumber, R>> none;
  const std::vector<ASNumber> extra{as(7)};
  ASGraph g = ASGraph::from_links(none, extra);
  RouteBase base;
  base.add_path(path({7}));
  auto r = infer_top_k(g, base, as(7), as(7), 1);
  CHECK(paths_of(r) == std::vector<ASPath>{path({7})});
  CHECK(path_as_set(r, 1).empty());
}

TEST_CASE("ascending prepend joins an observed suffix") {
  RouteBase base;
  base.add_suffix(path({3, 2, 5}));
  auto r = infer_top_k(small_graph(false), base, as(1), as(5), 1);
  CHECK(paths_of(r) == std::vector<ASPath>{path({1, 3, 2, 5})});
  CHECK(r.paths[0].count == 1);
  CHECK(path_as_set(r, 1) == std::set<ASNumber>{as(2), as(3)});
}

TEST_CASE("more frequently observed suffix ranks first") {
  RouteBase base;
  base.add_suffix(path({3, 2, 5}));
  base.add_suffix(path({2, 5}), 3);
  auto g = small_graph(true);
  auto r = infer_top_k(g, base, as(1), as(5), 2);
  CHECK(paths_of(r) == std::vector<ASPath>{path({1, 2, 5}), path({1, 3, 2, 5})});
  CHECK(r.paths[0].count == 3);
  CHECK(path_as_set(r, 1) == std::set<ASNumber>{as(2)});
  CHECK(path_as_set(r, 2) == std::set<ASNumber>{as(2), as(3)});
  // k beyond the candidates is clamped.
  CHECK(infer_top_k(g, base, as(1), as(5), 5).paths.size() == 2);
  CHECK(path_as_set(r, 5) == path_as_set(r, 2));
}

TEST_CASE("rib suffixes are counted") {
  auto base = build_route_base(testing::rib_of({{1, 2, 3}, {4, 2, 3}, {4, 4, 2, 3}}));
  CHECK(base.count(path({1, 2, 3})) == 1);
  CHECK(base.count(path({4, 2, 3})) == 2);
  CHECK(base.count(path({2, 3})) == 3);
  CHECK(base.count(path({3})) == 3);
  CHECK(base.count(path({1, 2})) == 0);
  CHECK(base.suffixes_to(as(3))->size() == 4);
  CHECK(base.suffixes_to(as(2)) == nullptr);
  CHECK_THROWS_AS(build_route_base(testing::rib_of({{1, 2, 1}})), EmptyInput);
}

TEST_CASE("query errors") {
  RouteBase base;
  base.add_suffix(path({3, 2, 5}));
  auto g = small_graph(false);
  CHECK_THROWS_AS(infer_top_k(g, base, as(9), as(5), 1), UnknownAS);
  CHECK_THROWS_AS(infer_top_k(g, base, as(1), as(9), 1), UnknownAS);
  CHECK_THROWS_AS(infer_top_k(g, base, as(5), as(1), 1), NoRoute);
  CHECK_THROWS_AS(infer_top_k(g, base, as(1), as(5), 0), std::invalid_argument);
  CHECK_THROWS_AS(infer_top_k(g, base, as(1), as(5), 6), std::invalid_argument);
}

TEST_CASE("prepend depth bounds the ascending walk") {
  // Chain 1 -> 2 -> ... -> 7 of customer-to-provider links; only [6, 7] observed.
  auto g = testing::graph_of({{1, 2, R::CustomerToProvider},
                              {2, 3, R::CustomerToProvider},
                              {3, 4, R::CustomerToProvider},
                              {4, 5, R::CustomerToProvider},
                              {5, 6, R::CustomerToProvider},
                              {6, 7, R::CustomerToProvider}});
  RouteBase base;
  base.add_suffix(path({6, 7}));
  CHECK(infer_top_k(g, base, as(2), as(7), 1).paths[0].path == path({2, 3, 4, 5, 6, 7}));
  CHECK_THROWS_AS(infer_top_k(g, base, as(1), as(7), 1), NoRoute);
  CHECK(infer_top_k(g, base, as(1), as(7), 1, InferOptions{5, 5}).paths[0].path.size() == 7);
}

TEST_CASE("top-1 agrees with exhaustive enumeration on small graphs") {
  std::mt19937_64 rng(11);
  int compared = 0;
  for (int round = 0; round < 60; ++round) {
    const int n = 3 + static_cast<int>(rng() % 6);
    ASGraph g = oracle::random_relationship_graph(rng, n, 0.3);
    const ASNumber dst(1 + static_cast<std::uint32_t>(rng() % static_cast<unsigned>(n)));
    auto observed = oracle::all_valley_free_paths_to(g, dst);
    std::shuffle(observed.begin(), observed.end(), rng);
    observed.resize(observed.size() / 2 + 1);
    RouteBase base;
    for (const auto& p : observed) base.add_path(p);
    for (ASNumber src : g.nodes()) {
      auto want = oracle::brute_force_best(g, observed, src, dst, 4);
      if (!want) {
        CHECK_THROWS_AS(infer_top_k(g, base, src, dst, 1), NoRoute);
        continue;
      }
      auto got = infer_top_k(g, base, src, dst, 1);
      REQUIRE(got.paths.size() == 1);
      CHECK(got.paths[0].path == want->path);
      CHECK(got.paths[0].count == want->count);
      ++compared;
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("ranked output properties on a synthetic topology") {
  synth::SynthConfig cfg;
  cfg.seed = 5;
  auto corpus = synth::generate_corpus(cfg);
  auto model = build_route_model(corpus.rib);
  std::mt19937_64 rng(3);
  const auto& nodes = model.graph.nodes();
  int answered = 0;
  for (int q = 0; q < 150; ++q) {
    ASNumber src = nodes[rng() % nodes.size()];
    ASNumber dst = nodes[rng() % nodes.size()];
    std::set<ASNumber> prev;
    std::vector<ASPath> prev_paths;
    for (std::size_t k = 1; k <= 5; ++k) {
      std::optional<InferredPathSet> found;
      try {
        found = infer_top_k(model.graph, model.base, src, dst, k);
      } catch (const NoRoute&) {
        break;
      }
      const InferredPathSet& r = *found;
      if (k == 1) ++answered;
      CHECK(r.paths.size() <= k);
      std::set<ASPath> distinct;
      for (std::size_t i = 0; i < r.paths.size(); ++i) {
        const auto& p = r.paths[i].path;
        CHECK(p.front() == src);
        CHECK(p.back() == dst);
        CHECK(oracle::loop_free(p));
        CHECK(oracle::valley_free_path(model.graph, p));
        CHECK(distinct.insert(p).second);
        if (i > 0) CHECK(ranks_before(r.paths[i - 1], r.paths[i]));
      }
      // A larger k extends the list without reordering it.
      auto now = paths_of(r);
      CHECK(std::equal(prev_paths.begin(), prev_paths.end(), now.begin()));
      auto set = path_as_set(r, k);
      CHECK(std::includes(set.begin(), set.end(), prev.begin(), prev.end()));
      prev = set;
      prev_paths = now;

      auto again = infer_top_k(model.graph, model.base, src, dst, k);
      CHECK(paths_of(again) == now);
    }
  }
  CHECK(answered > 50);
}

TEST_CASE("inference output lines") {
  RouteBase base;
  base.add_suffix(path({3, 2, 5}));
  base.add_suffix(path({2, 5}), 3);
  std::ostringstream out;
  write_inference(out, infer_top_k(small_graph(true), base, as(1), as(5), 2));
  CHECK(out.str() == "1|5|1|1 2 5|3|3\n1|5|2|1 3 2 5|1|4\n");
}

TEST_CASE("daily models fall back to the nearest earlier window") {
  DailyRouteModels models;
  auto m = std::make_shared<RouteModel>(build_route_model(testing::rib_of({{1, 2, 3}})));
  models.add(10, m);
  models.add(12, m);
  CHECK(models.window_of(10 * 86400 + 5) == 10);
  CHECK(models.window_of(11 * 86400) == 10);
  CHECK(models.window_of(13 * 86400) == 12);
  CHECK(models.window_of(0) == 10);
  CHECK_THROWS_AS(models.add(10, m), DataError);
}

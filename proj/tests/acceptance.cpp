#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asix/analysis.hpp"
#include "asix/errors.hpp"
#include "asix/pathinfer.hpp"
#include "asix/pipeline.hpp"
#include "asix/synth.hpp"
#include "asix/torsim.hpp"
#include "asix/tracepipe.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace asix;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::string> addrs(const TraceRecord& t) {
  std::vector<std::string> out;
  for (const auto& h : t.hops) out.push_back(h.addr ? h.addr->str() : "*");
  return out;
}

EntitySet interior(const ASPath& p) {
  EntitySet s;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) s.insert(Entity::as(p[i]));
  return s;
}

// -- 1 ---------------------------------------------------------------------------

Result micro_examples() {
  int failures = 0;
  // A=.11 B=.12 C=.13 D=.14 E=.15 F=.16
  auto out = stitch({parse_trace_line("10.0.0.1|10.5.0.1|b|0|1:10.0.0.11,2:10.0.0.12,3:10.0.0.13,4:10.0.0.14,5:10.0.0.15"),
                     parse_trace_line("10.0.0.1|10.6.0.1|b|0|1:10.0.0.11,2:10.0.0.12,3:*,4:10.0.0.14,5:10.0.0.16")});
  failures += addrs(out[1]) != std::vector<std::string>{"10.0.0.11", "10.0.0.12", "10.0.0.13", "10.0.0.14", "10.0.0.16"};

  auto table = testing::numbered_table({1, 2, 3});
  auto complete = resolve_as_path(
      parse_trace_line("10.1.0.9|10.3.0.1|b|0|1:10.1.0.1,2:10.1.0.2,3:*,4:10.1.0.3,5:10.2.0.1,6:10.3.0.1"), table);
  auto incomplete = resolve_as_path(
      parse_trace_line("10.1.0.9|10.3.0.1|b|0|1:10.1.0.1,2:10.1.0.2,3:*,4:10.2.0.1,5:10.3.0.1"), table);
  const std::vector<ASHop> want{ASHop(testing::as(1)), ASHop(testing::as(2)), ASHop(testing::as(3))};
  failures += !complete.complete_as();
  failures += complete.derived->as_path != want;
  failures += incomplete.complete_as();
  return {failures == 0, fmt("%d mismatches", failures)};
}

// -- 2, 4 ------------------------------------------------------------------------

struct Query {
  ASNumber src, dst;
  std::size_t k;
};

struct Instance {
  ASGraph graph;
  RouteBase base;
  std::vector<Query> queries;
};

/// 50 tiered topologies of varying size with 20 queries each. Even instances
/// query the true graph, odd ones the graph inferred from the RIB.
std::vector<Instance> soundness_instances() {
  std::vector<Instance> out;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 50; ++i) {
    synth::SynthConfig cfg;
    cfg.seed = 100 + static_cast<std::uint64_t>(i);
    cfg.topology.tier1 = 2 + rng() % 3;
    cfg.topology.tier2 = 4 + rng() % 9;
    cfg.topology.stubs = 10 + rng() % 31;
    cfg.vantages = 4 + rng() % 6;
    cfg.relays = 4;
    cfg.hours = 1;
    cfg.clients = 1;
    cfg.destinations = 2;
    cfg.streams = 1;
    cfg.pairs = 1;
    cfg.batches = 1;
    auto corpus = synth::generate_corpus(cfg);
    Instance inst{ASGraph{}, RouteBase{}, {}};
    if (i % 2 == 0) {
      inst.graph = corpus.topology.truth;
      inst.base = build_route_base(corpus.rib);
    } else {
      auto model = build_route_model(corpus.rib);
      inst.graph = std::move(model.graph);
      inst.base = std::move(model.base);
    }
    const auto& nodes = inst.graph.nodes();
    for (int q = 0; q < 20; ++q)
      inst.queries.push_back({nodes[rng() % nodes.size()], nodes[rng() % nodes.size()], 1 + rng() % 5});
    out.push_back(std::move(inst));
  }
  return out;
}

std::optional<InferredPathSet> try_infer(const ASGraph& g, const RouteBase& base, ASNumber src, ASNumber dst,
                                         std::size_t k) {
  try {
    return infer_top_k(g, base, src, dst, k);
  } catch (const NoRoute&) {
    return std::nullopt;
  } catch (const UnknownAS&) {
    return std::nullopt;
  }
}

Result valley_free_soundness() {
  std::size_t queries = 0, answered = 0, paths = 0, bad = 0;
  for (const auto& inst : soundness_instances())
    for (const auto& q : inst.queries) {
      ++queries;
      auto r = try_infer(inst.graph, inst.base, q.src, q.dst, q.k);
      if (!r) continue;
      ++answered;
      for (const auto& sp : r->paths) {
        ++paths;
        const auto& p = sp.path;
        const bool ok = is_valley_free(inst.graph, p) && oracle::valley_free_path(inst.graph, p) &&
                        oracle::loop_free(p) && p.front() == q.src && p.back() == q.dst;
        bad += !ok;
      }
    }
  return {queries == 1000 && answered > 0 && bad == 0,
          fmt("%zu queries, %zu answered, %zu paths, %zu violations", queries, answered, paths, bad)};
}

bool subset(const std::set<ASNumber>& a, const std::set<ASNumber>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

Result k_monotonicity() {
  std::size_t checks = 0, violations = 0;
  for (const auto& inst : soundness_instances())
    for (const auto& q : inst.queries) {
      std::optional<std::set<ASNumber>> prev;
      for (std::size_t k = 1; k <= 5; ++k) {
        auto r = try_infer(inst.graph, inst.base, q.src, q.dst, k);
        if (!r) break;
        auto s = path_as_set(*r, k);
        if (prev) {
          ++checks;
          violations += !subset(*prev, s);
        }
        prev = std::move(s);
      }
    }

  synth::SynthConfig cfg;
  cfg.seed = 77;
  cfg.relays = 30;
  cfg.destinations = 30;
  auto corpus = synth::generate_corpus(cfg);
  std::ostringstream raw;
  for (const auto& t : corpus.traces) write_trace(raw, t);
  std::istringstream in(raw.str());
  auto resolved = run_tracepipe(in, corpus.prefixes, &corpus.registry);
  DailyRouteModels models;
  auto model = std::make_shared<RouteModel>(build_route_model(corpus.rib));
  models.add(0, model);
  std::vector<std::unique_ptr<InferredOracle>> oracles;
  for (std::size_t k = 1; k <= 5; ++k)
    oracles.push_back(std::make_unique<InferredOracle>(models, corpus.prefixes, &corpus.registry, k));

  std::size_t traces = 0, accuracy_violations = 0;
  for (const auto& t : resolved) {
    if (!t.complete_as() || !t.derived->source_as || !t.derived->dest_as) continue;
    const ASNumber src = *t.derived->source_as, dst = *t.derived->dest_as;
    if (src == dst) continue;
    auto r = try_infer(model->graph, model->base, src, dst, 5);
    if (!r) continue;
    ++traces;

    EntitySet measured_as;
    for (ASNumber a : interior_ases(t)) measured_as.insert(Entity::as(a));
    std::vector<EntitySet> ranks;
    for (const auto& sp : r->paths) ranks.push_back(interior(sp.path));
    std::size_t last_missing = SIZE_MAX, last_extra = 0;
    for (std::size_t k = 1; k <= 5; ++k) {
      auto c = compare_path(measured_as, ranks, k);
      accuracy_violations += c.missing.size() > last_missing || c.extra.size() < last_extra;
      last_missing = c.missing.size();
      last_extra = c.extra.size();
    }

    const EntitySet measured_all = trace_observers(t);
    last_missing = SIZE_MAX;
    last_extra = 0;
    for (const auto& o : oracles) {
      auto s = o->observers_between(src, dst, t.timestamp);
      if (!s) break;
      std::vector<EntitySet> one{*s};
      auto c = compare_path(measured_all, one, 1);
      accuracy_violations += c.missing.size() > last_missing || c.extra.size() < last_extra;
      last_missing = c.missing.size();
      last_extra = c.extra.size();
    }
  }
  return {checks > 0 && traces > 0 && violations == 0 && accuracy_violations == 0,
          fmt("%zu subset checks, %zu violations; %zu traces, %zu missing/extra violations", checks, violations,
              traces, accuracy_violations)};
}

// -- 3 ---------------------------------------------------------------------------

Result brute_force_equivalence() {
  std::mt19937_64 rng(3);
  std::size_t instances = 0, compared = 0, mismatches = 0;
  for (int round = 0; round < 250; ++round) {
    const int n = 3 + static_cast<int>(rng() % 8);
    ASGraph g = oracle::random_relationship_graph(rng, n, 0.35);
    const ASNumber dst(1 + static_cast<std::uint32_t>(rng() % static_cast<unsigned>(n)));
    // Full suffix closure: every valley-free route to dst, some seen several times.
    std::vector<ASPath> observed;
    for (const auto& p : oracle::all_valley_free_paths_to(g, dst))
      for (std::uint64_t c = 1 + rng() % 3; c > 0; --c) observed.push_back(p);
    RouteBase base;
    for (const auto& p : observed) base.add_path(p);
    ++instances;
    for (ASNumber src : g.nodes()) {
      auto want = oracle::brute_force_best(g, observed, src, dst, 4);
      auto got = try_infer(g, base, src, dst, 1);
      ++compared;
      if (!want || !got) {
        mismatches += want.has_value() != got.has_value();
        continue;
      }
      mismatches += got->paths.empty() || got->paths[0].path != want->path || got->paths[0].count != want->count;
    }
  }
  return {instances >= 200 && mismatches == 0,
          fmt("%zu graphs, %zu queries, %zu mismatches", instances, compared, mismatches)};
}

// -- 5 ---------------------------------------------------------------------------

Ipv4 conflict_addr(std::uint32_t i) { return Ipv4{(198u << 24) | (18u << 16) | (i & 0xffffu)}; }

Result stitching_oracle() {
  synth::SynthConfig cfg;
  cfg.seed = 55;
  cfg.gap_rate = 0;
  cfg.relays = 60;
  cfg.clients = 10;
  cfg.destinations = 90;
  cfg.batches = 1;
  auto corpus = synth::generate_corpus(cfg);
  std::vector<TraceRecord> truth;
  for (const auto& t : corpus.traces)
    if (t.hops.size() >= 3 && truth.size() < 5000) truth.push_back(t);

  std::mt19937_64 rng(8);
  std::bernoulli_distribution knock(0.2);
  std::vector<TraceRecord> knocked;
  std::vector<std::vector<bool>> holes;
  for (const auto& t : truth) {
    TraceRecord k = t;
    std::vector<bool> h(t.hops.size(), false);
    for (std::size_t i = 1; i + 1 < k.hops.size(); ++i)
      if (knock(rng)) {
        k.hops[i].addr.reset();
        h[i] = true;
      }
    knocked.push_back(std::move(k));
    holes.push_back(std::move(h));
  }

  // Pristine traces followed by their knocked-out twins, in one batch.
  auto score = [&](const std::vector<TraceRecord>& out, std::size_t offset, const std::vector<bool>& conflicted,
                   std::size_t& knocked_hops, std::size_t& repaired, std::size_t& wrong,
                   std::size_t& repaired_conflicted) {
    for (std::size_t i = 0; i < knocked.size(); ++i) {
      const auto& got = out[offset + i];
      for (std::size_t h = 0; h < holes[i].size(); ++h) {
        const bool filled = got.hops[h].addr.has_value();
        if (holes[i][h]) ++knocked_hops;
        if (!holes[i][h]) {
          wrong += got.hops[h] != truth[i].hops[h];
          continue;
        }
        if (!filled) continue;
        ++repaired;
        wrong += *got.hops[h].addr != *truth[i].hops[h].addr || !got.hops[h].repaired;
        repaired_conflicted += conflicted[i];
      }
    }
  };

  std::vector<TraceRecord> input = truth;
  input.insert(input.end(), knocked.begin(), knocked.end());
  std::size_t knocked_hops = 0, repaired = 0, wrong = 0, repaired_conflicted = 0;
  auto out = stitch(input);
  score(out, truth.size(), std::vector<bool>(knocked.size(), false), knocked_hops, repaired, wrong,
        repaired_conflicted);

  // Every other twin also gets a donor that disagrees on every knocked hop.
  std::vector<TraceRecord> with_conflicts = input;
  std::vector<bool> conflicted(knocked.size(), false);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < knocked.size(); i += 2) {
    TraceRecord c = truth[i];
    bool any = false;
    for (std::size_t h = 0; h < holes[i].size(); ++h)
      if (holes[i][h]) {
        c.hops[h].addr = conflict_addr(++next);
        any = true;
      }
    if (!any) continue;
    conflicted[i] = true;
    with_conflicts.push_back(std::move(c));
  }
  std::size_t knocked2 = 0, repaired2 = 0, wrong2 = 0, repaired_conflicted2 = 0;
  auto out2 = stitch(with_conflicts);
  score(out2, truth.size(), conflicted, knocked2, repaired2, wrong2, repaired_conflicted2);

  const bool pass = input.size() == 10000 && repaired > 0 && wrong == 0 && wrong2 == 0 && repaired_conflicted2 == 0;
  return {pass, fmt("%zu traces, %zu knocked hops, %zu repaired, %zu wrong; with conflicts: %zu repaired, %zu wrong, "
                    "%zu inside conflicted traces",
                    input.size(), knocked_hops, repaired, wrong, repaired2, wrong2, repaired_conflicted2)};
}

// -- 6 ---------------------------------------------------------------------------

Result accounting_identities() {
  synth::SynthConfig cfg;
  cfg.seed = 66;
  cfg.clients = 4;
  cfg.streams = 500;
  cfg.relays = 30;
  auto corpus = synth::generate_corpus(cfg);
  std::ostringstream raw;
  for (const auto& t : corpus.traces) write_trace(raw, t);
  std::istringstream in(raw.str());
  MeasuredOracle measured(run_tracepipe(in, corpus.prefixes, &corpus.registry), corpus.prefixes);
  DailyRouteModels models;
  models.add(0, std::make_shared<RouteModel>(build_route_model(corpus.rib)));
  std::vector<std::unique_ptr<InferredOracle>> owned;
  std::vector<const AdversaryOracle*> by_k;
  for (std::size_t k = 1; k <= 5; ++k) {
    owned.push_back(std::make_unique<InferredOracle>(models, corpus.prefixes, &corpus.registry, k));
    by_k.push_back(owned.back().get());
  }

  SimConfig sim;
  sim.seed = 6;
  sim.reps = 5;
  StreamAggregator agg;
  struct Recount {
    std::uint64_t compared = 0, agree = 0, fp = 0, fn = 0, mc = 0, ic = 0;
  };
  std::map<std::size_t, Recount> recount;
  std::size_t streams = 0;
  for (Ipv4 addr : corpus.clients) {
    auto client = make_client(addr, corpus.prefixes);
    for (const auto& o : simulate_vanilla(client, corpus.user_trace, corpus.network, corpus.prefixes, sim)) {
      ++streams;
      auto rec = annotate_stream(o, corpus.network, corpus.prefixes, by_k, &measured, false);
      agg.add(rec);
      const CompromiseVerdict* m = nullptr;
      for (const auto& v : rec.verdicts)
        if (v.method.kind == Method::Kind::Measured) m = &v;
      if (!m) continue;
      for (const auto& v : rec.verdicts) {
        if (v.method.kind != Method::Kind::Inferred || v.direction != Direction::TorOut) continue;
        Recount& r = recount[v.method.k];
        const bool shared = !intersect(v.adversaries, m->adversaries).empty();
        ++r.compared;
        r.mc += !m->adversaries.empty();
        r.ic += !v.adversaries.empty();
        r.agree += shared;
        r.fp += !shared && !v.adversaries.empty();
        r.fn += !shared && !m->adversaries.empty();
      }
    }
  }

  std::size_t cells = 0, broken = 0, compared = 0;
  for (const auto& [key, a] : agg.agreement()) {
    ++cells;
    broken += a.agree + a.false_negative != a.measured_compromised;
    broken += a.agree + a.false_positive != a.inferred_compromised;
    if (std::get<2>(key) != "ASIX") continue;
    const Recount& r = recount[std::get<1>(key)];
    compared += a.compared;
    broken += a.compared != r.compared || a.agree != r.agree || a.false_positive != r.fp ||
              a.false_negative != r.fn || a.measured_compromised != r.mc || a.inferred_compromised != r.ic;
  }
  return {streams == 10000 && compared > 0 && broken == 0,
          fmt("%zu streams, %zu agreement cells, %zu comparisons, %zu identity failures", streams, cells, compared,
              broken)};
}

// -- 7 ---------------------------------------------------------------------------

class ConflictOracle : public AdversaryOracle {
 public:
  std::optional<EntitySet> observers(const Prefix&, const Prefix&, std::int64_t) const override {
    return EntitySet{Entity::as(ASNumber(64512))};
  }
};

Result path_independence() {
  synth::SynthConfig cfg;
  cfg.seed = 70;
  cfg.clients = 2;
  cfg.streams = 40;
  auto corpus = synth::generate_corpus(cfg);
  DailyRouteModels models;
  models.add(0, std::make_shared<RouteModel>(build_route_model(corpus.rib)));
  InferredOracle inferred(models, corpus.prefixes, &corpus.registry, 3);

  SimConfig sim;
  sim.seed = 7;
  sim.reps = 500;
  std::size_t assigned = 0, failed = 0, not_disjoint = 0;
  std::size_t conflict_streams = 0, conflict_failed = 0;
  std::size_t vanilla_streams = 0, vanilla_failed = 0;
  for (Ipv4 addr : corpus.clients) {
    auto client = make_client(addr, corpus.prefixes);
    for (const auto& o : simulate_path_independent(client, corpus.user_trace, corpus.network, corpus.prefixes,
                                                   inferred, sim)) {
      if (o.verdict == Verdict::Failed) {
        ++failed;
        continue;
      }
      ++assigned;
      const auto& c = *o.circuit;
      const auto& snap = corpus.network.at(o.snapshot_hour);
      const Relay* g = snap.find(c.guard);
      const Relay* x = snap.find(c.exit);
      auto entry = g ? inferred.observers(g->prefix, client.prefix, o.stream.time) : std::nullopt;
      auto exit = x ? inferred.observers(x->prefix, routed_prefix(o.stream.dest, corpus.prefixes), o.stream.time)
                    : std::nullopt;
      const bool ok = c.basis && disjoint(c.basis->entry, c.basis->exit) && entry && exit && disjoint(*entry, *exit);
      not_disjoint += !ok;
    }
    for (const auto& o :
         simulate_path_independent(client, corpus.user_trace, corpus.network, corpus.prefixes, ConflictOracle{}, sim)) {
      ++conflict_streams;
      conflict_failed += o.verdict == Verdict::Failed;
    }
    for (const auto& o : simulate_vanilla(client, corpus.user_trace, corpus.network, corpus.prefixes, sim)) {
      ++vanilla_streams;
      vanilla_failed += o.verdict == Verdict::Failed;
    }
  }
  const bool pass = assigned > 0 && not_disjoint == 0 && conflict_streams > 0 &&
                    conflict_failed == conflict_streams && vanilla_streams > 0 && vanilla_failed == 0;
  return {pass, fmt("independent: %zu assigned, %zu failed, %zu not disjoint; conflicting: %zu/%zu failed; "
                    "vanilla: %zu/%zu failed",
                    assigned, failed, not_disjoint, conflict_failed, conflict_streams, vanilla_failed,
                    vanilla_streams)};
}

// -- 8 ---------------------------------------------------------------------------

Result weighted_selection() {
  const double weights[] = {1, 2, 3, 4, 10};
  std::vector<Relay> relays;
  for (int i = 0; i < 5; ++i) {
    const Ipv4 addr{(10u << 24) | (static_cast<std::uint32_t>(i + 1) << 16) | 1u};
    relays.push_back(Relay{"R" + std::to_string(i), addr, Prefix::containing(addr, 24),
                           ASNumber(static_cast<std::uint32_t>(i + 1)), weights[i],
                           static_cast<std::uint8_t>(kGuard | kExit | kRunning | kValid)});
  }
  Rng rng(8);
  const int draws = 10000;
  std::vector<int> hits(5, 0);
  for (int i = 0; i < draws; ++i) ++hits[select_weighted(relays, Role::Middle, rng)];
  double chi2 = 0;
  for (int i = 0; i < 5; ++i) {
    const double expected = draws * weights[i] / 20.0;
    chi2 += (hits[i] - expected) * (hits[i] - expected) / expected;
  }
  // Critical value for 4 degrees of freedom at p = 0.01.
  const double critical = 13.2767;
  return {chi2 < critical, fmt("chi2 = %.3f (critical %.4f), counts %d %d %d %d %d", chi2, critical, hits[0],
                               hits[1], hits[2], hits[3], hits[4])};
}

// -- 9 ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

void full_pipeline(const fs::path& out, unsigned threads) {
  const fs::path fx = ASIX_FIXTURES;
  RunConfig c;
  c.ribs = {{(fx / "rib.txt").string(), 0}};
  c.prefixes = (fx / "prefixes.txt").string();
  c.ix_prefixes = (fx / "ix_prefixes.txt").string();
  c.ix_peerings = (fx / "ix_peerings.txt").string();
  c.traces = (fx / "traces.txt").string();
  c.pairs = (fx / "pairs.txt").string();
  c.relays = (fx / "relays.txt").string();
  c.user_trace = (fx / "user_trace.txt").string();
  c.clients = (fx / "clients.txt").string();
  c.threads = threads;
  c.k = 3;
  c.seed = 9;
  c.reps = 3;
  c.emit_cdf = true;

  c.out_dir = (out / "synth").string();
  c.synth.seed = 4;
  cmd_synth(c);
  c.out_dir = (out / "graph").string();
  cmd_buildgraph(c);
  c.graph = (out / "graph" / "graph.txt").string();
  c.out_dir = (out / "infer").string();
  cmd_infer(c);
  c.out_dir = (out / "trace").string();
  cmd_tracepipe(c);
  c.resolved = (out / "trace" / "resolved.txt").string();
  for (const char* mode : {"vanilla", "independent"}) {
    c.mode = mode;
    c.out_dir = (out / (std::string("sim_") + mode)).string();
    cmd_simulate(c);
    c.outcomes = (out / (std::string("sim_") + mode) / "outcomes.txt").string();
    c.out_dir = (out / (std::string("analysis_") + mode)).string();
    cmd_analyze(c);
  }
}

Result determinism() {
  const fs::path base = fs::temp_directory_path() / "asix_acceptance_determinism";
  fs::remove_all(base);
  full_pipeline(base / "a", 1);
  full_pipeline(base / "b", 4);
  auto a = tree(base / "a"), b = tree(base / "b");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    differing += it == b.end() || it->second != bytes;
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;
  fs::remove_all(base);
  return {!a.empty() && differing == 0, fmt("%zu files, %zu differ", a.size(), differing)};
}

// -- 10 --------------------------------------------------------------------------

Result throughput(double& measured_seconds) {
  synth::SynthConfig cfg;
  cfg.seed = 10;
  cfg.relays = 100;
  cfg.clients = 20;
  cfg.destinations = 80;
  cfg.batches = 1;
  auto corpus = synth::generate_corpus(cfg);
  const fs::path file = fs::temp_directory_path() / "asix_acceptance_traces.txt";
  const std::size_t target = 1000000;
  std::size_t written = 0;
  {
    std::ofstream out(file, std::ios::binary);
    for (std::size_t batch = 0; written < target; ++batch)
      for (auto t : corpus.traces) {
        if (written == target) break;
        t.batch_id = "r" + std::to_string(batch);
        t.timestamp += static_cast<std::int64_t>(batch) * 3600;
        write_trace(out, t);
        ++written;
      }
  }

  const auto start = std::chrono::steady_clock::now();
  PipelineStats st;
  std::size_t resolved = 0;
  {
    std::ifstream in(file, std::ios::binary);
    resolved = run_tracepipe(in, corpus.prefixes, &corpus.registry, &st).size();
  }
  measured_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::remove(file);
  return {resolved == target && measured_seconds < 60.0,
          fmt("%zu records in %.1f s on %u hardware threads, %zu windows repaired", resolved, measured_seconds,
              std::thread::hardware_concurrency(), st.stitch.repaired)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Result()> run;
  };
  double tracepipe_seconds = 0;
  const std::vector<Criterion> criteria{
      {1, "micro-examples", 1, micro_examples},
      {2, "valley-free soundness", 30, valley_free_soundness},
      {3, "brute-force equivalence", 60, brute_force_equivalence},
      {4, "monotonicity in k", 60, k_monotonicity},
      {5, "stitching oracle", 60, stitching_oracle},
      {6, "accounting identities", 60, accounting_identities},
      {7, "path independence", 120, path_independence},
      {8, "weighted selection", 10, weighted_selection},
      {9, "determinism", 120, determinism},
      {10, "throughput", 600, [&] { return throughput(tracepipe_seconds); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget;
    const bool pass = r.pass && in_budget;
    failed += !pass;
    std::printf("%s  %2d  %-24s %7.2f s  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, r.detail.c_str(),
                in_budget ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

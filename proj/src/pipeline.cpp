#include "asix/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "asix/analysis.hpp"
#include "asix/errors.hpp"
#include "asix/pathinfer.hpp"
#include "asix/text.hpp"

#ifndef ASIX_VERSION
#define ASIX_VERSION "dev"
#endif

namespace asix {

namespace fs = std::filesystem;

namespace {

std::string base_name(const std::string& path) {
  return path.empty() ? std::string("-") : fs::path(path).filename().string();
}

std::ifstream open_in(const std::string& path, std::string_view what) {
  if (path.empty()) throw UsageError("missing input: " + std::string(what));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + std::string(what) + " file '" + path + "'");
  return in;
}

/// Runs a loader, prefixing data errors with the file they came from.
template <class Fn>
auto with_context(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

unsigned thread_count(unsigned requested) {
  return requested ? requested : std::max(1u, std::thread::hardware_concurrency());
}

class StageWriter {
 public:
  StageWriter(const RunConfig& config, std::string stage)
      : config_(config), dir_(config.out_dir), report_{std::move(stage), {}, {}} {
    fs::create_directories(dir_);
  }

  void input(const std::string& path) {
    if (!path.empty()) inputs_.emplace_back(base_name(path), file_digest(path));
  }

  template <class Fn>
  void file(const std::string& name, Fn&& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw UsageError("cannot write " + (dir_ / name).string());
    body(out);
    out.close();
    report_.outputs.push_back(name);
  }

  /// Lists a file written by other code.
  void record(const std::string& name) { report_.outputs.push_back(name); }

  void stat(std::string key, std::string value) { report_.summary.emplace_back(std::move(key), std::move(value)); }
  template <class N>
  void stat(std::string key, N value) {
    if constexpr (std::is_floating_point_v<N>)
      stat(std::move(key), text::format_double(value));
    else
      stat(std::move(key), std::to_string(value));
  }

  StageReport finish() {
    file(report_.stage + "_summary.txt", [&](std::ostream& o) {
      for (const auto& [k, v] : report_.summary) o << k << '=' << v << '\n';
    });
    std::ofstream m(dir_ / (report_.stage + ".manifest"), std::ios::binary);
    if (!m) throw UsageError("cannot write manifest in " + dir_.string());
    m << "asix-manifest v1\n";
    m << "tool asix " << ASIX_VERSION << '\n';
    m << "stage " << report_.stage << '\n';
    m << "config " << config_.hash() << '\n';
    for (const auto& [name, digest] : inputs_) m << "input " << name << ' ' << digest << '\n';
    for (const auto& name : report_.outputs) m << "output " << name << ' ' << file_digest((dir_ / name).string()) << '\n';
    report_.outputs.push_back(report_.stage + ".manifest");
    return report_;
  }

 private:
  const RunConfig& config_;
  fs::path dir_;
  StageReport report_;
  std::vector<std::pair<std::string, std::string>> inputs_;
};

RibTable load_rib(const RibSource& src, ParseStats* stats) {
  auto in = open_in(src.path, "rib");
  return with_context(src.path, [&] { return parse_rib(in, stats); });
}

PrefixToASTable load_prefixes(const RunConfig& c, StageWriter& w) {
  auto in = open_in(c.prefixes, "prefixes");
  w.input(c.prefixes);
  ParseStats st;
  auto table = with_context(c.prefixes, [&] { return parse_prefix_table(in, &st); });
  w.stat("prefix_lines_malformed", st.malformed);
  return table;
}

std::unique_ptr<IXRegistry> load_ix(const RunConfig& c, StageWriter& w) {
  if (c.ix_prefixes.empty()) {
    if (!c.ix_peerings.empty()) throw UsageError("--ix-peerings needs --ix-prefixes");
    return nullptr;
  }
  auto pin = open_in(c.ix_prefixes, "ix-prefixes");
  w.input(c.ix_prefixes);
  std::istringstream empty;
  std::ifstream qin;
  std::istream* peer = &empty;
  if (!c.ix_peerings.empty()) {
    qin = open_in(c.ix_peerings, "ix-peerings");
    w.input(c.ix_peerings);
    peer = &qin;
  }
  return with_context(c.ix_prefixes + "," + c.ix_peerings,
                      [&] { return std::make_unique<IXRegistry>(load_registry(pin, *peer)); });
}

DailyRouteModels load_models(const RunConfig& c, StageWriter& w) {
  if (c.ribs.empty()) throw UsageError("missing input: rib");
  std::map<std::int64_t, RibTable> by_day;
  for (const auto& src : c.ribs) {
    w.input(src.path);
    RibTable rib = load_rib(src, nullptr);
    auto& day = by_day[src.day];
    std::move(rib.entries.begin(), rib.entries.end(), std::back_inserter(day.entries));
  }
  std::optional<ASGraph> fixed;
  if (!c.graph.empty()) {
    auto in = open_in(c.graph, "graph");
    w.input(c.graph);
    fixed = with_context(c.graph, [&] { return ASGraph::read(in); });
  }
  DailyRouteModels models;
  for (auto& [day, rib] : by_day) {
    auto model = std::make_shared<RouteModel>();
    if (fixed) {
      model->graph = *fixed;
      model->base = build_route_base(rib);
    } else {
      *model = build_route_model(rib, GaoOptions{c.peer_ratio});
    }
    models.add(day, std::move(model));
  }
  return models;
}

TorNetwork load_relays(const RunConfig& c, const PrefixToASTable& table, StageWriter& w) {
  auto in = open_in(c.relays, "relays");
  w.input(c.relays);
  return with_context(c.relays, [&] { return load_network(in, &table); });
}

std::vector<TraceRecord> load_resolved(const std::string& path, StageWriter& w) {
  auto in = open_in(path, "resolved");
  w.input(path);
  return with_context(path, [&] { return read_resolved(in); });
}

/// Every guard/exit pair shares this AS, so no circuit can be independent.
class ConflictOracle : public AdversaryOracle {
 public:
  std::optional<EntitySet> observers(const Prefix&, const Prefix&, std::int64_t) const override {
    return EntitySet{Entity::as(ASNumber(64500))};
  }
};

std::string table_file(const CsvTable& t, Grouping g) {
  std::string group(to_string(g));
  std::replace(group.begin(), group.end(), '-', '_');
  return t.name + "_" + group + ".csv";
}

}  // namespace

RibSource parse_rib_source(std::string_view spec) {
  RibSource out;
  const auto at = spec.rfind('@');
  if (at == std::string_view::npos) {
    out.path = std::string(spec);
    return out;
  }
  auto day = text::parse_int<std::int64_t>(spec.substr(at + 1));
  if (!day) throw UsageError("bad rib day in '" + std::string(spec) + "'");
  out.path = std::string(spec.substr(0, at));
  out.day = *day;
  return out;
}

void RunConfig::validate() const {
  if (k < 1 || k > 5) throw UsageError("k must be between 1 and 5");
  if (reps < 1) throw UsageError("reps must be at least 1");
  if (active_guard_min < 1) throw UsageError("active-guard-min must be at least 1");
  if (guard_min < active_guard_min) throw UsageError("guard-min must be at least active-guard-min");
  if (circuit_lifetime <= 0) throw UsageError("circuit-lifetime must be positive");
  if (mode != "vanilla" && mode != "independent") throw UsageError("mode must be vanilla or independent");
  if (oracle != "inferred" && oracle != "measured" && oracle != "conflict")
    throw UsageError("oracle must be inferred, measured or conflict");
  if (!(peer_ratio >= 1.0)) throw UsageError("peer-ratio must be at least 1");
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string(name) + " must be within [0, 1]");
  };
  rate(synth.gap_rate, "gap-rate");
  rate(synth.ix_rate, "ix-rate");
  rate(synth.churn, "churn");
  rate(synth.peering_listed, "peering-listed");
  if (out_dir.empty()) throw UsageError("output directory must be set");
}

std::vector<std::pair<std::string, std::string>> RunConfig::canonical() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&](std::string key, std::string value) { kv.emplace_back(std::move(key), std::move(value)); };
  std::string rib_list;
  for (const auto& r : ribs) rib_list += base_name(r.path) + "@" + std::to_string(r.day) + ";";
  put("rib", rib_list);
  put("graph", base_name(graph));
  put("prefixes", base_name(prefixes));
  put("ix_prefixes", base_name(ix_prefixes));
  put("ix_peerings", base_name(ix_peerings));
  put("traces", base_name(traces));
  put("resolved", base_name(resolved));
  put("pairs", base_name(pairs));
  put("relays", base_name(relays));
  put("user_trace", base_name(user_trace));
  put("clients", base_name(clients));
  put("outcomes", base_name(outcomes));
  put("k", std::to_string(k));
  put("seed", std::to_string(seed));
  put("reps", std::to_string(reps));
  put("circuit_lifetime", std::to_string(circuit_lifetime));
  put("guard_min", std::to_string(guard_min));
  put("active_guard_min", std::to_string(active_guard_min));
  put("mode", mode);
  put("oracle", oracle);
  put("emit_cdf", emit_cdf ? "1" : "0");
  put("peer_ratio", text::format_double(peer_ratio));
  const auto& s = synth;
  put("synth", std::to_string(s.topology.tier1) + "," + std::to_string(s.topology.tier2) + "," +
                   std::to_string(s.topology.stubs) + "," + text::format_double(s.gap_rate) + "," +
                   text::format_double(s.ix_rate) + "," + text::format_double(s.peering_listed) + "," +
                   text::format_double(s.churn) + "," + std::to_string(s.relays) + "," +
                   std::to_string(s.hours) + "," + std::to_string(s.streams) + "," +
                   std::to_string(s.destinations) + "," + std::to_string(s.clients) + "," +
                   std::to_string(s.batches) + "," + std::to_string(s.vantages) + "," +
                   std::to_string(s.exchanges) + "," + std::to_string(s.pairs));
  return kv;
}

std::string RunConfig::hash() const {
  std::string blob;
  for (const auto& [k, v] : canonical()) blob += k + "=" + v + "\n";
  return text::hex64(text::fnv1a(blob));
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = text::fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return text::hex64(h);
}

void print_report(std::ostream& out, const StageReport& r) {
  out << r.stage << ":\n";
  for (const auto& [k, v] : r.summary) out << "  " << k << " = " << v << '\n';
  for (const auto& f : r.outputs) out << "  wrote " << f << '\n';
}

StageReport cmd_buildgraph(const RunConfig& c) {
  c.validate();
  if (c.ribs.empty()) throw UsageError("missing input: rib");
  StageWriter w(c, "buildgraph");
  RibTable all;
  ParseStats st;
  for (const auto& src : c.ribs) {
    w.input(src.path);
    RibTable rib = load_rib(src, &st);
    std::move(rib.entries.begin(), rib.entries.end(), std::back_inserter(all.entries));
  }
  GraphBuild built = with_context(c.ribs.front().path, [&] { return build_graph(all, GaoOptions{c.peer_ratio}); });
  w.file("graph.txt", [&](std::ostream& o) { built.graph.write(o); });
  const LinkCounts counts = built.graph.counts();
  w.stat("rib_lines", st.lines);
  w.stat("rib_malformed", st.malformed);
  w.stat("paths_used", built.paths_used);
  w.stat("loops_dropped", built.loops_dropped);
  w.stat("valley_violations", built.violations.size());
  w.stat("nodes", built.graph.nodes().size());
  w.stat("links_c2p", counts.customer_provider);
  w.stat("links_p2p", counts.peer);
  w.stat("links_s2s", counts.sibling);
  return w.finish();
}

StageReport cmd_infer(const RunConfig& c) {
  c.validate();
  StageWriter w(c, "infer");
  auto pin = open_in(c.pairs, "pairs");
  w.input(c.pairs);
  const auto pairs = with_context(c.pairs, [&] { return synth::parse_pairs(pin); });
  const DailyRouteModels models = load_models(c, w);
  std::size_t ok = 0, failed = 0;
  std::ostringstream failures;
  w.file("inferred.txt", [&](std::ostream& o) {
    for (const auto& q : pairs) {
      const RouteModel& m = models.at(q.when);
      try {
        write_inference(o, infer_top_k(m.graph, m.base, q.src, q.dst, c.k));
        ++ok;
      } catch (const DataError& e) {
        failures << q.src.str() << '|' << q.dst.str() << '|' << e.what() << '\n';
        ++failed;
      }
    }
  });
  w.file("infer_failures.txt", [&](std::ostream& o) { o << failures.str(); });
  w.stat("pairs", pairs.size());
  w.stat("inferred", ok);
  w.stat("failed", failed);
  return w.finish();
}

StageReport cmd_tracepipe(const RunConfig& c) {
  c.validate();
  StageWriter w(c, "tracepipe");
  const PrefixToASTable table = load_prefixes(c, w);
  auto registry = load_ix(c, w);
  auto tin = open_in(c.traces, "traces");
  w.input(c.traces);
  PipelineStats st;
  auto traces = with_context(c.traces, [&] {
    return run_tracepipe(tin, table, registry.get(), &st, thread_count(c.threads));
  });
  w.file("resolved.txt", [&](std::ostream& o) {
    for (const auto& t : traces) write_resolved(o, t);
  });
  if (registry) {
    HarvestStats hs;
    const auto harvested = harvest_peerings(traces, *registry, &hs);
    const std::size_t added = merge_harvested(*registry, harvested);
    w.file("ix_peerings_harvested.txt",
           [&](std::ostream& o) { write_peerings(o, *registry, PeeringSource::Harvested); });
    w.stat("ix_hops", hs.ix_hops);
    w.stat("ix_hops_skipped", hs.skipped);
    w.stat("peerings_harvested", harvested.size());
    w.stat("peerings_new", added);
  }
  w.stat("trace_lines", st.parse.lines);
  w.stat("trace_malformed", st.parse.malformed);
  w.stat("traces", traces.size());
  w.stat("gaps", st.stitch.gaps);
  w.stat("gaps_repaired", st.stitch.repaired);
  w.stat("hops_repaired", st.stitch.hops_repaired);
  w.stat("gaps_ambiguous", st.stitch.ambiguous);
  w.stat("gaps_unmatched", st.stitch.unmatched);
  w.stat("complete_ip", st.complete_ip);
  w.stat("complete_as", st.complete_as);
  w.stat("incomplete", st.incomplete);
  w.stat("loop_repaired", st.loop_repaired);
  return w.finish();
}

StageReport cmd_simulate(const RunConfig& c) {
  c.validate();
  StageWriter w(c, "simulate");
  const PrefixToASTable table = load_prefixes(c, w);
  const TorNetwork net = load_relays(c, table, w);
  auto uin = open_in(c.user_trace, "user-trace");
  w.input(c.user_trace);
  const auto trace = with_context(c.user_trace, [&] { return parse_user_trace(uin); });
  auto cin = open_in(c.clients, "clients");
  w.input(c.clients);
  const auto clients = with_context(c.clients, [&] { return synth::parse_clients(cin); });

  SimConfig sim;
  sim.seed = c.seed;
  sim.reps = c.reps;
  sim.circuit_lifetime = c.circuit_lifetime;
  sim.guard_min = c.guard_min;
  sim.active_guard_min = c.active_guard_min;
  sim.threads = thread_count(c.threads);

  std::unique_ptr<AdversaryOracle> oracle;
  std::unique_ptr<IXRegistry> registry;
  DailyRouteModels models;
  if (c.mode == "independent") {
    if (c.oracle == "conflict") {
      oracle = std::make_unique<ConflictOracle>();
    } else if (c.oracle == "measured") {
      oracle = std::make_unique<MeasuredOracle>(load_resolved(c.resolved, w), table);
    } else {
      registry = load_ix(c, w);
      models = load_models(c, w);
      oracle = std::make_unique<InferredOracle>(models, table, registry.get(), c.k);
    }
  }

  std::vector<StreamOutcome> outcomes;
  std::size_t failed = 0;
  for (Ipv4 addr : clients) {
    const Client client = make_client(addr, table);
    auto part = with_context(c.relays, [&] {
      return oracle ? simulate_path_independent(client, trace, net, table, *oracle, sim)
                    : simulate_vanilla(client, trace, net, table, sim);
    });
    for (auto& o : part) {
      if (o.verdict == Verdict::Failed) ++failed;
      outcomes.push_back(std::move(o));
    }
  }
  w.file("outcomes.txt", [&](std::ostream& o) { write_outcomes(o, outcomes); });
  w.stat("mode", c.mode);
  if (oracle) w.stat("oracle", c.oracle);
  w.stat("clients", clients.size());
  w.stat("streams", outcomes.size());
  w.stat("assigned", outcomes.size() - failed);
  w.stat("failed", failed);
  return w.finish();
}

StageReport cmd_analyze(const RunConfig& c) {
  c.validate();
  StageWriter w(c, "analyze");
  auto oin = open_in(c.outcomes, "outcomes");
  w.input(c.outcomes);
  const auto outcomes = with_context(c.outcomes, [&] { return read_outcomes(oin); });
  if (outcomes.empty()) throw EmptyInput("outcome log '" + c.outcomes + "' has no streams");
  const PrefixToASTable table = load_prefixes(c, w);
  const TorNetwork net = load_relays(c, table, w);
  auto registry = load_ix(c, w);

  DailyRouteModels models;
  std::vector<std::unique_ptr<InferredOracle>> inferred;
  if (!c.ribs.empty()) {
    models = load_models(c, w);
    for (std::size_t k = 1; k <= c.k; ++k)
      inferred.push_back(std::make_unique<InferredOracle>(models, table, registry.get(), k));
  }
  std::vector<TraceRecord> resolved;
  std::unique_ptr<MeasuredOracle> measured;
  if (!c.resolved.empty()) {
    resolved = load_resolved(c.resolved, w);
    measured = std::make_unique<MeasuredOracle>(resolved, table);
  }
  if (inferred.empty() && !measured) throw UsageError("analyze needs --rib or --resolved");
  std::vector<const AdversaryOracle*> by_k;
  for (const auto& o : inferred) by_k.push_back(o.get());

  const Grouping groupings[] = {Grouping::Overall, Grouping::PerClientPrefix, Grouping::PerHost};
  const unsigned threads = std::min<unsigned>(thread_count(c.threads), static_cast<unsigned>(outcomes.size()));
  std::vector<std::vector<StreamAggregator>> parts(threads);
  {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      for (Grouping g : groupings) parts[t].emplace_back(g);
      pool.emplace_back([&, t] {
        const std::size_t lo = outcomes.size() * t / threads;
        const std::size_t hi = outcomes.size() * (t + 1) / threads;
        for (std::size_t i = lo; i < hi; ++i) {
          const StreamRecord rec = annotate_stream(outcomes[i], net, table, by_k, measured.get(), true);
          for (auto& agg : parts[t]) agg.add(rec);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<StreamAggregator> totals;
  for (Grouping g : groupings) totals.emplace_back(g);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i].merge(p[i]);

  for (std::size_t i = 0; i < totals.size(); ++i)
    for (const CsvTable& t : totals[i].tables())
      w.file(table_file(t, groupings[i]), [&](std::ostream& o) { t.write(o); });

  if (c.emit_cdf) {
    const StreamAggregator& per_prefix = totals[1];
    std::vector<Method> methods;
    for (std::size_t k = 1; k <= inferred.size(); ++k) methods.push_back(Method::inferred(k));
    if (measured) methods.push_back(Method::measured());
    for (const Method& m : methods)
      for (Direction d : kAllDirections) {
        auto rates = per_prefix.group_rates(m, d);
        if (rates.empty()) continue;
        std::string name = "client_rate_cdf_" + m.str() + "_" + std::string(to_string(d));
        std::replace(name.begin(), name.end(), '-', '_');
        const CsvTable t = cdf_table(name, "compromise_rate", rates);
        w.file(t.name + ".csv", [&](std::ostream& o) { t.write(o); });
      }
  }

  if (!resolved.empty() && !inferred.empty()) {
    AccuracyAggregator acc;
    std::size_t compared = 0, skipped = 0;
    for (const TraceRecord& trace : resolved) {
      if (!trace.complete_as() || !trace.derived->source_as || !trace.derived->dest_as) continue;
      const ASNumber src = *trace.derived->source_as;
      const ASNumber dst = *trace.derived->dest_as;
      if (src == dst) continue;
      const RouteModel& model = models.at(trace.timestamp);
      std::optional<InferredPathSet> paths;
      try {
        paths = infer_top_k(model.graph, model.base, src, dst, c.k);
      } catch (const DataError&) {
        ++skipped;
        continue;
      }
      std::vector<EntitySet> ranked;
      for (const auto& sp : paths->paths) {
        EntitySet s;
        for (std::size_t i = 1; i + 1 < sp.path.size(); ++i) s.insert(Entity::as(sp.path[i]));
        if (registry)
          for (std::size_t i = 0; i + 1 < sp.path.size(); ++i)
            for (IXId ix : registry->candidate_ixes(sp.path[i], sp.path[i + 1])) s.insert(Entity::ix(ix));
        ranked.push_back(std::move(s));
      }
      const EntitySet truth = trace_observers(trace);
      const std::string host = trace.source.str();
      for (std::size_t k = 1; k <= c.k; ++k) {
        const PathComparison cmp = compare_path(truth, ranked, k);
        acc.add(host, k, "ASIX", cmp);
        PathComparison as_only{cmp.missing.filter(Entity::Kind::AS), cmp.extra.filter(Entity::Kind::AS),
                               cmp.agreed.filter(Entity::Kind::AS), k};
        PathComparison ix_only{cmp.missing.filter(Entity::Kind::IX), cmp.extra.filter(Entity::Kind::IX),
                               cmp.agreed.filter(Entity::Kind::IX), k};
        acc.add(host, k, "AS", as_only);
        acc.add(host, k, "IX", ix_only);
      }
      ++compared;
    }
    w.stat("traces_compared", compared);
    w.stat("traces_without_inference", skipped);
    if (compared) {
      for (const CsvTable& t : acc.tables()) w.file(t.name + ".csv", [&](std::ostream& o) { t.write(o); });
      if (c.emit_cdf)
        for (const CsvTable& t : acc.cdf_tables()) w.file(t.name + ".csv", [&](std::ostream& o) { t.write(o); });
    }
  }
  w.stat("streams", outcomes.size());
  w.stat("measured_pairs", measured ? measured->pair_count() : 0);
  return w.finish();
}

StageReport cmd_synth(const RunConfig& c) {
  c.validate();
  StageWriter w(c, "synth");
  synth::SynthConfig sc = c.synth;
  sc.seed = c.seed;
  const synth::SynthCorpus corpus = synth::generate_corpus(sc);
  for (const auto& f : synth::write_corpus(corpus, c.out_dir)) w.record(f.filename().string());
  std::size_t complete = 0;
  for (const auto& t : corpus.traces)
    if (std::all_of(t.hops.begin(), t.hops.end(), [](const Hop& h) { return h.addr.has_value(); })) ++complete;
  w.stat("ases", corpus.topology.ases.size());
  w.stat("rib_entries", corpus.rib.entries.size());
  w.stat("traces", corpus.traces.size());
  w.stat("traces_without_gaps", complete);
  w.stat("exchanges", corpus.registry.exchange_count());
  w.stat("peerings_listed", corpus.registry.peering_count());
  w.stat("snapshots", corpus.network.snapshots().size());
  w.stat("streams", corpus.user_trace.size());
  w.stat("clients", corpus.clients.size());
  return w.finish();
}

}  // namespace asix

#include "asix/analysis.hpp"

#include <algorithm>
#include <ostream>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix {

namespace {

constexpr std::string_view kKinds[] = {"AS", "IX", "ASIX"};

EntitySet union_of_first(std::span<const EntitySet> ranked, std::size_t k) {
  EntitySet out;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) out = unite(out, ranked[i]);
  return out;
}

EntitySet kind_filter(const EntitySet& s, std::string_view kind) {
  if (kind == "AS") return s.filter(Entity::Kind::AS);
  if (kind == "IX") return s.filter(Entity::Kind::IX);
  return s;
}

std::string fmt(double v) { return text::format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

double ratio(std::uint64_t num, std::uint64_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

// -- path comparison -------------------------------------------------------------

PathComparison compare_path(const EntitySet& measured, std::span<const EntitySet> inferred_by_rank,
                            std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  const EntitySet inferred = union_of_first(inferred_by_rank, k);
  PathComparison out;
  out.k = k;
  out.agreed = intersect(measured, inferred);
  out.missing = subtract(measured, inferred);
  out.extra = subtract(inferred, measured);
  return out;
}

// -- compromise ------------------------------------------------------------------

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Forward: return "forward";
    case Direction::Reverse: return "reverse";
    case Direction::TorOut: return "tor-out";
    case Direction::Both: return "both";
  }
  return "?";
}

std::string Method::str() const {
  return kind == Kind::Measured ? std::string("measured") : "inferred-k" + std::to_string(k);
}

CompromiseVerdict compromise_check(const EntitySet& entry_set, const EntitySet& exit_set,
                                   Direction direction, Method method) {
  CompromiseVerdict v;
  v.adversaries = intersect(entry_set, exit_set);
  v.compromised = !v.adversaries.empty();
  v.direction = direction;
  v.method = method;
  return v;
}

CompromiseVerdict restrict_to(const CompromiseVerdict& v, Entity::Kind kind) {
  CompromiseVerdict out = v;
  out.adversaries = v.adversaries.filter(kind);
  out.compromised = !out.adversaries.empty();
  return out;
}

SidedSets directional_sets(const CircuitEnds& ends, const AdversaryOracle& oracle, Direction direction) {
  auto need = [&](const Prefix& from, const Prefix& to, const char* side) {
    auto s = oracle.observers(from, to, ends.when);
    if (!s) throw MissingPathData(side);
    return std::move(*s);
  };
  switch (direction) {
    case Direction::Forward:
      return {need(ends.client, ends.guard, "entry"), need(ends.exit, ends.destination, "exit")};
    case Direction::Reverse:
      return {need(ends.guard, ends.client, "entry"), need(ends.destination, ends.exit, "exit")};
    case Direction::TorOut:
      return {need(ends.guard, ends.client, "entry"), need(ends.exit, ends.destination, "exit")};
    case Direction::Both: {
      auto fwd = directional_sets(ends, oracle, Direction::Forward);
      auto rev = directional_sets(ends, oracle, Direction::Reverse);
      return {unite(fwd.entry, rev.entry), unite(fwd.exit, rev.exit)};
    }
  }
  throw std::logic_error("bad direction");
}

std::string_view to_string(Agreement a) {
  switch (a) {
    case Agreement::Agree: return "agree";
    case Agreement::FalsePositive: return "false-positive";
    case Agreement::FalseNegative: return "false-negative";
    case Agreement::FalsePositiveAndNegative: return "false-positive-and-negative";
    case Agreement::BothClean: return "both-clean";
  }
  return "?";
}

Agreement fp_fn_decompose(const CompromiseVerdict& inferred, const CompromiseVerdict& measured) {
  if (!disjoint(inferred.adversaries, measured.adversaries)) return Agreement::Agree;
  if (inferred.compromised && measured.compromised) return Agreement::FalsePositiveAndNegative;
  if (inferred.compromised) return Agreement::FalsePositive;
  if (measured.compromised) return Agreement::FalseNegative;
  return Agreement::BothClean;
}

bool is_false_positive(Agreement a) {
  return a == Agreement::FalsePositive || a == Agreement::FalsePositiveAndNegative;
}

bool is_false_negative(Agreement a) {
  return a == Agreement::FalseNegative || a == Agreement::FalsePositiveAndNegative;
}

// -- oracles ---------------------------------------------------------------------

InferredOracle::InferredOracle(const DailyRouteModels& models, const PrefixToASTable& table,
                               const IXRegistry* registry, std::size_t k, InferOptions options)
    : models_(models), table_(table), registry_(registry), k_(k), options_(options) {
  if (k == 0 || k > options.max_k) throw std::invalid_argument("k out of range");
}

std::optional<EntitySet> InferredOracle::observers(const Prefix& from, const Prefix& to,
                                                   std::int64_t when) const {
  auto a = table_.lookup(from.network);
  auto b = table_.lookup(to.network);
  if (!a || !b) return std::nullopt;
  return observers_between(*a, *b, when);
}

std::optional<EntitySet> InferredOracle::observers_between(ASNumber from, ASNumber to,
                                                           std::int64_t when) const {
  if (models_.empty()) return std::nullopt;
  if (from == to) return EntitySet{};
  const auto key = std::make_tuple(models_.window_of(when), from.value(), to.value());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  std::optional<EntitySet> result;
  try {
    const RouteModel& model = models_.at(when);
    const InferredPathSet paths = infer_top_k(model.graph, model.base, from, to, k_, options_);
    EntitySet set;
    for (ASNumber as : path_as_set(paths, k_)) set.insert(Entity::as(as));
    if (registry_) {
      const std::size_t n = std::min(k_, paths.paths.size());
      for (std::size_t i = 0; i < n; ++i) {
        const ASPath& p = paths.paths[i].path;
        for (std::size_t j = 0; j + 1 < p.size(); ++j)
          for (IXId ix : registry_->candidate_ixes(p[j], p[j + 1])) set.insert(Entity::ix(ix));
      }
    }
    result = std::move(set);
  } catch (const UnknownAS&) {
  } catch (const NoRoute&) {
  }
  std::lock_guard lock(mutex_);
  cache_.emplace(key, result);
  return result;
}

EntitySet trace_observers(const TraceRecord& trace) {
  EntitySet set;
  for (ASNumber as : interior_ases(trace)) set.insert(Entity::as(as));
  for (IXId ix : trace.ix_set) set.insert(Entity::ix(ix));
  return set;
}

MeasuredOracle::MeasuredOracle(std::vector<TraceRecord> traces, const PrefixToASTable& table) {
  for (const auto& [pair, indices] : index_by_prefix_pair(traces, table)) {
    std::map<std::vector<ASNumber>, std::size_t> votes;
    EntitySet ixes;
    for (std::size_t i : indices) {
      ++votes[interior_ases(traces[i])];
      for (IXId ix : traces[i].ix_set) ixes.insert(Entity::ix(ix));
    }
    std::size_t best = 0;
    for (const auto& [path, n] : votes) best = std::max(best, n);
    Measurement m;
    m.traces = indices.size();
    std::size_t winners = 0;
    for (const auto& [path, n] : votes) {
      if (n != best) continue;
      ++winners;
      for (ASNumber as : path) m.observers.insert(Entity::as(as));
    }
    m.disagreement = winners > 1;
    m.observers = unite(m.observers, ixes);
    measurements_.emplace(pair, std::move(m));
  }
}

std::optional<MeasuredOracle::Measurement> MeasuredOracle::measure(const Prefix& from,
                                                                   const Prefix& to) const {
  auto it = measurements_.find(PrefixPair{from, to});
  if (it == measurements_.end()) return std::nullopt;
  return it->second;
}

std::optional<EntitySet> MeasuredOracle::observers(const Prefix& from, const Prefix& to,
                                                   std::int64_t) const {
  auto it = measurements_.find(PrefixPair{from, to});
  if (it == measurements_.end()) return std::nullopt;
  return it->second.observers;
}

// -- aggregation -----------------------------------------------------------------

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::vector<std::pair<double, double>> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

CsvTable cdf_table(std::string name, std::string x_label, const std::vector<double>& values) {
  CsvTable t{std::move(name), {std::move(x_label), "cumulative_fraction"}, {}};
  for (const auto& [x, f] : empirical_cdf(values)) t.rows.push_back({fmt(x), fmt(f)});
  return t;
}

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::Overall: return "overall";
    case Grouping::PerClientPrefix: return "client-prefix";
    case Grouping::PerHost: return "host";
  }
  return "?";
}

StreamRecord annotate_stream(const StreamOutcome& outcome, const TorNetwork& net,
                             const PrefixToASTable& table,
                             std::span<const AdversaryOracle* const> inferred,
                             const MeasuredOracle* measured, bool check_alternatives) {
  StreamRecord rec;
  const Prefix client = routed_prefix(outcome.client, table);
  const Prefix destination = routed_prefix(outcome.stream.dest, table);
  rec.client_prefix = client.str();
  rec.client_host = outcome.client.str();
  rec.rep = outcome.rep;
  rec.verdict = outcome.verdict;
  const RelaySnapshot& snap = net.at(outcome.snapshot_hour);

  if (outcome.verdict == Verdict::Assigned && outcome.circuit) {
    const Relay* guard = snap.find(outcome.circuit->guard);
    const Relay* exit = snap.find(outcome.circuit->exit);
    if (!guard || !exit) throw DataError("circuit relay missing from snapshot " + std::to_string(snap.hour));
    const CircuitEnds ends{client, guard->prefix, exit->prefix, destination, outcome.stream.time};
    for (std::size_t i = 0; i < inferred.size(); ++i) {
      if (!inferred[i]) continue;
      for (Direction d : kAllDirections) {
        try {
          auto sides = directional_sets(ends, *inferred[i], d);
          rec.verdicts.push_back(compromise_check(sides.entry, sides.exit, d, Method::inferred(i + 1)));
        } catch (const MissingPathData&) {
        }
      }
    }
    if (measured) {
      try {
        auto sides = directional_sets(ends, *measured, Direction::TorOut);
        rec.verdicts.push_back(compromise_check(sides.entry, sides.exit, Direction::TorOut, Method::measured()));
      } catch (const MissingPathData&) {
      }
    }
  } else if (outcome.verdict == Verdict::Failed && check_alternatives && measured) {
    std::vector<std::pair<const Relay*, EntitySet>> guards, exits;
    for (const auto& id : outcome.active_guards) {
      const Relay* g = snap.find(id);
      if (!g) continue;
      if (auto s = measured->observers(g->prefix, client, outcome.stream.time)) guards.emplace_back(g, std::move(*s));
    }
    for (const Relay& r : snap.relays) {
      if (!eligible(r, Role::Exit)) continue;
      if (auto s = measured->observers(r.prefix, destination, outcome.stream.time)) exits.emplace_back(&r, std::move(*s));
    }
    if (!guards.empty() && !exits.empty()) {
      bool found = false;
      for (const auto& [g, gs] : guards) {
        for (const auto& [x, xs] : exits) {
          if (g->id != x->id && disjoint(gs, xs)) {
            found = true;
            break;
          }
        }
        if (found) break;
      }
      rec.independent_alternative = found;
    }
  }
  return rec;
}

std::string StreamAggregator::group_of(const StreamRecord& r) const {
  switch (grouping_) {
    case Grouping::Overall: return "all";
    case Grouping::PerClientPrefix: return r.client_prefix;
    case Grouping::PerHost: return r.client_host;
  }
  return "all";
}

void StreamAggregator::add(const StreamRecord& r) {
  const std::string g = group_of(r);
  ++streams_;
  GroupCounts& gc = groups_[g];
  ++gc.streams;
  gc.reps.insert(r.rep);

  const CompromiseVerdict* measured = nullptr;
  for (const auto& v : r.verdicts)
    if (v.method.kind == Method::Kind::Measured && v.direction == Direction::TorOut) measured = &v;

  if (r.verdict == Verdict::Assigned) {
    ++gc.assigned;
    if (measured) {
      ++gc.assigned_with_traces;
      if (measured->compromised) {
        ++gc.violating;
        gc.reps_with_violation.insert(r.rep);
      }
    }
  } else {
    ++gc.failed;
    gc.reps_with_failure.insert(r.rep);
    if (r.independent_alternative) {
      ++gc.failed_with_traces;
      if (*r.independent_alternative) ++gc.with_alternative;
    }
  }

  for (const auto& v : r.verdicts) {
    for (std::string_view kind : kKinds) {
      Counts& c = compromise_[{g, v.method, v.direction, std::string(kind)}];
      ++c.total;
      if (!kind_filter(v.adversaries, kind).empty()) ++c.hits;
    }
  }

  if (!measured) return;
  for (const auto& v : r.verdicts) {
    if (v.method.kind != Method::Kind::Inferred || v.direction != Direction::TorOut) continue;
    for (std::string_view kind : kKinds) {
      CompromiseVerdict inf = v, mea = *measured;
      inf.adversaries = kind_filter(v.adversaries, kind);
      inf.compromised = !inf.adversaries.empty();
      mea.adversaries = kind_filter(measured->adversaries, kind);
      mea.compromised = !mea.adversaries.empty();
      AgreementCounts& a = agreement_[{g, v.method.k, std::string(kind)}];
      ++a.compared;
      if (inf.compromised) ++a.inferred_compromised;
      if (mea.compromised) ++a.measured_compromised;
      const Agreement outcome = fp_fn_decompose(inf, mea);
      if (outcome == Agreement::Agree) ++a.agree;
      if (outcome == Agreement::BothClean) ++a.both_clean;
      if (is_false_positive(outcome)) ++a.false_positive;
      if (is_false_negative(outcome)) ++a.false_negative;
    }
  }
}

void StreamAggregator::merge(const StreamAggregator& o) {
  streams_ += o.streams_;
  for (const auto& [k, c] : o.compromise_) {
    Counts& mine = compromise_[k];
    mine.hits += c.hits;
    mine.total += c.total;
  }
  for (const auto& [k, a] : o.agreement_) {
    AgreementCounts& m = agreement_[k];
    m.compared += a.compared;
    m.agree += a.agree;
    m.false_positive += a.false_positive;
    m.false_negative += a.false_negative;
    m.both_clean += a.both_clean;
    m.measured_compromised += a.measured_compromised;
    m.inferred_compromised += a.inferred_compromised;
  }
  for (const auto& [k, g] : o.groups_) {
    GroupCounts& m = groups_[k];
    m.streams += g.streams;
    m.assigned += g.assigned;
    m.failed += g.failed;
    m.assigned_with_traces += g.assigned_with_traces;
    m.violating += g.violating;
    m.failed_with_traces += g.failed_with_traces;
    m.with_alternative += g.with_alternative;
    m.reps.insert(g.reps.begin(), g.reps.end());
    m.reps_with_violation.insert(g.reps_with_violation.begin(), g.reps_with_violation.end());
    m.reps_with_failure.insert(g.reps_with_failure.begin(), g.reps_with_failure.end());
  }
}

std::vector<CsvTable> StreamAggregator::tables() const {
  if (streams_ == 0) throw EmptyInput("no stream outcomes to aggregate");
  const std::string group_label(to_string(grouping_));
  std::vector<CsvTable> out;

  CsvTable compromise{"compromise",
                      {group_label, "method", "k", "direction", "adversary", "streams_with_data",
                       "compromised", "rate"},
                      {}};
  for (const auto& [key, c] : compromise_) {
    const auto& [g, method, dir, kind] = key;
    compromise.rows.push_back({g, method.kind == Method::Kind::Measured ? "measured" : "inferred",
                               method.kind == Method::Kind::Measured ? "-" : std::to_string(method.k),
                               std::string(to_string(dir)), kind, fmt(c.total), fmt(c.hits),
                               fmt(c.rate())});
  }
  out.push_back(std::move(compromise));

  CsvTable agreement{"agreement",
                     {group_label, "k", "adversary", "streams_compared", "agree", "false_positive",
                      "false_negative", "both_clean", "measured_compromised", "inferred_compromised"},
                     {}};
  for (const auto& [key, a] : agreement_) {
    const auto& [g, k, kind] = key;
    agreement.rows.push_back({g, std::to_string(k), kind, fmt(a.compared), fmt(a.agree),
                              fmt(a.false_positive), fmt(a.false_negative), fmt(a.both_clean),
                              fmt(a.measured_compromised), fmt(a.inferred_compromised)});
  }
  out.push_back(std::move(agreement));

  CsvTable independence{"independence",
                        {group_label, "streams", "reps", "assigned", "assigned_with_traceroutes",
                         "frac_with_traceroutes", "violating", "frac_violating", "reps_with_violation",
                         "prob_violation", "failed", "frac_failed", "failed_with_traceroutes",
                         "frac_failed_with_traceroutes", "with_alternative", "frac_with_alternative",
                         "reps_with_failure", "prob_failure"},
                        {}};
  std::map<std::string, std::vector<double>> metrics;
  for (const auto& [g, c] : groups_) {
    const std::uint64_t reps = c.reps.size();
    const double v[] = {ratio(c.assigned_with_traces, c.assigned),
                        ratio(c.violating, c.assigned_with_traces),
                        ratio(c.reps_with_violation.size(), reps),
                        ratio(c.failed, c.streams),
                        ratio(c.failed_with_traces, c.failed),
                        ratio(c.with_alternative, c.failed_with_traces),
                        ratio(c.reps_with_failure.size(), reps)};
    independence.rows.push_back({g, fmt(c.streams), fmt(reps), fmt(c.assigned),
                                 fmt(c.assigned_with_traces), fmt(v[0]), fmt(c.violating), fmt(v[1]),
                                 fmt(std::uint64_t{c.reps_with_violation.size()}), fmt(v[2]),
                                 fmt(c.failed), fmt(v[3]), fmt(c.failed_with_traces), fmt(v[4]),
                                 fmt(c.with_alternative), fmt(v[5]),
                                 fmt(std::uint64_t{c.reps_with_failure.size()}), fmt(v[6])});
    const char* names[] = {"frac_with_traceroutes", "frac_violating", "prob_violation", "frac_failed",
                           "frac_failed_with_traceroutes", "frac_with_alternative", "prob_failure"};
    for (std::size_t i = 0; i < 7; ++i) metrics[names[i]].push_back(v[i]);
  }
  out.push_back(std::move(independence));

  CsvTable summary{"independence_summary", {"metric", "groups", "min", "mean", "max"}, {}};
  for (const auto& [name, values] : metrics) {
    double sum = 0;
    for (double x : values) sum += x;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    summary.rows.push_back({name, fmt(std::uint64_t{values.size()}), fmt(*lo),
                            fmt(sum / static_cast<double>(values.size())), fmt(*hi)});
  }
  out.push_back(std::move(summary));
  return out;
}

std::vector<double> StreamAggregator::group_rates(Method method, Direction direction) const {
  std::vector<double> out;
  for (const auto& [key, c] : compromise_) {
    const auto& [g, m, d, kind] = key;
    if (m == method && d == direction && kind == "ASIX" && c.total > 0) out.push_back(c.rate());
  }
  return out;
}

void AccuracyAggregator::add(const std::string& host, std::size_t k, const std::string& kind,
                             const PathComparison& cmp) {
  const std::uint64_t missing = cmp.missing.size();
  const std::uint64_t extra = cmp.extra.size();
  auto bump = [&](Cell& c) {
    ++c.traces;
    if (missing == 0) ++c.exact;
    c.missing_sum += missing;
    c.extra_sum += extra;
  };
  Cell& all = overall_[{k, kind}];
  bump(all);
  all.missing.push_back(static_cast<double>(missing));
  all.extra.push_back(static_cast<double>(extra));
  bump(per_host_[{host, k, kind}]);
}

void AccuracyAggregator::merge(const AccuracyAggregator& o) {
  auto fold = [](Cell& m, const Cell& c) {
    m.traces += c.traces;
    m.exact += c.exact;
    m.missing_sum += c.missing_sum;
    m.extra_sum += c.extra_sum;
    m.missing.insert(m.missing.end(), c.missing.begin(), c.missing.end());
    m.extra.insert(m.extra.end(), c.extra.begin(), c.extra.end());
  };
  for (const auto& [key, c] : o.overall_) fold(overall_[key], c);
  for (const auto& [key, c] : o.per_host_) fold(per_host_[key], c);
}

std::vector<CsvTable> AccuracyAggregator::tables() const {
  if (overall_.empty()) throw EmptyInput("no traces to compare");
  CsvTable overall{"accuracy",
                   {"k", "observer", "traces", "exact", "exact_rate", "missing_total", "mean_missing",
                    "extra_total", "mean_extra"},
                   {}};
  for (const auto& [key, c] : overall_) {
    overall.rows.push_back({std::to_string(key.first), key.second, fmt(c.traces), fmt(c.exact),
                            fmt(ratio(c.exact, c.traces)), fmt(c.missing_sum),
                            fmt(ratio(c.missing_sum, c.traces)), fmt(c.extra_sum),
                            fmt(ratio(c.extra_sum, c.traces))});
  }
  CsvTable by_host{"accuracy_by_host",
                   {"host", "k", "observer", "traces", "exact", "exact_rate", "mean_missing", "mean_extra"},
                   {}};
  for (const auto& [key, c] : per_host_) {
    const auto& [host, k, kind] = key;
    by_host.rows.push_back({host, std::to_string(k), kind, fmt(c.traces), fmt(c.exact),
                            fmt(ratio(c.exact, c.traces)), fmt(ratio(c.missing_sum, c.traces)),
                            fmt(ratio(c.extra_sum, c.traces))});
  }
  return {std::move(overall), std::move(by_host)};
}

std::vector<CsvTable> AccuracyAggregator::cdf_tables() const {
  std::vector<CsvTable> out;
  for (const auto& [key, c] : overall_) {
    const std::string suffix = "_k" + std::to_string(key.first) + "_" + key.second;
    out.push_back(cdf_table("missing_cdf" + suffix, "missing", c.missing));
    out.push_back(cdf_table("extra_cdf" + suffix, "extra", c.extra));
  }
  return out;
}

}  // namespace asix

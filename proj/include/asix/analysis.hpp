#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "asix/entity.hpp"
#include "asix/ixmap.hpp"
#include "asix/pathinfer.hpp"
#include "asix/torsim.hpp"
#include "asix/tracepipe.hpp"

namespace asix {

// -- path comparison -------------------------------------------------------------

struct PathComparison {
  EntitySet missing;  // measured, not inferred
  EntitySet extra;    // inferred, not measured
  EntitySet agreed;
  std::size_t k = 1;
};

/// Compares against the union of the first k inferred sets (k >= 1; clamped to
/// the number of ranks given).
PathComparison compare_path(const EntitySet& measured, std::span<const EntitySet> inferred_by_rank,
                            std::size_t k);

// -- compromise ------------------------------------------------------------------

enum class Direction : std::uint8_t { Forward, Reverse, TorOut, Both };

std::string_view to_string(Direction d);
inline constexpr Direction kAllDirections[] = {Direction::Forward, Direction::Reverse,
                                               Direction::TorOut, Direction::Both};

struct Method {
  enum class Kind : std::uint8_t { Inferred, Measured };
  Kind kind = Kind::Measured;
  std::size_t k = 0;  // top-k paths, inferred only

  static Method inferred(std::size_t k) { return Method{Kind::Inferred, k}; }
  static Method measured() { return Method{Kind::Measured, 0}; }
  std::string str() const;

  friend auto operator<=>(const Method&, const Method&) = default;
};

struct CompromiseVerdict {
  bool compromised = false;
  EntitySet adversaries;
  Direction direction = Direction::TorOut;
  Method method;
};

CompromiseVerdict compromise_check(const EntitySet& entry_set, const EntitySet& exit_set,
                                   Direction direction = Direction::TorOut,
                                   Method method = Method::measured());

/// Same verdict counting only adversaries of one kind.
CompromiseVerdict restrict_to(const CompromiseVerdict& v, Entity::Kind kind);

/// Routed blocks at the four ends of a stream.
struct CircuitEnds {
  Prefix client;
  Prefix guard;
  Prefix exit;
  Prefix destination;
  std::int64_t when = 0;
};

struct SidedSets {
  EntitySet entry;
  EntitySet exit;
};

/// Forward: client->guard, exit->destination. Reverse: guard->client,
/// destination->exit. TorOut: guard->client, exit->destination. Both: per-side
/// union of Forward and Reverse. Throws MissingPathData("entry"/"exit").
SidedSets directional_sets(const CircuitEnds& ends, const AdversaryOracle& oracle, Direction direction);

enum class Agreement : std::uint8_t {
  Agree,
  FalsePositive,
  FalseNegative,
  FalsePositiveAndNegative,  // both compromised, no adversary in common
  BothClean,
};

std::string_view to_string(Agreement a);
Agreement fp_fn_decompose(const CompromiseVerdict& inferred, const CompromiseVerdict& measured);
bool is_false_positive(Agreement a);
bool is_false_negative(Agreement a);

// -- oracles ---------------------------------------------------------------------

/// Observers from top-k inferred AS paths: interior ASes plus every IX that
/// could carry one of the AS-AS hops. Caches per (window, AS pair); thread safe.
class InferredOracle : public AdversaryOracle {
 public:
  InferredOracle(const DailyRouteModels& models, const PrefixToASTable& table,
                 const IXRegistry* registry, std::size_t k, InferOptions options = {});

  std::optional<EntitySet> observers(const Prefix& from, const Prefix& to,
                                     std::int64_t when) const override;
  std::optional<EntitySet> observers_between(ASNumber from, ASNumber to, std::int64_t when) const;
  std::size_t k() const { return k_; }

 private:
  const DailyRouteModels& models_;
  const PrefixToASTable& table_;
  const IXRegistry* registry_;
  std::size_t k_;
  InferOptions options_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<std::int64_t, std::uint32_t, std::uint32_t>, std::optional<EntitySet>> cache_;
};

/// Observers seen on complete traceroutes matched by (source block, destination block).
class MeasuredOracle : public AdversaryOracle {
 public:
  struct Measurement {
    EntitySet observers;
    std::size_t traces = 0;
    bool disagreement = false;  // tied majority paths; observers hold their union
  };

  MeasuredOracle(std::vector<TraceRecord> traces, const PrefixToASTable& table);

  std::optional<EntitySet> observers(const Prefix& from, const Prefix& to,
                                     std::int64_t when) const override;
  std::optional<Measurement> measure(const Prefix& from, const Prefix& to) const;
  std::size_t pair_count() const { return measurements_.size(); }

 private:
  std::map<PrefixPair, Measurement> measurements_;
};

/// Measured observers of one complete trace: interior ASes plus its IX set.
EntitySet trace_observers(const TraceRecord& trace);

// -- aggregation -----------------------------------------------------------------

struct Counts {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  double rate() const { return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
};

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const;
};

/// (x, fraction of values <= x) for each distinct x, ascending.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);
CsvTable cdf_table(std::string name, std::string x_label, const std::vector<double>& values);

enum class Grouping : std::uint8_t { Overall, PerClientPrefix, PerHost };
std::string_view to_string(Grouping g);

/// Everything the aggregator needs from one simulated stream.
struct StreamRecord {
  std::string client_prefix;
  std::string client_host;
  std::size_t rep = 0;
  Verdict verdict = Verdict::Assigned;
  /// Verdicts for each (method, direction) with data.
  std::vector<CompromiseVerdict> verdicts;
  /// Failed streams: whether measured traces show an independent guard/exit
  /// pair; nullopt when no trace pair matched.
  std::optional<bool> independent_alternative;
};

/// Inferred verdicts for every k in `inferred` (index = k - 1) and direction;
/// measured verdicts (TorOut only) when `measured` is given.
StreamRecord annotate_stream(const StreamOutcome& outcome, const TorNetwork& net,
                             const PrefixToASTable& table,
                             std::span<const AdversaryOracle* const> inferred,
                             const MeasuredOracle* measured, bool check_alternatives);

/// Associative, commutative accumulator over StreamRecords.
class StreamAggregator {
 public:
  explicit StreamAggregator(Grouping grouping = Grouping::Overall) : grouping_(grouping) {}

  void add(const StreamRecord& record);
  void merge(const StreamAggregator& other);
  std::size_t streams() const { return streams_; }

  /// compromise, agreement and independence tables. Throws EmptyInput.
  std::vector<CsvTable> tables() const;
  /// Per-group compromise rates for one method/direction (AS and IX adversaries).
  std::vector<double> group_rates(Method method, Direction direction) const;

  struct AgreementCounts {
    std::uint64_t compared = 0, agree = 0, false_positive = 0, false_negative = 0, both_clean = 0;
    std::uint64_t measured_compromised = 0, inferred_compromised = 0;
  };
  /// Keyed by (group, k, kind) where kind is "AS", "IX" or "ASIX".
  const std::map<std::tuple<std::string, std::size_t, std::string>, AgreementCounts>& agreement() const {
    return agreement_;
  }

 private:
  struct GroupCounts {
    std::uint64_t streams = 0, assigned = 0, failed = 0;
    std::uint64_t assigned_with_traces = 0, violating = 0;
    std::uint64_t failed_with_traces = 0, with_alternative = 0;
    std::set<std::size_t> reps, reps_with_violation, reps_with_failure;
  };

  std::string group_of(const StreamRecord& r) const;

  Grouping grouping_;
  std::uint64_t streams_ = 0;
  // (group, method, direction, kind) -> compromised / streams with data
  std::map<std::tuple<std::string, Method, Direction, std::string>, Counts> compromise_;
  std::map<std::tuple<std::string, std::size_t, std::string>, AgreementCounts> agreement_;
  std::map<std::string, GroupCounts> groups_;
};

/// Trace-level inference accuracy: missing/extra counts per k and observer kind.
class AccuracyAggregator {
 public:
  void add(const std::string& host, std::size_t k, const std::string& kind, const PathComparison& cmp);
  void merge(const AccuracyAggregator& other);
  std::vector<CsvTable> tables() const;
  /// Missing-count CDF per (k, kind).
  std::vector<CsvTable> cdf_tables() const;

 private:
  struct Cell {
    std::uint64_t traces = 0, exact = 0, missing_sum = 0, extra_sum = 0;
    std::vector<double> missing, extra;
  };
  std::map<std::pair<std::size_t, std::string>, Cell> overall_;
  std::map<std::tuple<std::string, std::size_t, std::string>, Cell> per_host_;
};

}  // namespace asix

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asix/entity.hpp"
#include "asix/net.hpp"
#include "asix/tracepipe.hpp"
#include "asix/types.hpp"

namespace asix {

enum RelayFlag : std::uint8_t {
  kGuard = 1,
  kExit = 2,
  kRunning = 4,
  kValid = 8,
};

struct Relay {
  std::string id;
  Ipv4 address;
  Prefix prefix;
  ASNumber as;
  double weight = 0;
  std::uint8_t flags = 0;

  bool has(RelayFlag f) const { return (flags & f) != 0; }
};

std::string format_flags(std::uint8_t flags);
std::optional<std::uint8_t> parse_flags(std::string_view csv);

struct RelaySnapshot {
  std::int64_t hour = 0;
  std::vector<Relay> relays;

  const Relay* find(std::string_view id) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Hourly relay snapshots; queried with floor semantics.
class TorNetwork {
 public:
  /// Hours must be strictly increasing across calls.
  void add(RelaySnapshot snapshot);
  /// Latest snapshot at or before t. Throws NoSnapshotBefore.
  const RelaySnapshot& at(std::int64_t t) const;
  std::span<const RelaySnapshot> snapshots() const { return snapshots_; }

 private:
  std::vector<RelaySnapshot> snapshots_;
};

/// `<hour_ts>|<relay_id>|<addr>|<asn>|<weight>|<flags-csv>` per line, grouped by
/// hour in increasing order. The relay prefix is the routed block from `table`,
/// or the covering /24. Throws MalformedLine, DataError on a repeated hour.
TorNetwork load_network(std::istream& in, const PrefixToASTable* table = nullptr);
void write_network(std::ostream& out, const TorNetwork& net);

enum class Role : std::uint8_t { Guard, Middle, Exit };

std::string_view to_string(Role role);
bool eligible(const Relay& relay, Role role);

/// Seeded generator whose output is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

/// Index of a relay drawn with probability proportional to weight among those
/// eligible for `role` and not in `exclude`. Throws NoEligibleRelay.
std::size_t select_weighted(std::span<const Relay> relays, Role role, Rng& rng,
                            std::span<const std::size_t> exclude = {});

struct StreamEvent {
  std::int64_t time = 0;
  Ipv4 dest;
  std::uint16_t port = 0;
};

/// `<ts>|<dst_addr>|<port>` per line; times must not decrease. Throws MalformedLine.
std::vector<StreamEvent> parse_user_trace(std::istream& in);
void write_user_trace(std::ostream& out, std::span<const StreamEvent> trace);

/// Path observers between two routed blocks in the given direction.
class AdversaryOracle {
 public:
  virtual ~AdversaryOracle() = default;
  /// nullopt when the oracle has no data for the pair.
  virtual std::optional<EntitySet> observers(const Prefix& from, const Prefix& to,
                                             std::int64_t when) const = 0;
};

struct Client {
  Ipv4 address;
  Prefix prefix;
  std::optional<ASNumber> as;
};

/// Prefix and AS from the table; /24 fallback when unrouted.
Client make_client(Ipv4 address, const PrefixToASTable& table);
Prefix routed_prefix(Ipv4 address, const PrefixToASTable& table);

struct IndependenceBasis {
  EntitySet entry;  // guard -> client
  EntitySet exit;   // exit -> destination
};

struct Circuit {
  std::string guard;
  std::string middle;
  std::string exit;
  std::int64_t created_at = 0;
  std::optional<IndependenceBasis> basis;
};

enum class Verdict : std::uint8_t { Assigned, Failed };

struct StreamOutcome {
  Ipv4 client;
  std::size_t rep = 0;
  std::size_t stream_index = 0;
  StreamEvent stream;
  Verdict verdict = Verdict::Failed;
  std::optional<Circuit> circuit;
  std::int64_t snapshot_hour = 0;
  /// Guards usable at stream time (for independent mode: those with path data).
  std::vector<std::string> active_guards;
  /// Digests read back from a log when the basis sets themselves are not stored.
  std::string entry_digest = "-";
  std::string exit_digest = "-";
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::int64_t circuit_lifetime = 600;
  std::size_t guard_min = 3;
  std::size_t active_guard_min = 2;
  unsigned threads = 1;
};

/// Default path selection; every stream is assigned.
std::vector<StreamOutcome> simulate_vanilla(const Client& client, std::span<const StreamEvent> trace,
                                            const TorNetwork& net, const PrefixToASTable& table,
                                            const SimConfig& config);

/// Path selection that requires observers(guard -> client) and
/// observers(exit -> destination) to be known and disjoint.
std::vector<StreamOutcome> simulate_path_independent(const Client& client,
                                                     std::span<const StreamEvent> trace,
                                                     const TorNetwork& net,
                                                     const PrefixToASTable& table,
                                                     const AdversaryOracle& oracle,
                                                     const SimConfig& config);

std::string set_digest(const EntitySet& set);

/// One line per outcome; stable across runs with the same inputs.
void write_outcomes(std::ostream& out, std::span<const StreamOutcome> outcomes);
std::vector<StreamOutcome> read_outcomes(std::istream& in);

}  // namespace asix

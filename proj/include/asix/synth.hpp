#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asix/asgraph.hpp"
#include "asix/ixmap.hpp"
#include "asix/torsim.hpp"
#include "asix/tracepipe.hpp"

namespace asix::synth {

struct TopologyConfig {
  std::size_t tier1 = 3;
  std::size_t tier2 = 8;
  std::size_t stubs = 24;
  double tier2_peer_prob = 0.25;
  double multihome_prob = 0.4;
};

/// Tiered AS topology with known relationships.
struct Topology {
  std::vector<ASNumber> ases;
  std::vector<int> tier;  // 1, 2 or 3 (stub)
  ASGraph truth;

  std::size_t index_of(ASNumber as) const;
  /// Routed /16 of the AS at `index`.
  static Prefix block(std::size_t index);
};

Topology generate_topology(const TopologyConfig& config, Rng& rng);

/// Route choice preferring customer over peer over provider routes, then
/// shorter paths, then the lower next-hop AS.
class PolicyRouting {
 public:
  explicit PolicyRouting(const ASGraph& graph);

  /// Full path from src to dst inclusive; nullopt when unreachable.
  std::optional<ASPath> route(ASNumber src, ASNumber dst) const;

 private:
  std::vector<ASNumber> nodes_;
  std::vector<std::vector<std::uint32_t>> next_;  // [dst][src] -> next node index, or npos
};

struct SynthConfig {
  std::uint64_t seed = 1;
  TopologyConfig topology;
  std::size_t vantages = 6;
  double prepend_prob = 0.1;
  std::size_t exchanges = 3;
  double ix_rate = 0.25;         // share of AS links realized across an exchange
  double peering_listed = 0.5;   // share of those listed in the peering file
  double gap_rate = 0.05;        // per interior hop
  std::size_t batches = 2;
  std::size_t relays = 24;
  std::size_t hours = 24;
  double churn = 0.05;
  std::size_t clients = 3;
  std::size_t destinations = 20;
  std::size_t streams = 120;
  std::size_t pairs = 40;
  std::int64_t start = 1699920000;
};

struct SynthCorpus {
  Topology topology;
  RibTable rib;
  PrefixToASTable prefixes;
  IXRegistry registry;  // listed peerings only
  std::vector<TraceRecord> traces;
  std::vector<ASPath> true_paths;  // aligned with traces
  TorNetwork network;
  std::vector<StreamEvent> user_trace;
  std::vector<Ipv4> clients;
  std::vector<std::pair<ASNumber, ASNumber>> pairs;
};

/// Same config, same corpus.
SynthCorpus generate_corpus(const SynthConfig& config);

/// File names used by write_corpus.
namespace files {
inline constexpr const char* kRib = "rib.txt";
inline constexpr const char* kPrefixes = "prefixes.txt";
inline constexpr const char* kIxPrefixes = "ix_prefixes.txt";
inline constexpr const char* kIxPeerings = "ix_peerings.txt";
inline constexpr const char* kTraces = "traces.txt";
inline constexpr const char* kRelays = "relays.txt";
inline constexpr const char* kUserTrace = "user_trace.txt";
inline constexpr const char* kClients = "clients.txt";
inline constexpr const char* kPairs = "pairs.txt";
inline constexpr const char* kTruthGraph = "truth_graph.txt";
inline constexpr const char* kTruthPaths = "truth_paths.txt";
}  // namespace files

/// Writes every corpus file plus the answer key into `dir` (created if needed).
std::vector<std::filesystem::path> write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// `<address>` per line.
std::vector<Ipv4> parse_clients(std::istream& in);
/// `<src_asn>|<dst_asn>[|<ts>]` per line.
struct QueryPair {
  ASNumber src;
  ASNumber dst;
  std::int64_t when = 0;
};
std::vector<QueryPair> parse_pairs(std::istream& in);

}  // namespace asix::synth

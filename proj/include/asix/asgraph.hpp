#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "asix/net.hpp"
#include "asix/types.hpp"

namespace asix {

/// Economic relationship of a directed link a -> b, read from a's side.
enum class Relationship : std::uint8_t {
  CustomerToProvider,
  ProviderToCustomer,
  PeerToPeer,
  Sibling,
};

constexpr Relationship inverse(Relationship r) {
  switch (r) {
    case Relationship::CustomerToProvider: return Relationship::ProviderToCustomer;
    case Relationship::ProviderToCustomer: return Relationship::CustomerToProvider;
    default: return r;
  }
}

std::string_view to_string(Relationship r);
std::optional<Relationship> parse_relationship(std::string_view s);

struct RibEntry {
  ASNumber vantage;
  Prefix prefix;
  ASPath as_path;
};

struct RibTable {
  std::vector<RibEntry> entries;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::vector<std::string> errors;  // first few only

  void reject(std::size_t lineno, std::string_view reason);
};

/// `<vantage_asn>|<prefix>|<asn asn ...>` per line. Malformed lines are skipped.
RibTable parse_rib(std::istream& in, ParseStats* stats = nullptr);
void write_rib(std::ostream& out, const RibTable& rib);

/// Collapses prepending. Throws LoopDetected on a non-adjacent repeat.
ASPath normalize_as_path(std::span<const ASNumber> raw);

/// Non-throwing variant; on a loop returns nullopt and stores the repeated AS.
std::optional<ASPath> try_normalize_as_path(std::span<const ASNumber> raw,
                                            std::optional<ASNumber>* loop_as = nullptr);

struct LinkCounts {
  std::size_t customer_provider = 0;  // undirected c2p/p2c links
  std::size_t peer = 0;
  std::size_t sibling = 0;
  std::size_t total() const { return customer_provider + peer + sibling; }
};

/// Relationship-annotated AS topology. Immutable once built.
class ASGraph {
 public:
  struct Neighbor {
    ASNumber as;
    Relationship rel;  // from the owning node's side
  };

  ASGraph() = default;

  /// Builds from explicit links (a, b, rel of a->b). The inverse direction is implied.
  /// Throws DataError on contradictory duplicates or self links.
  static ASGraph from_links(std::span<const std::tuple<ASNumber, ASNumber, Relationship>> links,
                            std::span<const ASNumber> extra_nodes = {});

  const std::vector<ASNumber>& nodes() const { return nodes_; }
  bool contains(ASNumber as) const { return adjacency_.count(as) != 0; }
  std::optional<Relationship> relationship(ASNumber from, ASNumber to) const;
  std::size_t degree(ASNumber as) const;
  /// Sorted by neighbor AS.
  std::span<const Neighbor> neighbors(ASNumber as) const;
  LinkCounts counts() const;

  /// Canonical text form: sorted `node|asn|degree` then `link|a|b|rel` with a < b.
  void write(std::ostream& out) const;
  static ASGraph read(std::istream& in);

  friend bool operator==(const ASGraph& a, const ASGraph& b);

 private:
  void add_link(ASNumber a, ASNumber b, Relationship rel);
  void finalize();

  static std::uint64_t key(ASNumber a, ASNumber b) {
    return (std::uint64_t{a.value()} << 32) | b.value();
  }

  std::vector<ASNumber> nodes_;
  std::unordered_map<ASNumber, std::vector<Neighbor>> adjacency_;
  std::unordered_map<std::uint64_t, Relationship> links_;
};

struct GaoOptions {
  /// A link may be labelled peer when max(deg)/min(deg) <= this ratio.
  double peer_degree_ratio = 1.0;
};

struct GraphBuild {
  ASGraph graph;
  std::size_t paths_used = 0;
  std::size_t loops_dropped = 0;
  /// Indices into the RIB of loop-free paths that fail the valley-free check.
  std::vector<std::size_t> violations;
};

/// Degree-based relationship inference over observed BGP paths. Throws EmptyInput.
GraphBuild build_graph(const RibTable& rib, const GaoOptions& options = {});

/// Pattern check on a relationship sequence:
/// (c2p | sibling)* (p2p)? (p2c | sibling)*
bool is_valley_free(std::span<const Relationship> rels);

/// Throws UnknownLink when a hop is missing from the graph.
bool is_valley_free(const ASGraph& graph, std::span<const ASNumber> path);

}  // namespace asix

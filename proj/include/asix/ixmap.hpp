#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "asix/net.hpp"
#include "asix/trace_record.hpp"
#include "asix/types.hpp"

namespace asix {

/// Where a peering triple came from. Values combine as a bit set.
enum class PeeringSource : std::uint8_t { File = 1, Harvested = 2, Both = 3 };

std::string_view to_string(PeeringSource s);

/// Unordered (AS, AS, IX) triple; stored with a <= b.
struct Peering {
  ASNumber a;
  ASNumber b;
  IXId ix;

  static Peering make(ASNumber x, ASNumber y, IXId ix) {
    return x < y ? Peering{x, y, ix} : Peering{y, x, ix};
  }
  friend auto operator<=>(const Peering&, const Peering&) = default;
};

struct Exchange {
  IXId id;
  std::string name;
  std::vector<Prefix> prefixes;
};

class IXRegistry {
 public:
  /// Throws OverlappingPrefixes when a block overlaps another exchange's block,
  /// DataError on a duplicate id.
  void add_exchange(IXId id, std::string name, std::span<const Prefix> prefixes);
  /// Returns false when the triple was already known (its source is merged).
  bool add_peering(ASNumber a, ASNumber b, IXId ix, PeeringSource source = PeeringSource::File);

  /// Longest-prefix match over exchange blocks.
  std::optional<IXId> detect_ix(Ipv4 addr) const;
  /// Sorted; symmetric in (a, b).
  std::vector<IXId> candidate_ixes(ASNumber a, ASNumber b) const;

  const std::map<IXId, Exchange>& exchanges() const { return exchanges_; }
  std::size_t exchange_count() const { return exchanges_.size(); }
  std::size_t peering_count() const { return peerings_.size(); }
  const std::map<Peering, PeeringSource>& peerings() const { return peerings_; }

 private:
  static std::uint64_t pair_key(ASNumber a, ASNumber b) {
    if (b < a) std::swap(a, b);
    return (std::uint64_t{a.value()} << 32) | b.value();
  }

  std::map<IXId, Exchange> exchanges_;
  PrefixTrie<IXId> prefixes_;
  std::map<Peering, PeeringSource> peerings_;
  std::unordered_map<std::uint64_t, std::vector<IXId>> by_pair_;
};

/// `<ix_id>|<name>|<prefix>[,<prefix>...]` and `<asn_a>|<asn_b>|<ix_id>` per line.
/// Throws MalformedLine or OverlappingPrefixes.
IXRegistry load_registry(std::istream& prefix_file, std::istream& peering_file);

void write_exchanges(std::ostream& out, const IXRegistry& registry);
/// Optionally restricted to triples carrying the given source bit.
void write_peerings(std::ostream& out, const IXRegistry& registry,
                    std::optional<PeeringSource> only = std::nullopt);

struct HarvestStats {
  std::size_t ix_hops = 0;
  std::size_t skipped = 0;  // IX hop next to a gap or unmapped hop
  std::size_t intra_as = 0;
};

/// Triples (AS before, AS after, IX) for every resolved trace hop on an IX block.
/// Traces must carry derived hop labels.
std::set<Peering> harvest_peerings(std::span<const TraceRecord> traces, const IXRegistry& registry,
                                   HarvestStats* stats = nullptr);

/// Adds harvested triples, tagging their source. Returns the number of new triples.
std::size_t merge_harvested(IXRegistry& registry, const std::set<Peering>& harvested);

}  // namespace asix

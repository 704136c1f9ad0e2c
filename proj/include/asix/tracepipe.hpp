#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asix/asgraph.hpp"
#include "asix/ixmap.hpp"
#include "asix/net.hpp"
#include "asix/trace_record.hpp"

namespace asix {

/// Address block -> origin AS with longest-prefix-match lookup.
class PrefixToASTable {
 public:
  /// Returns false if the block was already present (the AS is overwritten).
  bool insert(const Prefix& prefix, ASNumber as) { return trie_.insert(prefix, as); }
  std::optional<ASNumber> lookup(Ipv4 addr) const;
  /// The matching block itself.
  std::optional<Prefix> prefix_of(Ipv4 addr) const;
  std::size_t size() const { return trie_.size(); }
  const std::vector<PrefixTrie<ASNumber>::Entry>& entries() const { return trie_.entries(); }

 private:
  PrefixTrie<ASNumber> trie_;
};

/// `<prefix>|<asn>` per line. Malformed lines are skipped and counted.
PrefixToASTable parse_prefix_table(std::istream& in, ParseStats* stats = nullptr);
/// Sorted by block.
void write_prefix_table(std::ostream& out, const PrefixToASTable& table);

/// `<src>|<dst>|<batch>|<ts>|<ttl>:<addr_or_*>,...`. Throws MalformedLine.
TraceRecord parse_trace_line(std::string_view line, std::size_t lineno = 0);
/// Malformed lines are skipped and counted.
std::vector<TraceRecord> parse_traces(std::istream& in, ParseStats* stats = nullptr);
void write_trace(std::ostream& out, const TraceRecord& trace);

struct StitchStats {
  std::size_t gaps = 0;       // maximal missing windows seen
  std::size_t repaired = 0;   // windows filled
  std::size_t hops_repaired = 0;
  std::size_t ambiguous = 0;  // more than one distinct filler
  std::size_t unmatched = 0;  // no donor, or no present hop on one side
};

/// Fills missing hop windows from other traces with the same source and batch
/// whose hops match on both sides of the window. Repairs only when exactly one
/// distinct filler exists. Donors are the unrepaired input traces.
std::vector<TraceRecord> stitch(std::vector<TraceRecord> traces, StitchStats* stats = nullptr);

/// Maps hops to ASes and classifies completeness. Addresses inside an IX block
/// that have no AS mapping are skipped rather than treated as gaps.
TraceRecord resolve_as_path(TraceRecord trace, const PrefixToASTable& table,
                            const IXRegistry* registry = nullptr);

/// Sorted IX ids of every responding hop inside an IX block.
std::vector<IXId> extract_ix_set(const TraceRecord& trace, const IXRegistry& registry);

using PrefixPair = std::pair<Prefix, Prefix>;

/// Indices of complete-AS traces keyed by (source block, destination block).
std::map<PrefixPair, std::vector<std::size_t>> index_by_prefix_pair(
    std::span<const TraceRecord> traces, const PrefixToASTable& table);

struct PipelineStats {
  ParseStats parse;
  StitchStats stitch;
  std::size_t complete_ip = 0;
  std::size_t complete_as = 0;
  std::size_t incomplete = 0;
  std::size_t loop_repaired = 0;
  std::size_t reached_dest = 0;
  std::size_t reached_dest_as = 0;
};

/// Parse, stitch, resolve and IX-annotate. `threads` = 0 uses the hardware count.
std::vector<TraceRecord> run_tracepipe(std::istream& in, const PrefixToASTable& table,
                                       const IXRegistry* registry, PipelineStats* stats = nullptr,
                                       unsigned threads = 0);

/// Resolved form: the raw fields, with `+` marking repaired hops, then
/// `|<completeness>|<as path, * for gaps>|<ix ids csv>|<flags>`.
void write_resolved(std::ostream& out, const TraceRecord& trace);
std::vector<TraceRecord> read_resolved(std::istream& in);

std::string_view to_string(Completeness c);

/// Interior ASes of a complete trace (source and destination AS removed).
std::vector<ASNumber> interior_ases(const TraceRecord& trace);

}  // namespace asix

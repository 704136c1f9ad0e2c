#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asix/net.hpp"
#include "asix/types.hpp"

namespace asix {

struct Hop {
  std::uint32_t ttl = 0;
  std::optional<Ipv4> addr;  // nullopt is a non-responding hop ("*")
  bool repaired = false;

  friend bool operator==(const Hop&, const Hop&) = default;
};

enum class Completeness : std::uint8_t { CompleteIP, CompleteAS, Incomplete };

/// nullopt marks a gap.
using ASHop = std::optional<ASNumber>;

/// Fields computed by resolve_as_path.
struct TraceDerived {
  bool reached_dest = false;
  bool reached_dest_as = false;
  bool loop_repaired = false;
  /// One label per entry of `hops`; nullopt for gaps, unmapped and IX-only addresses.
  std::vector<ASHop> hop_as;
  /// Starts with the source host's AS when it maps.
  std::vector<ASHop> as_path;
  Completeness completeness = Completeness::Incomplete;
  std::optional<ASNumber> source_as;
  std::optional<ASNumber> dest_as;

  friend bool operator==(const TraceDerived&, const TraceDerived&) = default;
};

struct TraceRecord {
  Ipv4 source;
  Ipv4 destination;
  std::string batch_id;
  std::int64_t timestamp = 0;
  std::vector<Hop> hops;  // strictly increasing ttl

  std::optional<TraceDerived> derived;
  std::vector<IXId> ix_set;  // sorted

  bool complete_as() const {
    return derived && derived->completeness != Completeness::Incomplete;
  }

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

}  // namespace asix

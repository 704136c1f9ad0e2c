#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asix/synth.hpp"

namespace asix {

/// A RIB file and the day (timestamp / 86400) its routes describe.
struct RibSource {
  std::string path;
  std::int64_t day = 0;
};

/// `path` or `path@day`.
RibSource parse_rib_source(std::string_view spec);

struct RunConfig {
  std::vector<RibSource> ribs;
  std::string graph;
  std::string prefixes;
  std::string ix_prefixes;
  std::string ix_peerings;
  std::string traces;
  std::string resolved;
  std::string pairs;
  std::string relays;
  std::string user_trace;
  std::string clients;
  std::string outcomes;
  std::string out_dir = "out";

  std::size_t k = 5;
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::int64_t circuit_lifetime = 600;
  std::size_t guard_min = 3;
  std::size_t active_guard_min = 2;
  std::string mode = "vanilla";    // vanilla | independent
  std::string oracle = "inferred";  // inferred | measured | conflict
  unsigned threads = 0;             // 0: hardware concurrency
  bool emit_cdf = false;
  double peer_ratio = 1.0;

  synth::SynthConfig synth;

  /// Throws UsageError.
  void validate() const;
  /// Settings that affect outputs, with input paths reduced to file names.
  std::vector<std::pair<std::string, std::string>> canonical() const;
  std::string hash() const;
};

struct StageReport {
  std::string stage;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::string> outputs;  // file names inside out_dir
};

void print_report(std::ostream& out, const StageReport& report);

StageReport cmd_buildgraph(const RunConfig& config);
StageReport cmd_infer(const RunConfig& config);
StageReport cmd_tracepipe(const RunConfig& config);
StageReport cmd_simulate(const RunConfig& config);
StageReport cmd_analyze(const RunConfig& config);
StageReport cmd_synth(const RunConfig& config);

/// Hex digest of a file's bytes.
std::string file_digest(const std::string& path);

}  // namespace asix

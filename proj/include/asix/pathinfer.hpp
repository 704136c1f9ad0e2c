#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "asix/asgraph.hpp"
#include "asix/types.hpp"

namespace asix {

/// Observed route suffixes indexed by destination (origin) AS.
class RouteBase {
 public:
  using SuffixMap = std::map<ASPath, std::uint64_t>;
  using SuffixRef = const SuffixMap::value_type*;

  // The head index points into the suffix maps, so copies are not allowed.
  RouteBase() = default;
  RouteBase(const RouteBase&) = delete;
  RouteBase& operator=(const RouteBase&) = delete;
  RouteBase(RouteBase&&) = default;
  RouteBase& operator=(RouteBase&&) = default;

  /// Indexes every suffix of an already normalized path.
  void add_path(const ASPath& path, std::uint64_t count = 1);
  /// Indexes exactly one suffix.
  void add_suffix(const ASPath& suffix, std::uint64_t count = 1);

  std::uint64_t count(const ASPath& suffix) const;
  const SuffixMap* suffixes_to(ASNumber destination) const;
  /// Suffixes toward `destination` whose first AS is `head`, in map order.
  std::span<const SuffixRef> headed(ASNumber destination, ASNumber head) const;

  std::size_t destination_count() const { return by_destination_.size(); }
  std::size_t suffix_count() const { return suffix_count_; }

 private:
  static std::uint64_t key(ASNumber dst, ASNumber head) {
    return (std::uint64_t{dst.value()} << 32) | head.value();
  }

  std::unordered_map<ASNumber, SuffixMap> by_destination_;
  std::unordered_map<std::uint64_t, std::vector<SuffixRef>> by_head_;
  std::size_t suffix_count_ = 0;
};

/// Throws EmptyInput when the RIB yields no loop-free path.
RouteBase build_route_base(const RibTable& rib);

struct InferOptions {
  std::size_t max_k = 5;
  std::size_t prepend_depth = 4;
};

struct ScoredPath {
  ASPath path;
  std::uint64_t count = 0;  // observations of the suffix used to build it

  friend bool operator==(const ScoredPath&, const ScoredPath&) = default;
};

/// Total order: higher count, then shorter, then lexicographically smaller.
bool ranks_before(const ScoredPath& a, const ScoredPath& b);

struct InferredPathSet {
  ASNumber source;
  ASNumber destination;
  std::size_t k_requested;
  std::vector<ScoredPath> paths;
};

/// Top-k valley-free paths formed by prepending an ascending walk from `src` to
/// an observed suffix toward `dst`. Throws UnknownAS, NoRoute, or
/// std::invalid_argument for k outside [1, max_k].
InferredPathSet infer_top_k(const ASGraph& graph, const RouteBase& base, ASNumber src,
                            ASNumber dst, std::size_t k, const InferOptions& options = {});

/// Interior ASes of the first k paths (k is clamped to the number of paths).
std::set<ASNumber> path_as_set(const InferredPathSet& paths, std::size_t k);

/// `<src>|<dst>|<rank>|<asn asn ...>|<count>|<len>` per ranked path; rank is 1-based.
void write_inference(std::ostream& out, const InferredPathSet& paths);

/// Graph plus route base for one 24-hour window.
struct RouteModel {
  ASGraph graph;
  RouteBase base;
};

RouteModel build_route_model(const RibTable& rib, const GaoOptions& gao = {});

/// Route models keyed by day (timestamp / 86400). Lookup picks the window of
/// the timestamp, or the latest earlier one, or the earliest when none precede.
class DailyRouteModels {
 public:
  static constexpr std::int64_t kWindow = 86400;

  void add(std::int64_t day, std::shared_ptr<const RouteModel> model);
  const RouteModel& at(std::int64_t timestamp) const;
  std::int64_t window_of(std::int64_t timestamp) const;
  bool empty() const { return models_.empty(); }

 private:
  std::map<std::int64_t, std::shared_ptr<const RouteModel>> models_;
};

}  // namespace asix

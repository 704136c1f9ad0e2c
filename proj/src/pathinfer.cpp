#include "asix/pathinfer.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "asix/errors.hpp"

namespace asix {

void RouteBase::add_suffix(const ASPath& suffix, std::uint64_t count) {
  if (suffix.empty() || count == 0) throw std::invalid_argument("RouteBase: empty suffix or zero count");
  auto& map = by_destination_[suffix.back()];
  auto [it, inserted] = map.try_emplace(suffix, 0);
  it->second += count;
  if (inserted) {
    by_head_[key(suffix.back(), suffix.front())].push_back(&*it);
    ++suffix_count_;
  }
}

void RouteBase::add_path(const ASPath& path, std::uint64_t count) {
  for (std::size_t i = 0; i < path.size(); ++i)
    add_suffix(ASPath(path.begin() + static_cast<std::ptrdiff_t>(i), path.end()), count);
}

std::uint64_t RouteBase::count(const ASPath& suffix) const {
  if (suffix.empty()) return 0;
  auto it = by_destination_.find(suffix.back());
  if (it == by_destination_.end()) return 0;
  auto s = it->second.find(suffix);
  return s == it->second.end() ? 0 : s->second;
}

const RouteBase::SuffixMap* RouteBase::suffixes_to(ASNumber destination) const {
  auto it = by_destination_.find(destination);
  return it == by_destination_.end() ? nullptr : &it->second;
}

std::span<const RouteBase::SuffixRef> RouteBase::headed(ASNumber destination, ASNumber head) const {
  auto it = by_head_.find(key(destination, head));
  if (it == by_head_.end()) return {};
  return it->second;
}

RouteBase build_route_base(const RibTable& rib) {
  RouteBase base;
  std::size_t used = 0;
  for (const auto& e : rib.entries) {
    auto normalized = try_normalize_as_path(e.as_path);
    if (!normalized || normalized->empty()) continue;
    base.add_path(*normalized);
    ++used;
  }
  if (used == 0) throw EmptyInput("RIB has no loop-free path");
  return base;
}

bool ranks_before(const ScoredPath& a, const ScoredPath& b) {
  if (a.count != b.count) return a.count > b.count;
  if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
  return a.path < b.path;
}

namespace {

bool ascending(Relationship r) {
  return r == Relationship::CustomerToProvider || r == Relationship::Sibling;
}

class CandidateSearch {
 public:
  CandidateSearch(const ASGraph& graph, const RouteBase& base, ASNumber dst, std::size_t depth)
      : graph_(graph), base_(base), dst_(dst), depth_(depth) {}

  std::map<ASPath, std::uint64_t> run(ASNumber src) {
    walk_.assign(1, src);
    descend();
    return std::move(best_);
  }

 private:
  // An ascending walk keeps the valley-free automaton in its initial state, so
  // the joined path is valley-free exactly when the suffix is.
  bool suffix_valley_free(RouteBase::SuffixRef ref) {
    auto [it, inserted] = vf_cache_.try_emplace(ref, false);
    if (!inserted) return it->second;
    const ASPath& s = ref->first;
    std::vector<Relationship> rels;
    rels.reserve(s.size());
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      auto rel = graph_.relationship(s[i], s[i + 1]);
      if (!rel) return it->second = false;
      rels.push_back(*rel);
    }
    return it->second = is_valley_free(rels);
  }

  bool on_walk(ASNumber as) const { return std::find(walk_.begin(), walk_.end(), as) != walk_.end(); }

  void consider() {
    for (RouteBase::SuffixRef ref : base_.headed(dst_, walk_.back())) {
      const ASPath& s = ref->first;
      bool loop = false;
      for (std::size_t i = 1; i < s.size() && !loop; ++i) loop = on_walk(s[i]);
      if (loop || !suffix_valley_free(ref)) continue;
      ASPath p = walk_;
      p.insert(p.end(), s.begin() + 1, s.end());
      auto& c = best_[std::move(p)];
      c = std::max(c, ref->second);
    }
  }

  void descend() {
    consider();
    if (walk_.size() > depth_) return;
    for (const auto& n : graph_.neighbors(walk_.back())) {
      if (!ascending(n.rel) || on_walk(n.as)) continue;
      walk_.push_back(n.as);
      descend();
      walk_.pop_back();
    }
  }

  const ASGraph& graph_;
  const RouteBase& base_;
  ASNumber dst_;
  std::size_t depth_;
  ASPath walk_;
  std::map<ASPath, std::uint64_t> best_;
  std::unordered_map<RouteBase::SuffixRef, bool> vf_cache_;
};

}  // namespace

InferredPathSet infer_top_k(const ASGraph& graph, const RouteBase& base, ASNumber src,
                            ASNumber dst, std::size_t k, const InferOptions& options) {
  if (k < 1 || k > options.max_k)
    throw std::invalid_argument("k must be in [1, " + std::to_string(options.max_k) + "]");
  if (!graph.contains(src)) throw UnknownAS(src);
  if (!graph.contains(dst)) throw UnknownAS(dst);

  auto candidates = CandidateSearch(graph, base, dst, options.prepend_depth).run(src);
  if (candidates.empty()) throw NoRoute(src, dst);

  std::vector<ScoredPath> ranked;
  ranked.reserve(candidates.size());
  for (auto& [path, count] : candidates) ranked.push_back(ScoredPath{path, count});
  auto cut = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(cut), ranked.end(),
                    ranks_before);
  ranked.resize(cut);
  return InferredPathSet{src, dst, k, std::move(ranked)};
}

std::set<ASNumber> path_as_set(const InferredPathSet& paths, std::size_t k) {
  std::set<ASNumber> out;
  k = std::min(k, paths.paths.size());
  for (std::size_t i = 0; i < k; ++i) {
    const ASPath& p = paths.paths[i].path;
    for (std::size_t j = 1; j + 1 < p.size(); ++j) out.insert(p[j]);
  }
  out.erase(paths.source);
  out.erase(paths.destination);
  return out;
}

void write_inference(std::ostream& out, const InferredPathSet& paths) {
  for (std::size_t i = 0; i < paths.paths.size(); ++i) {
    const auto& p = paths.paths[i];
    out << paths.source.str() << '|' << paths.destination.str() << '|' << (i + 1) << '|'
        << format_path(p.path) << '|' << p.count << '|' << p.path.size() << '\n';
  }
}

RouteModel build_route_model(const RibTable& rib, const GaoOptions& gao) {
  RouteModel model;
  model.graph = build_graph(rib, gao).graph;
  model.base = build_route_base(rib);
  return model;
}

void DailyRouteModels::add(std::int64_t day, std::shared_ptr<const RouteModel> model) {
  if (!models_.emplace(day, std::move(model)).second)
    throw DataError("duplicate route model for day " + std::to_string(day));
}

std::int64_t DailyRouteModels::window_of(std::int64_t timestamp) const {
  if (models_.empty()) throw EmptyInput("no route models");
  std::int64_t day = timestamp >= 0 ? timestamp / kWindow : (timestamp - kWindow + 1) / kWindow;
  auto it = models_.upper_bound(day);
  if (it == models_.begin()) return it->first;
  return std::prev(it)->first;
}

const RouteModel& DailyRouteModels::at(std::int64_t timestamp) const {
  return *models_.at(window_of(timestamp));
}

}  // namespace asix

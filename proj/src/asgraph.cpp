#include "asix/asgraph.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix {

std::string_view to_string(Relationship r) {
  switch (r) {
    case Relationship::CustomerToProvider: return "c2p";
    case Relationship::ProviderToCustomer: return "p2c";
    case Relationship::PeerToPeer: return "p2p";
    case Relationship::Sibling: return "s2s";
  }
  return "?";
}

std::optional<Relationship> parse_relationship(std::string_view s) {
  if (s == "c2p") return Relationship::CustomerToProvider;
  if (s == "p2c") return Relationship::ProviderToCustomer;
  if (s == "p2p") return Relationship::PeerToPeer;
  if (s == "s2s") return Relationship::Sibling;
  return std::nullopt;
}

void ParseStats::reject(std::size_t lineno, std::string_view reason) {
  ++malformed;
  if (errors.size() < 20) errors.push_back("line " + std::to_string(lineno) + ": " + std::string(reason));
}

RibTable parse_rib(std::istream& in, ParseStats* stats) {
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  RibTable rib;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    ++st.lines;
    auto fields = text::split(line, '|');
    if (fields.size() != 3) return st.reject(lineno, "expected 3 fields");
    auto vantage = ASNumber::parse(fields[0]);
    auto prefix = Prefix::parse(text::trim(fields[1]));
    if (!vantage) return st.reject(lineno, "bad vantage AS");
    if (!prefix) return st.reject(lineno, "bad prefix");
    ASPath path;
    for (auto tok : text::split(text::trim(fields[2]), ' ')) {
      if (tok.empty()) continue;
      auto as = ASNumber::parse(tok);
      if (!as) return st.reject(lineno, "bad AS in path");
      path.push_back(*as);
    }
    if (path.empty()) return st.reject(lineno, "empty AS path");
    ++st.accepted;
    rib.entries.push_back(RibEntry{*vantage, *prefix, std::move(path)});
  });
  return rib;
}

void write_rib(std::ostream& out, const RibTable& rib) {
  for (const auto& e : rib.entries)
    out << e.vantage.str() << '|' << e.prefix.str() << '|' << format_path(e.as_path) << '\n';
}

std::optional<ASPath> try_normalize_as_path(std::span<const ASNumber> raw,
                                            std::optional<ASNumber>* loop_as) {
  ASPath out;
  out.reserve(raw.size());
  for (ASNumber as : raw) {
    if (!out.empty() && out.back() == as) continue;
    if (std::find(out.begin(), out.end(), as) != out.end()) {
      if (loop_as) *loop_as = as;
      return std::nullopt;
    }
    out.push_back(as);
  }
  return out;
}

ASPath normalize_as_path(std::span<const ASNumber> raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_as_path: empty path");
  std::optional<ASNumber> loop;
  auto out = try_normalize_as_path(raw, &loop);
  if (!out) throw LoopDetected(*loop);
  return *out;
}

// -- ASGraph -----------------------------------------------------------------

void ASGraph::add_link(ASNumber a, ASNumber b, Relationship rel) {
  if (a == b) throw DataError("self link on AS" + a.str());
  auto [it, inserted] = links_.emplace(key(a, b), rel);
  if (!inserted) {
    if (it->second != rel)
      throw DataError("conflicting relationship for AS" + a.str() + " -> AS" + b.str());
    return;
  }
  links_.emplace(key(b, a), inverse(rel));
  adjacency_[a].push_back(Neighbor{b, rel});
  adjacency_[b].push_back(Neighbor{a, inverse(rel)});
}

void ASGraph::finalize() {
  nodes_.clear();
  for (auto& [as, nbrs] : adjacency_) {
    nodes_.push_back(as);
    std::sort(nbrs.begin(), nbrs.end(), [](const Neighbor& x, const Neighbor& y) { return x.as < y.as; });
  }
  std::sort(nodes_.begin(), nodes_.end());
}

ASGraph ASGraph::from_links(std::span<const std::tuple<ASNumber, ASNumber, Relationship>> links,
                            std::span<const ASNumber> extra_nodes) {
  ASGraph g;
  for (const auto& [a, b, rel] : links) g.add_link(a, b, rel);
  for (ASNumber as : extra_nodes) g.adjacency_[as];
  g.finalize();
  return g;
}

std::optional<Relationship> ASGraph::relationship(ASNumber from, ASNumber to) const {
  auto it = links_.find(key(from, to));
  if (it == links_.end()) return std::nullopt;
  return it->second;
}

std::size_t ASGraph::degree(ASNumber as) const {
  auto it = adjacency_.find(as);
  return it == adjacency_.end() ? 0 : it->second.size();
}

std::span<const ASGraph::Neighbor> ASGraph::neighbors(ASNumber as) const {
  auto it = adjacency_.find(as);
  if (it == adjacency_.end()) return {};
  return it->second;
}

LinkCounts ASGraph::counts() const {
  LinkCounts c;
  for (ASNumber a : nodes_) {
    for (const auto& n : neighbors(a)) {
      if (!(a < n.as)) continue;
      switch (n.rel) {
        case Relationship::PeerToPeer: ++c.peer; break;
        case Relationship::Sibling: ++c.sibling; break;
        default: ++c.customer_provider; break;
      }
    }
  }
  return c;
}

void ASGraph::write(std::ostream& out) const {
  out << "# asix-graph v1\n";
  for (ASNumber a : nodes_) out << "node|" << a.str() << '|' << degree(a) << '\n';
  for (ASNumber a : nodes_)
    for (const auto& n : neighbors(a))
      if (a < n.as) out << "link|" << a.str() << '|' << n.as.str() << '|' << to_string(n.rel) << '\n';
}

ASGraph ASGraph::read(std::istream& in) {
  ASGraph g;
  std::map<ASNumber, std::size_t> declared;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f[0] == "node" && f.size() == 3) {
      auto as = ASNumber::parse(f[1]);
      auto deg = text::parse_int<std::size_t>(f[2]);
      if (!as || !deg) throw MalformedLine(lineno, "bad node record");
      declared[*as] = *deg;
      g.adjacency_[*as];
    } else if (f[0] == "link" && f.size() == 4) {
      auto a = ASNumber::parse(f[1]);
      auto b = ASNumber::parse(f[2]);
      auto rel = parse_relationship(f[3]);
      if (!a || !b || !rel) throw MalformedLine(lineno, "bad link record");
      g.add_link(*a, *b, *rel);
    } else {
      throw MalformedLine(lineno, "unknown graph record");
    }
  });
  g.finalize();
  for (const auto& [as, deg] : declared)
    if (g.degree(as) != deg) throw DataError("degree mismatch for AS" + as.str());
  return g;
}

bool operator==(const ASGraph& a, const ASGraph& b) {
  if (a.nodes_ != b.nodes_) return false;
  for (ASNumber n : a.nodes_) {
    auto x = a.neighbors(n);
    auto y = b.neighbors(n);
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].as != y[i].as || x[i].rel != y[i].rel) return false;
  }
  return true;
}

// -- valley-free ---------------------------------------------------------------

bool is_valley_free(std::span<const Relationship> rels) {
  enum { Up, Top, Down } state = Up;
  for (Relationship r : rels) {
    switch (r) {
      case Relationship::Sibling: break;
      case Relationship::CustomerToProvider:
        if (state != Up) return false;
        break;
      case Relationship::PeerToPeer:
        if (state != Up) return false;
        state = Top;
        break;
      case Relationship::ProviderToCustomer: state = Down; break;
    }
  }
  return true;
}

bool is_valley_free(const ASGraph& graph, std::span<const ASNumber> path) {
  std::vector<Relationship> rels;
  rels.reserve(path.size());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto rel = graph.relationship(path[i], path[i + 1]);
    if (!rel) throw UnknownLink(path[i], path[i + 1]);
    rels.push_back(*rel);
  }
  return is_valley_free(rels);
}

// -- relationship inference ----------------------------------------------------

namespace {

struct LinkVotes {
  std::size_t up = 0;    // low endpoint is the customer
  std::size_t down = 0;  // high endpoint is the customer
  std::size_t peer = 0;
};

std::uint64_t undirected_key(ASNumber a, ASNumber b) {
  if (b < a) std::swap(a, b);
  return (std::uint64_t{a.value()} << 32) | b.value();
}

}  // namespace

GraphBuild build_graph(const RibTable& rib, const GaoOptions& options) {
  GraphBuild result;
  std::vector<std::pair<std::size_t, ASPath>> paths;
  std::set<ASNumber> all_nodes;
  std::unordered_map<ASNumber, std::unordered_set<ASNumber>> neighbor_sets;

  for (std::size_t i = 0; i < rib.entries.size(); ++i) {
    auto normalized = try_normalize_as_path(rib.entries[i].as_path);
    if (!normalized) {
      ++result.loops_dropped;
      continue;
    }
    for (ASNumber as : *normalized) all_nodes.insert(as);
    for (std::size_t j = 0; j + 1 < normalized->size(); ++j) {
      neighbor_sets[(*normalized)[j]].insert((*normalized)[j + 1]);
      neighbor_sets[(*normalized)[j + 1]].insert((*normalized)[j]);
    }
    if (normalized->size() >= 2) paths.emplace_back(i, std::move(*normalized));
  }
  if (paths.empty()) throw EmptyInput("RIB has no usable path of length >= 2");
  result.paths_used = paths.size();

  auto degree = [&](ASNumber as) { return neighbor_sets[as].size(); };
  auto degrees_comparable = [&](ASNumber a, ASNumber b) {
    double da = static_cast<double>(degree(a));
    double db = static_cast<double>(degree(b));
    return std::max(da, db) <= options.peer_degree_ratio * std::min(da, db);
  };

  // std::map keeps the final labelling independent of hash order.
  std::map<std::uint64_t, LinkVotes> votes;
  for (const auto& [idx, path] : paths) {
    // Top provider: highest degree; ties go to the higher AS number.
    std::size_t top = 0;
    for (std::size_t j = 1; j < path.size(); ++j) {
      auto dj = degree(path[j]);
      auto dt = degree(path[top]);
      if (dj > dt || (dj == dt && path[top] < path[j])) top = j;
    }
    // At most one of the two links at the top may be a peer link; keep the
    // one toward the larger neighbor as the candidate.
    std::optional<std::size_t> peer_link;
    if (top > 0 && top + 1 < path.size())
      peer_link = degree(path[top - 1]) > degree(path[top + 1]) ? top - 1 : top;

    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
      ASNumber a = path[j], b = path[j + 1];
      auto& v = votes[undirected_key(a, b)];
      if (peer_link == j && degrees_comparable(a, b)) {
        ++v.peer;
        continue;
      }
      ASNumber customer = j < top ? a : b;
      ASNumber provider = j < top ? b : a;
      if (customer < provider)
        ++v.up;
      else
        ++v.down;
    }
  }

  std::vector<std::tuple<ASNumber, ASNumber, Relationship>> links;
  links.reserve(votes.size());
  for (const auto& [k, v] : votes) {
    ASNumber lo(static_cast<std::uint32_t>(k >> 32));
    ASNumber hi(static_cast<std::uint32_t>(k & 0xffffffffu));
    Relationship rel;
    if (v.up > 0 && v.down > 0)
      rel = Relationship::Sibling;
    else if (v.peer > 0 && v.peer >= v.up + v.down)
      rel = Relationship::PeerToPeer;
    else if (v.up > 0)
      rel = Relationship::CustomerToProvider;
    else
      rel = Relationship::ProviderToCustomer;
    links.emplace_back(lo, hi, rel);
  }
  std::vector<ASNumber> nodes(all_nodes.begin(), all_nodes.end());
  result.graph = ASGraph::from_links(links, nodes);

  for (const auto& [idx, path] : paths)
    if (!is_valley_free(result.graph, path)) result.violations.push_back(idx);
  return result;
}

}  // namespace asix

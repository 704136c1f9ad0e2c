#include "asix/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix::synth {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

Ipv4 offset(const Prefix& block, std::uint32_t host) { return Ipv4{block.network.value | host}; }

Ipv4 host_addr(std::size_t as_index, std::uint32_t h) {
  return offset(Topology::block(as_index), 0x8000u | (h & 0x7fffu));
}

Prefix ix_block(std::size_t ix_index) {
  return Prefix{Ipv4{(172u << 24) | ((16u + static_cast<std::uint32_t>(ix_index)) << 16)}, 16};
}

bool chance(Rng& rng, double p) { return rng.uniform() < p; }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

void open_out(std::ofstream& out, const std::filesystem::path& p) {
  out.open(p, std::ios::binary);
  if (!out) throw UsageError("cannot write " + p.string());
}

}  // namespace

std::size_t Topology::index_of(ASNumber as) const {
  auto it = std::find(ases.begin(), ases.end(), as);
  if (it == ases.end()) throw UnknownAS(as);
  return static_cast<std::size_t>(it - ases.begin());
}

Prefix Topology::block(std::size_t index) {
  const auto i = static_cast<std::uint32_t>(index);
  return Prefix{Ipv4{((11u + i / 256u) << 24) | ((i % 256u) << 16)}, 16};
}

Topology generate_topology(const TopologyConfig& config, Rng& rng) {
  if (config.tier1 == 0) throw UsageError("topology needs at least one tier-1 AS");
  Topology t;
  std::vector<ASNumber> t1, t2, stubs;
  for (std::size_t i = 0; i < config.tier1; ++i) t1.push_back(ASNumber(static_cast<std::uint32_t>(1 + i)));
  for (std::size_t i = 0; i < config.tier2; ++i) t2.push_back(ASNumber(static_cast<std::uint32_t>(100 + i)));
  for (std::size_t i = 0; i < config.stubs; ++i) stubs.push_back(ASNumber(static_cast<std::uint32_t>(1000 + i)));

  using Link = std::tuple<ASNumber, ASNumber, Relationship>;
  std::vector<Link> links;
  std::set<std::pair<ASNumber, ASNumber>> seen;
  auto link = [&](ASNumber a, ASNumber b, Relationship rel) {
    if (!seen.insert(std::minmax(a, b)).second) return;
    links.emplace_back(a, b, rel);
  };

  for (std::size_t i = 0; i < t1.size(); ++i)
    for (std::size_t j = i + 1; j < t1.size(); ++j) link(t1[i], t1[j], Relationship::PeerToPeer);
  for (ASNumber a : t2) {
    link(a, pick(rng, t1), Relationship::CustomerToProvider);
    if (t1.size() > 1 && chance(rng, config.multihome_prob)) link(a, pick(rng, t1), Relationship::CustomerToProvider);
  }
  for (std::size_t i = 0; i < t2.size(); ++i)
    for (std::size_t j = i + 1; j < t2.size(); ++j)
      if (chance(rng, config.tier2_peer_prob)) link(t2[i], t2[j], Relationship::PeerToPeer);
  const std::vector<ASNumber>& upstream = t2.empty() ? t1 : t2;
  for (ASNumber a : stubs) {
    link(a, pick(rng, upstream), Relationship::CustomerToProvider);
    if (chance(rng, config.multihome_prob)) link(a, pick(rng, upstream), Relationship::CustomerToProvider);
  }

  for (ASNumber a : t1) t.ases.push_back(a), t.tier.push_back(1);
  for (ASNumber a : t2) t.ases.push_back(a), t.tier.push_back(2);
  for (ASNumber a : stubs) t.ases.push_back(a), t.tier.push_back(3);
  t.truth = ASGraph::from_links(links, t.ases);
  return t;
}

PolicyRouting::PolicyRouting(const ASGraph& graph) : nodes_(graph.nodes()) {
  const std::size_t n = nodes_.size();
  auto idx = [&](ASNumber a) {
    return static_cast<std::uint32_t>(std::lower_bound(nodes_.begin(), nodes_.end(), a) - nodes_.begin());
  };
  // Per node: customers, peers, providers as indices.
  std::vector<std::vector<std::uint32_t>> customers(n), peers(n), providers(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& nb : graph.neighbors(nodes_[v])) {
      const std::uint32_t u = idx(nb.as);
      switch (nb.rel) {
        case Relationship::ProviderToCustomer: customers[v].push_back(u); break;
        case Relationship::CustomerToProvider: providers[v].push_back(u); break;
        default: peers[v].push_back(u); break;
      }
    }
  }

  next_.assign(n, std::vector<std::uint32_t>(n, kNone));
  enum Class : std::uint8_t { None, Self, Customer, Peer, Provider };
  for (std::uint32_t d = 0; d < n; ++d) {
    std::vector<Class> cls(n, None);
    std::vector<std::uint32_t> len(n, kNone);
    auto& next = next_[d];
    cls[d] = Self;
    len[d] = 0;
    next[d] = d;
    auto better = [&](std::uint32_t v, std::uint32_t cand_len, std::uint32_t via) {
      return len[v] == kNone || cand_len < len[v] ||
             (cand_len == len[v] && nodes_[via] < nodes_[next[v]]);
    };
    for (bool changed = true; changed;) {
      changed = false;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (cls[v] == Self) continue;
        for (std::uint32_t c : customers[v]) {
          if (cls[c] != Self && cls[c] != Customer) continue;
          if (better(v, len[c] + 1, c)) {
            cls[v] = Customer, len[v] = len[c] + 1, next[v] = c;
            changed = true;
          }
        }
      }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> peer_routes;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (cls[v] != None) continue;
      std::uint32_t best_len = kNone, via = kNone;
      for (std::uint32_t q : peers[v]) {
        if (cls[q] != Self && cls[q] != Customer) continue;
        const std::uint32_t l = len[q] + 1;
        if (via == kNone || l < best_len || (l == best_len && nodes_[q] < nodes_[via])) best_len = l, via = q;
      }
      if (via != kNone) peer_routes.emplace_back(v, via);
    }
    for (auto [v, q] : peer_routes) cls[v] = Peer, len[v] = len[q] + 1, next[v] = q;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (cls[v] != None && cls[v] != Provider) continue;
        for (std::uint32_t p : providers[v]) {
          if (cls[p] == None) continue;
          if (better(v, len[p] + 1, p)) {
            cls[v] = Provider, len[v] = len[p] + 1, next[v] = p;
            changed = true;
          }
        }
      }
    }
  }
}

std::optional<ASPath> PolicyRouting::route(ASNumber src, ASNumber dst) const {
  auto find = [&](ASNumber a) -> std::optional<std::uint32_t> {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), a);
    if (it == nodes_.end() || *it != a) return std::nullopt;
    return static_cast<std::uint32_t>(it - nodes_.begin());
  };
  auto s = find(src);
  auto d = find(dst);
  if (!s || !d) return std::nullopt;
  const auto& next = next_[*d];
  ASPath path{src};
  for (std::uint32_t v = *s; v != *d;) {
    v = next[v];
    if (v == kNone || path.size() > nodes_.size()) return std::nullopt;
    path.push_back(nodes_[v]);
  }
  return path;
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  if (config.relays < 4) throw UsageError("synthetic corpus needs at least 4 relays");
  if (config.hours == 0 || config.batches == 0) throw UsageError("hours and batches must be positive");
  Rng rng(config.seed);
  SynthCorpus c;
  c.topology = generate_topology(config.topology, rng);
  const Topology& topo = c.topology;
  const std::size_t n = topo.ases.size();
  const PolicyRouting routing(topo.truth);

  for (std::size_t i = 0; i < n; ++i) c.prefixes.insert(Topology::block(i), topo.ases[i]);

  std::vector<std::size_t> stub_idx, all_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    all_idx[i] = i;
    if (topo.tier[i] == 3) stub_idx.push_back(i);
  }
  if (stub_idx.empty()) stub_idx = all_idx;

  // Exchanges and the links they carry.
  std::vector<IXId> ix_ids;
  for (std::size_t x = 0; x < config.exchanges; ++x) {
    IXId id(static_cast<std::uint32_t>(x + 1));
    const Prefix blocks[] = {ix_block(x)};
    c.registry.add_exchange(id, "IX-" + std::to_string(x + 1), blocks);
    ix_ids.push_back(id);
  }
  std::map<std::pair<ASNumber, ASNumber>, std::size_t> ix_of_link;
  if (!ix_ids.empty()) {
    for (ASNumber a : topo.truth.nodes())
      for (const auto& nb : topo.truth.neighbors(a)) {
        if (!(a < nb.as) || !chance(rng, config.ix_rate)) continue;
        const std::size_t x = rng.below(ix_ids.size());
        ix_of_link[{a, nb.as}] = x;
        if (chance(rng, config.peering_listed)) c.registry.add_peering(a, nb.as, ix_ids[x]);
      }
  }

  // RIB from vantage points.
  std::vector<std::size_t> order = all_idx;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t vantages = std::min(config.vantages, n);
  for (std::size_t vi = 0; vi < vantages; ++vi) {
    const ASNumber v = topo.ases[order[vi]];
    for (std::size_t d = 0; d < n; ++d) {
      if (topo.ases[d] == v) continue;
      auto path = routing.route(v, topo.ases[d]);
      if (!path) continue;
      if (chance(rng, config.prepend_prob)) path->push_back(path->back());
      c.rib.entries.push_back(RibEntry{v, Topology::block(d), std::move(*path)});
    }
  }

  // Relays and hourly snapshots.
  std::vector<Relay> relays;
  for (std::size_t r = 0; r < config.relays; ++r) {
    const std::size_t as = pick(rng, all_idx);
    std::uint8_t flags = kRunning | kValid;
    if (r % 4 == 0 || r % 4 == 2) flags |= kGuard;
    if (r % 4 == 1 || r % 4 == 2) flags |= kExit;
    char id[16];
    std::snprintf(id, sizeof id, "R%03zu", r);
    const Ipv4 addr = host_addr(as, static_cast<std::uint32_t>(1 + r));
    relays.push_back(Relay{id, addr, Topology::block(as), topo.ases[as],
                           static_cast<double>(1 + rng.below(100)), flags});
  }
  for (std::size_t h = 0; h < config.hours; ++h) {
    RelaySnapshot snap;
    snap.hour = config.start + static_cast<std::int64_t>(h) * 3600;
    for (std::size_t r = 0; r < relays.size(); ++r)
      if (r < 4 || !chance(rng, config.churn)) snap.relays.push_back(relays[r]);
    c.network.add(std::move(snap));
  }

  // Clients, destinations, user trace.
  for (std::size_t i = 0; i < config.clients; ++i)
    c.clients.push_back(host_addr(pick(rng, stub_idx), static_cast<std::uint32_t>(1000 + i)));
  std::vector<Ipv4> destinations;
  for (std::size_t i = 0; i < config.destinations; ++i)
    destinations.push_back(host_addr(pick(rng, stub_idx), static_cast<std::uint32_t>(2000 + i)));
  if (!destinations.empty()) {
    std::vector<double> cumulative;
    double total = 0;
    for (std::size_t i = 0; i < destinations.size(); ++i) cumulative.push_back(total += 1.0 / static_cast<double>(i + 1));
    const auto span = static_cast<std::int64_t>(config.hours) * 3600;
    for (std::size_t s = 0; s < config.streams; ++s) {
      StreamEvent e;
      e.time = config.start + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(span)));
      const double u = rng.uniform() * total;
      const auto at = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
      e.dest = destinations[std::min<std::size_t>(static_cast<std::size_t>(at), destinations.size() - 1)];
      e.port = chance(rng, 0.7) ? 443 : 80;
      c.user_trace.push_back(e);
    }
    std::stable_sort(c.user_trace.begin(), c.user_trace.end(),
                     [](const StreamEvent& a, const StreamEvent& b) { return a.time < b.time; });
  }

  // Traceroutes from every relay toward every client and destination.
  auto neighbor_pos = [&](ASNumber a, ASNumber b) {
    auto nbs = topo.truth.neighbors(a);
    auto it = std::find_if(nbs.begin(), nbs.end(), [&](const ASGraph::Neighbor& x) { return x.as == b; });
    return static_cast<std::uint32_t>(it - nbs.begin());
  };
  std::vector<Ipv4> targets = c.clients;
  targets.insert(targets.end(), destinations.begin(), destinations.end());
  for (std::size_t b = 0; b < config.batches; ++b) {
    const std::string batch = "b" + std::to_string(b + 1);
    for (std::size_t r = 0; r < relays.size(); ++r) {
      const Relay& relay = relays[r];
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const Ipv4 dst = targets[t];
        const ASNumber dst_as = *c.prefixes.lookup(dst);
        auto path = routing.route(relay.as, dst_as);
        if (!path) continue;
        std::vector<Ipv4> addrs;
        for (std::size_t i = 0; i < path->size(); ++i) {
          const ASNumber as = (*path)[i];
          const std::size_t ai = topo.index_of(as);
          const Prefix blk = Topology::block(ai);
          if (i > 0) {
            const ASNumber prev = (*path)[i - 1];
            auto ix = ix_of_link.find(std::minmax(prev, as));
            if (ix != ix_of_link.end())
              addrs.push_back(offset(ix_block(ix->second), static_cast<std::uint32_t>(ai + 1)));
            else
              addrs.push_back(offset(blk, 0x1000u | neighbor_pos(as, prev)));
          }
          addrs.push_back(offset(blk, 0x0001u));
          if (i + 1 < path->size()) addrs.push_back(offset(blk, 0x2000u | neighbor_pos(as, (*path)[i + 1])));
        }
        addrs.push_back(dst);
        TraceRecord tr;
        tr.source = relay.address;
        tr.destination = dst;
        tr.batch_id = batch;
        tr.timestamp = config.start + static_cast<std::int64_t>(b) * 3600 + static_cast<std::int64_t>(t);
        for (std::size_t h = 0; h < addrs.size(); ++h) {
          Hop hop;
          hop.ttl = static_cast<std::uint32_t>(h + 1);
          if (h + 1 < addrs.size() && chance(rng, config.gap_rate))
            hop.addr = std::nullopt;
          else
            hop.addr = addrs[h];
          tr.hops.push_back(hop);
        }
        c.traces.push_back(std::move(tr));
        c.true_paths.push_back(std::move(*path));
      }
    }
  }

  for (std::size_t p = 0; p < config.pairs && n > 1; ++p) {
    const ASNumber a = topo.ases[rng.below(n)];
    ASNumber b = topo.ases[rng.below(n)];
    while (b == a) b = topo.ases[rng.below(n)];
    c.pairs.push_back({a, b});
  }
  return c;
}

std::vector<std::filesystem::path> write_corpus(const SynthCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto file = [&](const char* name, auto&& body) {
    std::ofstream out;
    open_out(out, dir / name);
    body(out);
    written.push_back(dir / name);
  };
  file(files::kRib, [&](std::ostream& o) { write_rib(o, c.rib); });
  file(files::kPrefixes, [&](std::ostream& o) { write_prefix_table(o, c.prefixes); });
  file(files::kIxPrefixes, [&](std::ostream& o) { write_exchanges(o, c.registry); });
  file(files::kIxPeerings, [&](std::ostream& o) { write_peerings(o, c.registry); });
  file(files::kTraces, [&](std::ostream& o) {
    for (const auto& t : c.traces) write_trace(o, t);
  });
  file(files::kRelays, [&](std::ostream& o) { write_network(o, c.network); });
  file(files::kUserTrace, [&](std::ostream& o) { write_user_trace(o, c.user_trace); });
  file(files::kClients, [&](std::ostream& o) {
    for (Ipv4 a : c.clients) o << a.str() << '\n';
  });
  file(files::kPairs, [&](std::ostream& o) {
    for (const auto& [a, b] : c.pairs) o << a.str() << '|' << b.str() << '\n';
  });
  file(files::kTruthGraph, [&](std::ostream& o) { c.topology.truth.write(o); });
  file(files::kTruthPaths, [&](std::ostream& o) {
    for (std::size_t i = 0; i < c.traces.size(); ++i)
      o << c.traces[i].source.str() << '|' << c.traces[i].destination.str() << '|' << c.traces[i].batch_id
        << '|' << format_path(c.true_paths[i]) << '\n';
  });
  return written;
}

std::vector<Ipv4> parse_clients(std::istream& in) {
  std::vector<Ipv4> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto a = Ipv4::parse(text::trim(line));
    if (!a) throw MalformedLine(lineno, "bad client address");
    out.push_back(*a);
  });
  return out;
}

std::vector<QueryPair> parse_pairs(std::istream& in) {
  std::vector<QueryPair> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 2 && f.size() != 3) throw MalformedLine(lineno, "pair line needs 2 or 3 fields");
    auto a = ASNumber::parse(f[0]);
    auto b = ASNumber::parse(f[1]);
    if (!a || !b) throw MalformedLine(lineno, "bad AS number");
    QueryPair q{*a, *b, 0};
    if (f.size() == 3) {
      auto ts = text::parse_int<std::int64_t>(f[2]);
      if (!ts) throw MalformedLine(lineno, "bad timestamp");
      q.when = *ts;
    }
    out.push_back(q);
  });
  return out;
}

}  // namespace asix::synth

#include "asix/tracepipe.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix {

// -- prefix table --------------------------------------------------------------

std::optional<ASNumber> PrefixToASTable::lookup(Ipv4 addr) const {
  if (const auto* e = trie_.longest_match(addr)) return e->value;
  return std::nullopt;
}

std::optional<Prefix> PrefixToASTable::prefix_of(Ipv4 addr) const {
  if (const auto* e = trie_.longest_match(addr)) return e->prefix;
  return std::nullopt;
}

PrefixToASTable parse_prefix_table(std::istream& in, ParseStats* stats) {
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  PrefixToASTable table;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    ++st.lines;
    auto f = text::split(line, '|');
    if (f.size() != 2) return st.reject(lineno, "expected 2 fields");
    auto p = Prefix::parse(text::trim(f[0]));
    auto as = ASNumber::parse(f[1]);
    if (!p || !as) return st.reject(lineno, "bad prefix or AS");
    ++st.accepted;
    table.insert(*p, *as);
  });
  return table;
}

void write_prefix_table(std::ostream& out, const PrefixToASTable& table) {
  auto entries = table.entries();
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.prefix < b.prefix; });
  for (const auto& e : entries) out << e.prefix.str() << '|' << e.value.str() << '\n';
}

// -- trace text format ---------------------------------------------------------

namespace {

struct HopToken {
  Hop hop;
  ASHop as;  // only in resolved form
};

HopToken parse_hop(std::string_view tok, std::size_t lineno, bool resolved) {
  HopToken out;
  auto colon = tok.find(':');
  if (colon == std::string_view::npos) throw MalformedLine(lineno, "hop without ttl");
  auto ttl = text::parse_int<std::uint32_t>(tok.substr(0, colon));
  if (!ttl || *ttl == 0) throw MalformedLine(lineno, "bad ttl");
  out.hop.ttl = *ttl;
  auto rest = tok.substr(colon + 1);
  if (resolved) {
    auto at = rest.find('@');
    if (at != std::string_view::npos) {
      out.as = ASNumber::parse(rest.substr(at + 1));
      if (!out.as) throw MalformedLine(lineno, "bad hop AS");
      rest = rest.substr(0, at);
    }
    if (!rest.empty() && rest.back() == '+') {
      out.hop.repaired = true;
      rest.remove_suffix(1);
    }
  }
  if (rest != "*") {
    out.hop.addr = Ipv4::parse(rest);
    if (!out.hop.addr) throw MalformedLine(lineno, "bad hop address");
  }
  return out;
}

void parse_raw_fields(std::span<const std::string_view> f, std::size_t lineno, bool resolved,
                      TraceRecord& t, std::vector<ASHop>* labels) {
  auto src = Ipv4::parse(f[0]);
  auto dst = Ipv4::parse(f[1]);
  if (!src || !dst) throw MalformedLine(lineno, "bad endpoint address");
  auto ts = text::parse_int<std::int64_t>(f[3]);
  if (!ts) throw MalformedLine(lineno, "bad timestamp");
  if (f[2].empty()) throw MalformedLine(lineno, "empty batch id");
  t.source = *src;
  t.destination = *dst;
  t.batch_id = std::string(f[2]);
  t.timestamp = *ts;
  if (f[4].empty()) return;
  std::uint32_t last = 0;
  for (auto tok : text::split(f[4], ',')) {
    auto h = parse_hop(tok, lineno, resolved);
    if (h.hop.ttl <= last) throw MalformedLine(lineno, "ttl not increasing");
    last = h.hop.ttl;
    t.hops.push_back(h.hop);
    if (labels) labels->push_back(h.as);
  }
}

void write_hops(std::ostream& out, const TraceRecord& t, bool resolved) {
  for (std::size_t i = 0; i < t.hops.size(); ++i) {
    const Hop& h = t.hops[i];
    if (i) out << ',';
    out << h.ttl << ':' << (h.addr ? h.addr->str() : "*");
    if (resolved) {
      if (h.repaired) out << '+';
      if (t.derived && i < t.derived->hop_as.size() && t.derived->hop_as[i])
        out << '@' << t.derived->hop_as[i]->str();
    }
  }
}

}  // namespace

TraceRecord parse_trace_line(std::string_view line, std::size_t lineno) {
  auto f = text::split(line, '|');
  if (f.size() != 5) throw MalformedLine(lineno, "expected 5 fields");
  TraceRecord t;
  parse_raw_fields(f, lineno, false, t, nullptr);
  return t;
}

std::vector<TraceRecord> parse_traces(std::istream& in, ParseStats* stats) {
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  std::vector<TraceRecord> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    ++st.lines;
    try {
      out.push_back(parse_trace_line(line, lineno));
      ++st.accepted;
    } catch (const MalformedLine& e) {
      st.reject(lineno, e.what());
    }
  });
  return out;
}

void write_trace(std::ostream& out, const TraceRecord& t) {
  out << t.source.str() << '|' << t.destination.str() << '|' << t.batch_id << '|' << t.timestamp
      << '|';
  write_hops(out, t, false);
  out << '\n';
}

// -- stitching -----------------------------------------------------------------

namespace {

enum class Slot : std::uint8_t { Absent, Gap, Present };

struct DenseTrace {
  std::vector<Slot> slots;
  std::vector<std::uint32_t> addrs;
};

DenseTrace densify(const TraceRecord& t) {
  DenseTrace d;
  std::uint32_t n = t.hops.empty() ? 0 : t.hops.back().ttl;
  d.slots.assign(n, Slot::Absent);
  d.addrs.assign(n, 0);
  for (const Hop& h : t.hops) {
    d.slots[h.ttl - 1] = h.addr ? Slot::Present : Slot::Gap;
    if (h.addr) d.addrs[h.ttl - 1] = h.addr->value;
  }
  return d;
}

struct WindowKey {
  std::uint32_t before, after, length;
  friend bool operator==(const WindowKey&, const WindowKey&) = default;
};

struct WindowKeyHash {
  std::size_t operator()(const WindowKey& k) const noexcept {
    std::uint64_t h = (std::uint64_t{k.before} << 32) ^ k.after;
    h ^= std::uint64_t{k.length} * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

struct Filler {
  bool seen = false;
  bool ambiguous = false;
  bool several_donors = false;
  std::size_t donor = 0;
  std::vector<std::uint32_t> hops;
};

struct Window {
  std::size_t first, last;  // missing slots, inclusive
};

std::vector<Window> missing_windows(const DenseTrace& d) {
  std::vector<Window> out;
  std::size_t i = 0;
  while (i < d.slots.size()) {
    if (d.slots[i] == Slot::Present) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < d.slots.size() && d.slots[j + 1] != Slot::Present) ++j;
    out.push_back(Window{i, j});
    i = j + 1;
  }
  return out;
}

void stitch_group(std::vector<TraceRecord>& traces, std::span<const std::size_t> members,
                  StitchStats& st) {
  std::vector<DenseTrace> dense;
  dense.reserve(members.size());
  for (std::size_t m : members) dense.push_back(densify(traces[m]));

  std::unordered_map<WindowKey, Filler, WindowKeyHash> wanted;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> lengths_after;
  for (const auto& d : dense) {
    for (const Window& w : missing_windows(d)) {
      if (w.first == 0 || w.last + 1 >= d.slots.size()) continue;
      WindowKey key{d.addrs[w.first - 1], d.addrs[w.last + 1],
                    static_cast<std::uint32_t>(w.last - w.first + 1)};
      if (wanted.try_emplace(key).second) {
        auto& lens = lengths_after[key.before];
        if (std::find(lens.begin(), lens.end(), key.length) == lens.end()) lens.push_back(key.length);
      }
    }
  }
  for (std::size_t di = 0; di < dense.size(); ++di) {
    const auto& d = dense[di];
    for (std::size_t p = 0; p < d.slots.size(); ++p) {
      if (d.slots[p] != Slot::Present) continue;
      auto it = lengths_after.find(d.addrs[p]);
      if (it == lengths_after.end()) continue;
      for (std::uint32_t len : it->second) {
        std::size_t q = p + len + 1;
        if (q >= d.slots.size() || d.slots[q] != Slot::Present) continue;
        auto f = wanted.find(WindowKey{d.addrs[p], d.addrs[q], len});
        if (f == wanted.end()) continue;
        bool complete = true;
        for (std::size_t x = p + 1; x < q && complete; ++x) complete = d.slots[x] == Slot::Present;
        if (!complete) continue;
        Filler& fill = f->second;
        auto begin = d.addrs.begin() + static_cast<std::ptrdiff_t>(p + 1);
        auto end = d.addrs.begin() + static_cast<std::ptrdiff_t>(q);
        if (!fill.seen) {
          fill.seen = true;
          fill.donor = di;
          fill.hops.assign(begin, end);
        } else if (!std::equal(begin, end, fill.hops.begin(), fill.hops.end())) {
          fill.ambiguous = true;
        } else if (fill.donor != di) {
          fill.several_donors = true;
        }
      }
    }
  }

  for (std::size_t di = 0; di < dense.size(); ++di) {
    const auto& d = dense[di];
    auto windows = missing_windows(d);
    if (windows.empty()) continue;
    std::vector<Slot> slots = d.slots;
    std::vector<std::uint32_t> addrs = d.addrs;
    std::vector<bool> repaired(slots.size(), false);
    bool changed = false;
    for (const Window& w : windows) {
      ++st.gaps;
      if (w.first == 0 || w.last + 1 >= d.slots.size()) {
        ++st.unmatched;
        continue;
      }
      WindowKey key{d.addrs[w.first - 1], d.addrs[w.last + 1],
                    static_cast<std::uint32_t>(w.last - w.first + 1)};
      const Filler& fill = wanted.at(key);
      if (fill.ambiguous) {
        ++st.ambiguous;
        continue;
      }
      if (!fill.seen || (fill.donor == di && !fill.several_donors)) {
        ++st.unmatched;
        continue;
      }
      for (std::size_t x = w.first; x <= w.last; ++x) {
        slots[x] = Slot::Present;
        addrs[x] = fill.hops[x - w.first];
        repaired[x] = true;
      }
      ++st.repaired;
      st.hops_repaired += w.last - w.first + 1;
      changed = true;
    }
    if (!changed) continue;
    auto& hops = traces[members[di]].hops;
    hops.clear();
    for (std::size_t x = 0; x < slots.size(); ++x) {
      if (slots[x] == Slot::Absent) continue;
      Hop h;
      h.ttl = static_cast<std::uint32_t>(x + 1);
      if (slots[x] == Slot::Present) h.addr = Ipv4{addrs[x]};
      h.repaired = repaired[x];
      hops.push_back(h);
    }
  }
}

unsigned worker_count(unsigned requested, std::size_t work) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (work < 4096) n = 1;
  return n;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i, w);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::vector<std::size_t>> group_by_source_batch(const std::vector<TraceRecord>& traces) {
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  std::string key;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    key.assign(reinterpret_cast<const char*>(&traces[i].source.value), 4);
    key += traces[i].batch_id;
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

std::vector<TraceRecord> stitch_impl(std::vector<TraceRecord> traces, StitchStats* stats,
                                     unsigned threads) {
  auto groups = group_by_source_batch(traces);
  unsigned n = worker_count(threads, traces.size());
  std::vector<StitchStats> partial(n);
  parallel_for(groups.size(), n, [&](std::size_t g, unsigned w) { stitch_group(traces, groups[g], partial[w]); });
  if (stats) {
    for (const auto& p : partial) {
      stats->gaps += p.gaps;
      stats->repaired += p.repaired;
      stats->hops_repaired += p.hops_repaired;
      stats->ambiguous += p.ambiguous;
      stats->unmatched += p.unmatched;
    }
  }
  return traces;
}

}  // namespace

std::vector<TraceRecord> stitch(std::vector<TraceRecord> traces, StitchStats* stats) {
  return stitch_impl(std::move(traces), stats, 1);
}

// -- AS resolution -------------------------------------------------------------

std::string_view to_string(Completeness c) {
  switch (c) {
    case Completeness::CompleteIP: return "complete-ip";
    case Completeness::CompleteAS: return "complete-as";
    case Completeness::Incomplete: return "incomplete";
  }
  return "?";
}

TraceRecord resolve_as_path(TraceRecord trace, const PrefixToASTable& table,
                            const IXRegistry* registry) {
  TraceDerived d;
  d.source_as = table.lookup(trace.source);
  d.dest_as = table.lookup(trace.destination);
  d.hop_as.reserve(trace.hops.size());

  // Token stream: an AS, or nullopt for a gap.
  std::vector<ASHop> tokens;
  tokens.reserve(trace.hops.size() + 1);
  if (d.source_as) tokens.push_back(d.source_as);
  bool ip_complete = true;
  std::uint32_t expected_ttl = 1;
  std::optional<ASNumber> final_as;
  for (const Hop& h : trace.hops) {
    if (h.ttl != expected_ttl) {
      tokens.push_back(std::nullopt);
      ip_complete = false;
    }
    expected_ttl = h.ttl + 1;
    if (!h.addr) {
      d.hop_as.push_back(std::nullopt);
      tokens.push_back(std::nullopt);
      ip_complete = false;
      continue;
    }
    auto as = table.lookup(*h.addr);
    d.hop_as.push_back(as);
    if (as) {
      tokens.push_back(as);
      final_as = as;
    } else if (!(registry && registry->detect_ix(*h.addr))) {
      tokens.push_back(std::nullopt);
    }
  }

  d.reached_dest = !trace.hops.empty() && trace.hops.back().addr &&
                   *trace.hops.back().addr == trace.destination;
  d.reached_dest_as = final_as && d.dest_as && *final_as == *d.dest_as;

  std::vector<ASHop> path;
  path.reserve(tokens.size());
  for (const ASHop& tok : tokens) {
    if (!tok) {
      if (path.empty() || path.back()) path.push_back(std::nullopt);
      continue;
    }
    if (!path.empty() && path.back() == tok) continue;
    auto seen = std::find(path.begin(), path.end(), tok);
    if (seen != path.end()) {
      // Only gaps in between: the gap sits inside one AS and is elided.
      bool only_gaps = std::all_of(seen + 1, path.end(), [](const ASHop& x) { return !x; });
      if (!only_gaps) d.loop_repaired = true;
      path.erase(seen + 1, path.end());
      continue;
    }
    path.push_back(tok);
  }
  while (!path.empty() && !path.back()) path.pop_back();
  d.as_path = std::move(path);

  bool boundary_gap = std::any_of(d.as_path.begin(), d.as_path.end(), [](const ASHop& x) { return !x; });
  if (d.reached_dest_as && !boundary_gap)
    d.completeness = (ip_complete && d.reached_dest) ? Completeness::CompleteIP : Completeness::CompleteAS;
  else
    d.completeness = Completeness::Incomplete;

  trace.derived = std::move(d);
  return trace;
}

std::vector<IXId> extract_ix_set(const TraceRecord& trace, const IXRegistry& registry) {
  std::vector<IXId> out;
  for (const Hop& h : trace.hops) {
    if (!h.addr) continue;
    if (auto ix = registry.detect_ix(*h.addr)) out.push_back(*ix);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<PrefixPair, std::vector<std::size_t>> index_by_prefix_pair(std::span<const TraceRecord> traces,
                                                                     const PrefixToASTable& table) {
  std::map<PrefixPair, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!traces[i].complete_as()) continue;
    auto sp = table.prefix_of(traces[i].source);
    auto dp = table.prefix_of(traces[i].destination);
    if (!sp || !dp) continue;
    out[{*sp, *dp}].push_back(i);
  }
  return out;
}

std::vector<ASNumber> interior_ases(const TraceRecord& trace) {
  std::vector<ASNumber> out;
  if (!trace.derived) return out;
  for (const ASHop& h : trace.derived->as_path) {
    if (!h) continue;
    if (h == trace.derived->source_as || h == trace.derived->dest_as) continue;
    out.push_back(*h);
  }
  return out;
}

std::vector<TraceRecord> run_tracepipe(std::istream& in, const PrefixToASTable& table,
                                       const IXRegistry* registry, PipelineStats* stats,
                                       unsigned threads) {
  PipelineStats local;
  PipelineStats& st = stats ? *stats : local;
  auto traces = parse_traces(in, &st.parse);
  unsigned n = worker_count(threads, traces.size());
  traces = stitch_impl(std::move(traces), &st.stitch, n);
  parallel_for(traces.size(), n, [&](std::size_t i, unsigned) {
    traces[i] = resolve_as_path(std::move(traces[i]), table, registry);
    if (registry) traces[i].ix_set = extract_ix_set(traces[i], *registry);
  });
  for (const auto& t : traces) {
    switch (t.derived->completeness) {
      case Completeness::CompleteIP: ++st.complete_ip; break;
      case Completeness::CompleteAS: ++st.complete_as; break;
      case Completeness::Incomplete: ++st.incomplete; break;
    }
    st.loop_repaired += t.derived->loop_repaired;
    st.reached_dest += t.derived->reached_dest;
    st.reached_dest_as += t.derived->reached_dest_as;
  }
  return traces;
}

// -- resolved text form ----------------------------------------------------------

void write_resolved(std::ostream& out, const TraceRecord& t) {
  out << t.source.str() << '|' << t.destination.str() << '|' << t.batch_id << '|' << t.timestamp
      << '|';
  write_hops(out, t, true);
  if (!t.derived) {
    out << "|unresolved|||-|-|-\n";
    return;
  }
  const auto& d = *t.derived;
  out << '|' << to_string(d.completeness) << '|';
  for (std::size_t i = 0; i < d.as_path.size(); ++i)
    out << (i ? " " : "") << (d.as_path[i] ? d.as_path[i]->str() : "*");
  out << '|';
  for (std::size_t i = 0; i < t.ix_set.size(); ++i) out << (i ? "," : "") << t.ix_set[i].str();
  out << '|' << (d.source_as ? d.source_as->str() : "-") << '|' << (d.dest_as ? d.dest_as->str() : "-")
      << '|';
  std::string flags;
  if (d.reached_dest) flags += "rd,";
  if (d.reached_dest_as) flags += "rda,";
  if (d.loop_repaired) flags += "loop,";
  if (flags.empty())
    flags = "-";
  else
    flags.pop_back();
  out << flags << '\n';
}

std::vector<TraceRecord> read_resolved(std::istream& in) {
  std::vector<TraceRecord> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 11) throw MalformedLine(lineno, "resolved trace needs 11 fields");
    TraceRecord t;
    std::vector<ASHop> labels;
    parse_raw_fields(f, lineno, true, t, &labels);
    if (f[5] == "unresolved") {
      out.push_back(std::move(t));
      return;
    }
    TraceDerived d;
    d.hop_as = std::move(labels);
    if (f[5] == "complete-ip")
      d.completeness = Completeness::CompleteIP;
    else if (f[5] == "complete-as")
      d.completeness = Completeness::CompleteAS;
    else if (f[5] == "incomplete")
      d.completeness = Completeness::Incomplete;
    else
      throw MalformedLine(lineno, "bad completeness");
    for (auto tok : text::split(f[6], ' ')) {
      if (tok.empty()) continue;
      if (tok == "*") {
        d.as_path.push_back(std::nullopt);
        continue;
      }
      auto as = ASNumber::parse(tok);
      if (!as) throw MalformedLine(lineno, "bad AS path");
      d.as_path.push_back(as);
    }
    for (auto tok : text::split(f[7], ',')) {
      if (tok.empty()) continue;
      auto ix = IXId::parse(tok);
      if (!ix) throw MalformedLine(lineno, "bad IX id");
      t.ix_set.push_back(*ix);
    }
    if (f[8] != "-") d.source_as = ASNumber::parse(f[8]);
    if (f[9] != "-") d.dest_as = ASNumber::parse(f[9]);
    for (auto tok : text::split(f[10], ',')) {
      if (tok == "rd") d.reached_dest = true;
      if (tok == "rda") d.reached_dest_as = true;
      if (tok == "loop") d.loop_repaired = true;
    }
    t.derived = std::move(d);
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace asix

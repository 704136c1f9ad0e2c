#include "asix/ixmap.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix {

std::string_view to_string(PeeringSource s) {
  switch (s) {
    case PeeringSource::File: return "file";
    case PeeringSource::Harvested: return "harvested";
    case PeeringSource::Both: return "both";
  }
  return "?";
}

void IXRegistry::add_exchange(IXId id, std::string name, std::span<const Prefix> prefixes) {
  if (exchanges_.count(id)) throw DataError("duplicate IX id " + id.str());
  for (const Prefix& p : prefixes) {
    if (const auto* hit = prefixes_.find_overlap(p)) {
      if (hit->value != id) throw OverlappingPrefixes(hit->value, id, p.str());
    }
  }
  for (const Prefix& p : prefixes) prefixes_.insert(p, id);
  exchanges_.emplace(id, Exchange{id, std::move(name), {prefixes.begin(), prefixes.end()}});
}

bool IXRegistry::add_peering(ASNumber a, ASNumber b, IXId ix, PeeringSource source) {
  if (a == b) throw DataError("peering of AS" + a.str() + " with itself");
  auto [it, inserted] = peerings_.try_emplace(Peering::make(a, b, ix), source);
  if (!inserted) {
    it->second = static_cast<PeeringSource>(static_cast<std::uint8_t>(it->second) |
                                            static_cast<std::uint8_t>(source));
    return false;
  }
  auto& list = by_pair_[pair_key(a, b)];
  list.insert(std::lower_bound(list.begin(), list.end(), ix), ix);
  return true;
}

std::optional<IXId> IXRegistry::detect_ix(Ipv4 addr) const {
  if (const auto* e = prefixes_.longest_match(addr)) return e->value;
  return std::nullopt;
}

std::vector<IXId> IXRegistry::candidate_ixes(ASNumber a, ASNumber b) const {
  auto it = by_pair_.find(pair_key(a, b));
  if (it == by_pair_.end()) return {};
  return it->second;
}

IXRegistry load_registry(std::istream& prefix_file, std::istream& peering_file) {
  IXRegistry reg;
  text::for_each_line(prefix_file, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 3) throw MalformedLine(lineno, "IX prefix line needs 3 fields");
    auto id = IXId::parse(f[0]);
    if (!id) throw MalformedLine(lineno, "bad IX id");
    std::vector<Prefix> prefixes;
    for (auto tok : text::split(f[2], ',')) {
      auto p = Prefix::parse(text::trim(tok));
      if (!p) throw MalformedLine(lineno, "bad prefix '" + std::string(tok) + "'");
      prefixes.push_back(*p);
    }
    reg.add_exchange(*id, std::string(text::trim(f[1])), prefixes);
  });
  text::for_each_line(peering_file, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 3) throw MalformedLine(lineno, "peering line needs 3 fields");
    auto a = ASNumber::parse(f[0]);
    auto b = ASNumber::parse(f[1]);
    auto ix = IXId::parse(f[2]);
    if (!a || !b || !ix || *a == *b) throw MalformedLine(lineno, "bad peering triple");
    reg.add_peering(*a, *b, *ix, PeeringSource::File);
  });
  return reg;
}

void write_exchanges(std::ostream& out, const IXRegistry& registry) {
  for (const auto& [id, ex] : registry.exchanges()) {
    out << id.str() << '|' << ex.name << '|';
    for (std::size_t i = 0; i < ex.prefixes.size(); ++i) out << (i ? "," : "") << ex.prefixes[i].str();
    out << '\n';
  }
}

void write_peerings(std::ostream& out, const IXRegistry& registry, std::optional<PeeringSource> only) {
  for (const auto& [p, src] : registry.peerings()) {
    if (only && (static_cast<std::uint8_t>(src) & static_cast<std::uint8_t>(*only)) == 0) continue;
    out << p.a.str() << '|' << p.b.str() << '|' << p.ix.str() << '\n';
  }
}

std::set<Peering> harvest_peerings(std::span<const TraceRecord> traces, const IXRegistry& registry,
                                   HarvestStats* stats) {
  HarvestStats local;
  HarvestStats& st = stats ? *stats : local;
  std::set<Peering> out;
  for (const auto& t : traces) {
    if (!t.derived) continue;
    const auto& labels = t.derived->hop_as;
    for (std::size_t i = 0; i < t.hops.size(); ++i) {
      if (!t.hops[i].addr) continue;
      auto ix = registry.detect_ix(*t.hops[i].addr);
      if (!ix) continue;
      ++st.ix_hops;
      bool flanked = i > 0 && i + 1 < t.hops.size() && t.hops[i - 1].ttl + 1 == t.hops[i].ttl &&
                     t.hops[i].ttl + 1 == t.hops[i + 1].ttl && labels[i - 1] && labels[i + 1];
      if (!flanked) {
        ++st.skipped;
        continue;
      }
      if (*labels[i - 1] == *labels[i + 1]) {
        ++st.intra_as;
        continue;
      }
      out.insert(Peering::make(*labels[i - 1], *labels[i + 1], *ix));
    }
  }
  return out;
}

std::size_t merge_harvested(IXRegistry& registry, const std::set<Peering>& harvested) {
  std::size_t added = 0;
  for (const auto& p : harvested)
    if (registry.add_peering(p.a, p.b, p.ix, PeeringSource::Harvested)) ++added;
  return added;
}

}  // namespace asix

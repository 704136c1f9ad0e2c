#include "asix/torsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <thread>

#include "asix/errors.hpp"
#include "asix/text.hpp"

namespace asix {

// -- relays and snapshots ------------------------------------------------------

std::string format_flags(std::uint8_t flags) {
  std::string out;
  auto add = [&](RelayFlag f, const char* name) {
    if (!(flags & f)) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(kGuard, "Guard");
  add(kExit, "Exit");
  add(kRunning, "Running");
  add(kValid, "Valid");
  return out.empty() ? "-" : out;
}

std::optional<std::uint8_t> parse_flags(std::string_view csv) {
  std::uint8_t flags = 0;
  if (text::trim(csv) == "-") return flags;
  for (auto tok : text::split(csv, ',')) {
    tok = text::trim(tok);
    if (tok == "Guard")
      flags |= kGuard;
    else if (tok == "Exit")
      flags |= kExit;
    else if (tok == "Running")
      flags |= kRunning;
    else if (tok == "Valid")
      flags |= kValid;
    else if (!tok.empty())
      return std::nullopt;
  }
  return flags;
}

const Relay* RelaySnapshot::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &relays[it->second];
}

void RelaySnapshot::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < relays.size(); ++i)
    if (!index_.emplace(relays[i].id, i).second)
      throw DataError("duplicate relay " + relays[i].id + " in snapshot " + std::to_string(hour));
}

void TorNetwork::add(RelaySnapshot snapshot) {
  if (!snapshots_.empty() && snapshot.hour <= snapshots_.back().hour)
    throw DataError("snapshot hour " + std::to_string(snapshot.hour) + " repeats or goes backwards");
  snapshot.reindex();
  snapshots_.push_back(std::move(snapshot));
}

const RelaySnapshot& TorNetwork::at(std::int64_t t) const {
  auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t,
                             [](std::int64_t v, const RelaySnapshot& s) { return v < s.hour; });
  if (it == snapshots_.begin()) throw NoSnapshotBefore(t);
  return *std::prev(it);
}

Prefix routed_prefix(Ipv4 address, const PrefixToASTable& table) {
  if (auto p = table.prefix_of(address)) return *p;
  return Prefix::containing(address, 24);
}

TorNetwork load_network(std::istream& in, const PrefixToASTable* table) {
  TorNetwork net;
  std::optional<RelaySnapshot> current;
  std::vector<std::int64_t> closed;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 6) throw MalformedLine(lineno, "snapshot line needs 6 fields");
    auto hour = text::parse_int<std::int64_t>(f[0]);
    auto addr = Ipv4::parse(f[2]);
    auto as = ASNumber::parse(f[3]);
    auto weight = text::parse_double(f[4]);
    auto flags = parse_flags(f[5]);
    if (!hour || !addr || !as || !weight || !flags || f[1].empty())
      throw MalformedLine(lineno, "bad snapshot record");
    if (!std::isfinite(*weight) || *weight < 0) throw MalformedLine(lineno, "bad relay weight");
    if (!current || current->hour != *hour) {
      if (current) net.add(std::move(*current));
      current = RelaySnapshot{};
      current->hour = *hour;
    }
    Prefix prefix = table ? routed_prefix(*addr, *table) : Prefix::containing(*addr, 24);
    current->relays.push_back(Relay{std::string(f[1]), *addr, prefix, *as, *weight, *flags});
  });
  if (current) net.add(std::move(*current));
  if (net.snapshots().empty()) throw EmptyInput("no relay snapshots");
  return net;
}

void write_network(std::ostream& out, const TorNetwork& net) {
  for (const auto& s : net.snapshots())
    for (const auto& r : s.relays)
      out << s.hour << '|' << r.id << '|' << r.address.str() << '|' << r.as.str() << '|'
          << text::format_double(r.weight) << '|' << format_flags(r.flags) << '\n';
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Guard: return "guard";
    case Role::Middle: return "middle";
    case Role::Exit: return "exit";
  }
  return "?";
}

bool eligible(const Relay& relay, Role role) {
  if (!relay.has(kRunning) || !relay.has(kValid) || !(relay.weight > 0)) return false;
  switch (role) {
    case Role::Guard: return relay.has(kGuard);
    case Role::Exit: return relay.has(kExit);
    case Role::Middle: return true;
  }
  return false;
}

std::size_t select_weighted(std::span<const Relay> relays, Role role, Rng& rng,
                            std::span<const std::size_t> exclude) {
  auto usable = [&](std::size_t i) {
    return eligible(relays[i], role) && std::find(exclude.begin(), exclude.end(), i) == exclude.end();
  };
  double total = 0;
  std::size_t last = relays.size();
  for (std::size_t i = 0; i < relays.size(); ++i) {
    if (!usable(i)) continue;
    total += relays[i].weight;
    last = i;
  }
  if (last == relays.size()) throw NoEligibleRelay(std::string(to_string(role)));
  double x = rng.uniform() * total;
  double acc = 0;
  for (std::size_t i = 0; i < relays.size(); ++i) {
    if (!usable(i)) continue;
    acc += relays[i].weight;
    if (x < acc) return i;
  }
  return last;
}

// -- user traces ---------------------------------------------------------------

std::vector<StreamEvent> parse_user_trace(std::istream& in) {
  std::vector<StreamEvent> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 3) throw MalformedLine(lineno, "stream line needs 3 fields");
    auto ts = text::parse_int<std::int64_t>(f[0]);
    auto dst = Ipv4::parse(f[1]);
    auto port = text::parse_int<std::uint16_t>(f[2]);
    if (!ts || !dst || !port) throw MalformedLine(lineno, "bad stream record");
    if (!out.empty() && *ts < out.back().time) throw MalformedLine(lineno, "stream times decrease");
    out.push_back(StreamEvent{*ts, *dst, *port});
  });
  return out;
}

void write_user_trace(std::ostream& out, std::span<const StreamEvent> trace) {
  for (const auto& s : trace) out << s.time << '|' << s.dest.str() << '|' << s.port << '\n';
}

Client make_client(Ipv4 address, const PrefixToASTable& table) {
  return Client{address, routed_prefix(address, table), table.lookup(address)};
}

// -- simulation ----------------------------------------------------------------

namespace {

struct RepState {
  std::vector<std::string> guards;
  std::vector<Circuit> circuits;
};

std::vector<std::size_t> indices_of(const RelaySnapshot& snap, std::span<const std::string> ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids)
    if (const Relay* r = snap.find(id)) out.push_back(static_cast<std::size_t>(r - snap.relays.data()));
  return out;
}

void drop_departed(RepState& st, const RelaySnapshot& snap, std::int64_t now, std::int64_t lifetime) {
  std::erase_if(st.guards, [&](const std::string& id) {
    const Relay* r = snap.find(id);
    return !r || !eligible(*r, Role::Guard);
  });
  std::erase_if(st.circuits, [&](const Circuit& c) {
    if (c.created_at + lifetime <= now) return true;
    for (const auto* id : {&c.guard, &c.middle, &c.exit}) {
      const Relay* r = snap.find(*id);
      if (!r || !r->has(kRunning) || !r->has(kValid)) return true;
    }
    return false;
  });
}

/// Adds one weighted guard not already listed; false when none is left.
bool add_guard(RepState& st, const RelaySnapshot& snap, Rng& rng) {
  auto taken = indices_of(snap, st.guards);
  try {
    std::size_t g = select_weighted(snap.relays, Role::Guard, rng, taken);
    st.guards.push_back(snap.relays[g].id);
    return true;
  } catch (const NoEligibleRelay&) {
    return false;
  }
}

void replenish_guards(RepState& st, const RelaySnapshot& snap, Rng& rng, std::size_t minimum) {
  while (st.guards.size() < minimum && add_guard(st, snap, rng)) {
  }
}

Circuit build_with(const RelaySnapshot& snap, std::size_t guard, std::size_t exit, Rng& rng,
                   std::int64_t now) {
  std::size_t excluded[] = {guard, exit};
  std::size_t middle = select_weighted(snap.relays, Role::Middle, rng, excluded);
  return Circuit{snap.relays[guard].id, snap.relays[middle].id, snap.relays[exit].id, now, std::nullopt};
}

template <class RepFn>
std::vector<StreamOutcome> run_reps(const SimConfig& config, RepFn&& rep_fn) {
  if (config.reps == 0) throw std::invalid_argument("reps must be >= 1");
  std::vector<std::vector<StreamOutcome>> per_rep(config.reps);
  unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.reps)));
  if (threads == 1) {
    for (std::size_t r = 0; r < config.reps; ++r) per_rep[r] = rep_fn(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < config.reps; r += threads) per_rep[r] = rep_fn(r);
      });
    for (auto& t : pool) t.join();
  }
  std::vector<StreamOutcome> out;
  for (auto& v : per_rep)
    for (auto& o : v) out.push_back(std::move(o));
  return out;
}

}  // namespace

std::vector<StreamOutcome> simulate_vanilla(const Client& client, std::span<const StreamEvent> trace,
                                            const TorNetwork& net, const PrefixToASTable&,
                                            const SimConfig& config) {
  return run_reps(config, [&](std::size_t rep) {
    Rng rng(config.seed + rep);
    RepState st;
    std::vector<StreamOutcome> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const StreamEvent& ev = trace[i];
      const RelaySnapshot& snap = net.at(ev.time);
      drop_departed(st, snap, ev.time, config.circuit_lifetime);
      replenish_guards(st, snap, rng, config.guard_min);
      if (st.guards.empty()) throw NoEligibleRelay("guard");

      StreamOutcome o{client.address, rep, i, ev, Verdict::Assigned, std::nullopt, snap.hour, st.guards};
      if (!st.circuits.empty()) {
        o.circuit = st.circuits.back();
      } else {
        auto guard = static_cast<std::size_t>(snap.find(st.guards.front()) - snap.relays.data());
        std::size_t excluded[] = {guard};
        std::size_t exit = select_weighted(snap.relays, Role::Exit, rng, excluded);
        st.circuits.push_back(build_with(snap, guard, exit, rng, ev.time));
        o.circuit = st.circuits.back();
      }
      out.push_back(std::move(o));
    }
    return out;
  });
}

std::vector<StreamOutcome> simulate_path_independent(const Client& client,
                                                     std::span<const StreamEvent> trace,
                                                     const TorNetwork& net,
                                                     const PrefixToASTable& table,
                                                     const AdversaryOracle& oracle,
                                                     const SimConfig& config) {
  if (config.guard_min < config.active_guard_min || config.active_guard_min < 1)
    throw std::invalid_argument("need guard_min >= active_guard_min >= 1");
  return run_reps(config, [&](std::size_t rep) {
    Rng rng(config.seed + rep);
    RepState st;
    std::vector<StreamOutcome> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const StreamEvent& ev = trace[i];
      const RelaySnapshot& snap = net.at(ev.time);
      Prefix dest_prefix = routed_prefix(ev.dest, table);
      drop_departed(st, snap, ev.time, config.circuit_lifetime);
      replenish_guards(st, snap, rng, config.guard_min);

      auto entry_set = [&](const std::string& guard_id) -> std::optional<EntitySet> {
        return oracle.observers(snap.find(guard_id)->prefix, client.prefix, ev.time);
      };
      auto exit_set = [&](const Relay& exit) { return oracle.observers(exit.prefix, dest_prefix, ev.time); };

      // Grow the list until enough guards have path data, or guards run out.
      std::vector<std::optional<EntitySet>> guard_sets;
      for (const auto& g : st.guards) guard_sets.push_back(entry_set(g));
      auto active_count = [&] {
        return static_cast<std::size_t>(std::count_if(guard_sets.begin(), guard_sets.end(),
                                                      [](const auto& s) { return s.has_value(); }));
      };
      while (active_count() < config.active_guard_min && add_guard(st, snap, rng))
        guard_sets.push_back(entry_set(st.guards.back()));

      StreamOutcome o{client.address, rep, i, ev, Verdict::Failed, std::nullopt, snap.hour, {}};
      for (std::size_t g = 0; g < st.guards.size(); ++g)
        if (guard_sets[g]) o.active_guards.push_back(st.guards[g]);

      // Reuse, newest first, re-checking independence for this destination.
      for (auto it = st.circuits.rbegin(); it != st.circuits.rend() && !o.circuit; ++it) {
        auto entry = entry_set(it->guard);
        auto exit = exit_set(*snap.find(it->exit));
        if (entry && exit && disjoint(*entry, *exit)) {
          o.circuit = *it;
          o.circuit->basis = IndependenceBasis{*entry, *exit};
        }
      }

      if (!o.circuit && active_count() >= config.active_guard_min) {
        for (std::size_t g = 0; g < st.guards.size() && !o.circuit; ++g) {
          if (!guard_sets[g]) continue;
          auto guard = static_cast<std::size_t>(snap.find(st.guards[g]) - snap.relays.data());
          std::vector<Relay> candidates;
          std::vector<EntitySet> candidate_sets;
          std::vector<std::size_t> candidate_index;
          for (std::size_t x = 0; x < snap.relays.size(); ++x) {
            if (x == guard || !eligible(snap.relays[x], Role::Exit)) continue;
            auto es = exit_set(snap.relays[x]);
            if (!es || !disjoint(*guard_sets[g], *es)) continue;
            candidates.push_back(snap.relays[x]);
            candidate_sets.push_back(std::move(*es));
            candidate_index.push_back(x);
          }
          if (candidates.empty()) continue;
          std::size_t pick = select_weighted(candidates, Role::Exit, rng);
          Circuit c = build_with(snap, guard, candidate_index[pick], rng, ev.time);
          c.basis = IndependenceBasis{*guard_sets[g], candidate_sets[pick]};
          st.circuits.push_back(c);
          o.circuit = std::move(c);
        }
      }
      o.verdict = o.circuit ? Verdict::Assigned : Verdict::Failed;
      out.push_back(std::move(o));
    }
    return out;
  });
}

// -- outcome log ---------------------------------------------------------------

std::string set_digest(const EntitySet& set) { return text::hex64(text::fnv1a(set.str())); }

void write_outcomes(std::ostream& out, std::span<const StreamOutcome> outcomes) {
  out << "# client|rep|stream|ts|dst|port|verdict|hour|guard|middle|exit|created|entry_digest|exit_digest|guards\n";
  for (const auto& o : outcomes) {
    out << o.client.str() << '|' << o.rep << '|' << o.stream_index << '|' << o.stream.time << '|'
        << o.stream.dest.str() << '|' << o.stream.port << '|'
        << (o.verdict == Verdict::Assigned ? 'A' : 'F') << '|' << o.snapshot_hour << '|';
    if (o.circuit) {
      const Circuit& c = *o.circuit;
      out << c.guard << '|' << c.middle << '|' << c.exit << '|' << c.created_at << '|';
      if (c.basis)
        out << set_digest(c.basis->entry) << '|' << set_digest(c.basis->exit) << '|';
      else
        out << o.entry_digest << '|' << o.exit_digest << '|';
    } else {
      out << "-|-|-|-|-|-|";
    }
    for (std::size_t i = 0; i < o.active_guards.size(); ++i) out << (i ? "," : "") << o.active_guards[i];
    out << '\n';
  }
}

std::vector<StreamOutcome> read_outcomes(std::istream& in) {
  std::vector<StreamOutcome> out;
  text::for_each_line(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 15) throw MalformedLine(lineno, "outcome line needs 15 fields");
    StreamOutcome o;
    auto client = Ipv4::parse(f[0]);
    auto rep = text::parse_int<std::size_t>(f[1]);
    auto idx = text::parse_int<std::size_t>(f[2]);
    auto ts = text::parse_int<std::int64_t>(f[3]);
    auto dst = Ipv4::parse(f[4]);
    auto port = text::parse_int<std::uint16_t>(f[5]);
    auto hour = text::parse_int<std::int64_t>(f[7]);
    if (!client || !rep || !idx || !ts || !dst || !port || !hour || (f[6] != "A" && f[6] != "F"))
      throw MalformedLine(lineno, "bad outcome record");
    o.client = *client;
    o.rep = *rep;
    o.stream_index = *idx;
    o.stream = StreamEvent{*ts, *dst, *port};
    o.verdict = f[6] == "A" ? Verdict::Assigned : Verdict::Failed;
    o.snapshot_hour = *hour;
    if (o.verdict == Verdict::Assigned) {
      auto created = text::parse_int<std::int64_t>(f[11]);
      if (!created) throw MalformedLine(lineno, "bad circuit creation time");
      o.circuit = Circuit{std::string(f[8]), std::string(f[9]), std::string(f[10]), *created, std::nullopt};
      o.entry_digest = std::string(f[12]);
      o.exit_digest = std::string(f[13]);
    }
    for (auto g : text::split(f[14], ','))
      if (!g.empty()) o.active_guards.emplace_back(g);
    out.push_back(std::move(o));
  });
  return out;
}

}  // namespace asix

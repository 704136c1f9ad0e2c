#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asix/errors.hpp"
#include "asix/pipeline.hpp"

namespace {

using asix::RunConfig;

void add_options(CLI::App& app, RunConfig& c, std::vector<std::string>& ribs) {
  app.add_option("--rib", ribs, "RIB file, optionally suffixed with @day")->delimiter(',');
  app.add_option("--graph", c.graph, "Serialized AS graph (overrides inference from the RIB)");
  app.add_option("--prefixes", c.prefixes, "Prefix-to-AS table");
  app.add_option("--ix-prefixes", c.ix_prefixes, "IX prefix file");
  app.add_option("--ix-peerings", c.ix_peerings, "IX peering file");
  app.add_option("--traces", c.traces, "Raw traceroute file");
  app.add_option("--resolved", c.resolved, "Resolved traceroute file");
  app.add_option("--pairs", c.pairs, "AS pairs to infer paths for");
  app.add_option("--relays", c.relays, "Relay snapshot file");
  app.add_option("--user-trace", c.user_trace, "User stream trace");
  app.add_option("--clients", c.clients, "Client addresses");
  app.add_option("--outcomes", c.outcomes, "Outcome log to analyze");
  app.add_option("--out", c.out_dir, "Output directory");

  app.add_option("-k,--k", c.k, "Number of top paths (1-5)");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--reps", c.reps, "Simulation repetitions");
  app.add_option("--circuit-lifetime", c.circuit_lifetime, "Circuit reuse window in seconds");
  app.add_option("--guard-min", c.guard_min, "Minimum guard list size");
  app.add_option("--active-guard-min", c.active_guard_min, "Guards with path data needed to build");
  app.add_option("--mode", c.mode, "Simulation mode")->check(CLI::IsMember({"vanilla", "independent"}));
  app.add_option("--oracle", c.oracle, "Path oracle for independent mode")
      ->check(CLI::IsMember({"inferred", "measured", "conflict"}));
  app.add_option("--threads", c.threads, "Worker threads (0: all cores)");
  app.add_flag("--emit-cdf", c.emit_cdf, "Also write CDF point files");
  app.add_option("--peer-ratio", c.peer_ratio, "Degree ratio under which a link may be peer");

  auto& s = c.synth;
  app.add_option("--tier1", s.topology.tier1, "Synthetic tier-1 ASes");
  app.add_option("--tier2", s.topology.tier2, "Synthetic tier-2 ASes");
  app.add_option("--stubs", s.topology.stubs, "Synthetic stub ASes");
  app.add_option("--vantages", s.vantages, "Synthetic RIB vantage points");
  app.add_option("--exchanges", s.exchanges, "Synthetic exchanges");
  app.add_option("--ix-rate", s.ix_rate, "Share of AS links crossing an exchange");
  app.add_option("--peering-listed", s.peering_listed, "Share of exchange links listed in the peering file");
  app.add_option("--gap-rate", s.gap_rate, "Per-hop non-response probability");
  app.add_option("--batches", s.batches, "Traceroute batches");
  app.add_option("--relay-count", s.relays, "Synthetic relays");
  app.add_option("--hours", s.hours, "Hourly snapshots");
  app.add_option("--churn", s.churn, "Per-hour relay absence probability");
  app.add_option("--client-count", s.clients, "Synthetic clients");
  app.add_option("--destinations", s.destinations, "Synthetic destinations");
  app.add_option("--streams", s.streams, "Synthetic user streams");
  app.add_option("--pair-count", s.pairs, "Synthetic inference pairs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AS/IX path inference, traceroute processing and Tor path simulation"};
  app.set_version_flag("--version", ASIX_VERSION);
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);

  RunConfig config;
  std::vector<std::string> ribs;
  add_options(app, config, ribs);

  struct Sub {
    const char* name;
    const char* help;
    asix::StageReport (*run)(const RunConfig&);
  };
  const Sub subs[] = {
      {"buildgraph", "Infer AS relationships from RIB files", asix::cmd_buildgraph},
      {"infer", "Top-k AS paths for AS pairs", asix::cmd_infer},
      {"tracepipe", "Parse, stitch and resolve traceroutes", asix::cmd_tracepipe},
      {"simulate", "Simulate Tor path selection", asix::cmd_simulate},
      {"analyze", "Compromise and accuracy tables", asix::cmd_analyze},
      {"synth", "Generate a synthetic corpus", asix::cmd_synth},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return asix::UsageError::kExitCode;
  }

  try {
    for (const auto& r : ribs) config.ribs.push_back(asix::parse_rib_source(r));
    for (const auto& s : subs) {
      if (!app.got_subcommand(s.name)) continue;
      asix::print_report(std::cout, s.run(config));
    }
  } catch (const asix::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return asix::UsageError::kExitCode;
  } catch (const asix::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return asix::DataError::kExitCode;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return asix::DataError::kExitCode;
  }
  return 0;
}

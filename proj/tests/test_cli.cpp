#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = ASIX_FIXTURES;

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("asix_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run asix(const std::string& args, const fs::path& work) {
  const fs::path out = work / "stdout.txt", err = work / "stderr.txt";
  const std::string cmd = std::string(ASIX_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return Run{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string fx(const char* name) { return (kFixtures / name).string(); }

std::string common_inputs() {
  return " --rib " + fx("rib.txt") + " --prefixes " + fx("prefixes.txt") + " --ix-prefixes " +
         fx("ix_prefixes.txt") + " --ix-peerings " + fx("ix_peerings.txt");
}

int max_rank(const fs::path& inferred) {
  std::istringstream in(slurp(inferred));
  std::string line;
  int best = 0;
  while (std::getline(in, line)) {
    const auto second = line.find('|', line.find('|') + 1);
    best = std::max(best, std::stoi(line.substr(second + 1)));
  }
  return best;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

/// Full pipeline into `dir`; returns the last exit code that was non-zero, or 0.
int pipeline(const fs::path& dir, const std::string& extra = "") {
  const std::string in = common_inputs();
  const std::string d = dir.string();
  const std::string steps[] = {
      "buildgraph --rib " + fx("rib.txt") + " --out " + d + "/graph" + extra,
      "infer --rib " + fx("rib.txt") + " --graph " + d + "/graph/graph.txt --pairs " + fx("pairs.txt") +
          " -k 3 --out " + d + "/infer" + extra,
      "tracepipe --traces " + fx("traces.txt") + in + " --out " + d + "/trace" + extra,
      "simulate" + in + " --relays " + fx("relays.txt") + " --user-trace " + fx("user_trace.txt") +
          " --clients " + fx("clients.txt") + " --mode independent --reps 3 --seed 5 --out " + d + "/sim" + extra,
      "analyze" + in + " --relays " + fx("relays.txt") + " --resolved " + d + "/trace/resolved.txt --outcomes " + d +
          "/sim/outcomes.txt -k 3 --emit-cdf --out " + d + "/analysis" + extra,
  };
  for (const auto& s : steps) {
    Run r = asix(s, dir);
    if (r.code != 0) {
      MESSAGE(s << "\n" << r.err);
      return r.code;
    }
  }
  return 0;
}

}  // namespace

TEST_CASE("the pipeline runs on the shipped fixtures") {
  auto dir = scratch("pipeline");
  REQUIRE(pipeline(dir) == 0);
  for (const char* f : {"graph/graph.txt", "graph/buildgraph.manifest", "graph/buildgraph_summary.txt",
                        "infer/inferred.txt", "trace/resolved.txt", "trace/ix_peerings_harvested.txt",
                        "sim/outcomes.txt", "analysis/compromise_overall.csv", "analysis/agreement_client_prefix.csv",
                        "analysis/independence_host.csv", "analysis/independence_summary_overall.csv",
                        "analysis/accuracy.csv", "analysis/missing_cdf_k1_ASIX.csv"})
    CHECK_MESSAGE(fs::exists(dir / f), f);

  const auto compromise = slurp(dir / "analysis/compromise_overall.csv");
  CHECK(compromise.rfind("overall,method,k,direction,adversary,streams_with_data,compromised,rate\n", 0) == 0);
  CHECK(compromise.find("all,inferred,3,") != std::string::npos);
  CHECK(compromise.find(",measured,") != std::string::npos);

  const int ranks = max_rank(dir / "infer/inferred.txt");
  CHECK(ranks >= 1);
  CHECK(ranks <= 3);

  fs::remove_all(dir);
}

TEST_CASE("reruns produce byte-identical output trees") {
  auto a = scratch("rerun_a"), b = scratch("rerun_b");
  REQUIRE(pipeline(a) == 0);
  REQUIRE(pipeline(b, " --threads 3") == 0);
  for (const char* stage : {"graph", "infer", "trace", "sim", "analysis"}) {
    auto ta = tree(a / stage), tb = tree(b / stage);
    CHECK(ta.size() == tb.size());
    for (const auto& [name, bytes] : ta) CHECK_MESSAGE(tb[name] == bytes, stage << "/" << name);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("exit codes") {
  auto dir = scratch("codes");
  CHECK(asix("", dir).code == 1);
  CHECK(asix("frobnicate", dir).code == 1);
  CHECK(asix("infer --rib " + fx("rib.txt") + " --out " + dir.string(), dir).code == 1);
  CHECK(asix("buildgraph --out " + dir.string(), dir).code == 1);
  CHECK(asix("buildgraph --rib /nonexistent/rib.txt --out " + dir.string(), dir).code == 1);
  CHECK(asix("infer -k 9 --rib " + fx("rib.txt") + " --pairs " + fx("pairs.txt") + " --out " + dir.string(), dir)
            .code == 1);
  CHECK(asix("simulate --mode sideways --out " + dir.string(), dir).code == 1);

  std::ofstream(dir / "empty.txt").close();
  Run empty = asix("analyze --outcomes " + (dir / "empty.txt").string() + common_inputs() + " --relays " +
                       fx("relays.txt") + " --out " + (dir / "a").string(),
                   dir);
  CHECK(empty.code == 2);
  CHECK(empty.err.find("data error") != std::string::npos);

  std::ofstream(dir / "loops.txt") << "1|10.0.0.0/8|1 2 1\n";
  CHECK(asix("buildgraph --rib " + (dir / "loops.txt").string() + " --out " + (dir / "g").string(), dir).code == 2);

  Run version = asix("--version", dir);
  CHECK(version.code == 0);
  CHECK(!version.out.empty());
  fs::remove_all(dir);
}

TEST_CASE("config file supplies defaults and flags override it") {
  auto dir = scratch("config");
  const std::string inputs = " --rib " + fx("rib.txt") + " --pairs " + fx("pairs.txt");
  const std::string with_config = "infer --config " + fx("run.ini") + inputs;
  REQUIRE(asix(with_config + " --out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(asix("infer -k 3" + inputs + " --seed 11 --reps 2 --mode independent --out " + (dir / "b").string(), dir)
              .code == 0);
  REQUIRE(asix(with_config + " -k 1 --out " + (dir / "c").string(), dir).code == 0);
  CHECK(slurp(dir / "a/inferred.txt") == slurp(dir / "b/inferred.txt"));
  CHECK(slurp(dir / "a/infer.manifest") == slurp(dir / "b/infer.manifest"));
  CHECK(max_rank(dir / "a/inferred.txt") == 3);
  CHECK(max_rank(dir / "c/inferred.txt") == 1);
  fs::remove_all(dir);
}

#include <doctest.h>

#include <random>
#include <sstream>

#include "asix/errors.hpp"
#include "asix/ixmap.hpp"
#include "asix/tracepipe.hpp"
#include "support.hpp"

using namespace asix;
using testing::as;
using testing::ip;
using testing::pfx;

namespace {

IXRegistry one_exchange(const char* peerings) {
  std::istringstream px("1|Example IX|196.0.2.0/24\n");
  std::istringstream pe(peerings);
  return load_registry(px, pe);
}

TraceRecord resolved(const char* line, const PrefixToASTable& table, const IXRegistry& reg) {
  return resolve_as_path(parse_trace_line(line), table, &reg);
}

}  // namespace

TEST_CASE("registry load deduplicates triples") {
  auto reg = one_exchange("64500|64501|1\n");
  CHECK(reg.exchange_count() == 1);
  CHECK(reg.peering_count() == 1);
  auto twice = one_exchange("64500|64501|1\n64501|64500|1\n64500|64501|1\n");
  CHECK(twice.peering_count() == 1);
}

TEST_CASE("overlapping exchange blocks are rejected") {
  std::istringstream px("1|A|196.0.2.0/25\n2|B|196.0.2.0/25\n");
  std::istringstream pe("");
  CHECK_THROWS_AS(load_registry(px, pe), OverlappingPrefixes);
  std::istringstream nested("1|A|196.0.2.0/24\n2|B|196.0.2.128/25\n");
  std::istringstream pe2("");
  CHECK_THROWS_AS(load_registry(nested, pe2), OverlappingPrefixes);
  std::istringstream bad("1|A|196.0.2.0/24\nnot a line\n");
  std::istringstream pe3("");
  CHECK_THROWS_AS(load_registry(bad, pe3), MalformedLine);
}

TEST_CASE("detection by covering block") {
  auto reg = one_exchange("");
  CHECK(reg.detect_ix(ip("196.0.2.7")) == IXId(1));
  CHECK_FALSE(reg.detect_ix(ip("203.0.113.9")));
}

TEST_CASE("candidate exchanges are symmetric and exact") {
  IXRegistry reg;
  reg.add_peering(as(64500), as(64501), IXId(1));
  reg.add_peering(as(64500), as(64501), IXId(2));
  reg.add_peering(as(64500), as(64502), IXId(3));
  CHECK(reg.candidate_ixes(as(64501), as(64500)) == std::vector<IXId>{IXId(1), IXId(2)});
  CHECK(reg.candidate_ixes(as(64500), as(64501)) == std::vector<IXId>{IXId(1), IXId(2)});
  CHECK(reg.candidate_ixes(as(64500), as(64503)).empty());
  CHECK(reg.candidate_ixes(as(64502), as(64501)).empty());
}

TEST_CASE("detection agrees with a linear scan") {
  std::mt19937 rng(9);
  IXRegistry reg;
  std::vector<std::pair<Prefix, IXId>> flat;
  for (std::uint32_t id = 1; flat.size() < 40; ++id) {
    const auto len = static_cast<std::uint8_t>(16 + rng() % 9);
    const Prefix p = Prefix::containing(Ipv4{0xC4000000u | (static_cast<std::uint32_t>(rng()) & 0x00ffffffu)}, len);
    bool clash = false;
    for (const auto& e : flat) clash = clash || e.first.overlaps(p);
    if (clash) continue;
    const std::vector<Prefix> blocks{p};
    reg.add_exchange(IXId(id), "ix", blocks);
    flat.emplace_back(p, IXId(id));
  }
  for (int q = 0; q < 5000; ++q) {
    const Ipv4 a{0xC4000000u | (static_cast<std::uint32_t>(rng()) & 0x00ffffffu)};
    std::optional<IXId> want;
    for (const auto& e : flat)
      if (e.first.contains(a)) want = e.second;
    CHECK(reg.detect_ix(a) == want);
  }
}

TEST_CASE("harvest emits cross-AS triples") {
  auto table = testing::numbered_table({1, 2});
  auto reg = one_exchange("");

  auto t = resolved("10.1.0.5|10.2.0.9|b|0|1:10.1.0.1,2:196.0.2.7,3:10.2.0.1,4:10.2.0.9", table, reg);
  const std::vector<TraceRecord> one{t};
  HarvestStats st;
  auto got = harvest_peerings(one, reg, &st);
  CHECK(got == std::set<Peering>{Peering::make(as(1), as(2), IXId(1))});
  CHECK(st.ix_hops == 1);

  auto intra = resolved("10.1.0.5|10.1.0.9|b|0|1:10.1.0.1,2:196.0.2.7,3:10.1.0.2,4:10.1.0.9", table, reg);
  const std::vector<TraceRecord> same{intra};
  HarvestStats st2;
  CHECK(harvest_peerings(same, reg, &st2).empty());
  CHECK(st2.intra_as == 1);

  auto gap = resolved("10.1.0.5|10.2.0.9|b|0|1:10.1.0.1,2:*,3:196.0.2.7,4:10.2.0.1,5:10.2.0.9", table, reg);
  const std::vector<TraceRecord> gapped{gap};
  HarvestStats st3;
  CHECK(harvest_peerings(gapped, reg, &st3).empty());
  CHECK(st3.skipped == 1);
}

TEST_CASE("harvest is idempotent and tags provenance") {
  auto table = testing::numbered_table({1, 2, 3});
  auto reg = one_exchange("1|2|1\n");
  std::vector<TraceRecord> traces{
      resolved("10.1.0.5|10.2.0.9|b|0|1:10.1.0.1,2:196.0.2.7,3:10.2.0.1,4:10.2.0.9", table, reg),
      resolved("10.3.0.5|10.2.0.9|b|0|1:10.3.0.1,2:196.0.2.8,3:10.2.0.1,4:10.2.0.9", table, reg)};
  auto first = harvest_peerings(traces, reg);
  CHECK(first.size() == 2);
  for (const auto& p : first) {
    CHECK(p.ix == IXId(1));
    CHECK(p.a < p.b);
  }
  CHECK(merge_harvested(reg, first) == 1);
  CHECK(harvest_peerings(traces, reg) == first);
  CHECK(merge_harvested(reg, first) == 0);
  CHECK(reg.peerings().at(Peering::make(as(1), as(2), IXId(1))) == PeeringSource::Both);
  CHECK(reg.peerings().at(Peering::make(as(2), as(3), IXId(1))) == PeeringSource::Harvested);

  std::ostringstream harvested, all;
  write_peerings(harvested, reg, PeeringSource::Harvested);
  write_peerings(all, reg);
  CHECK(harvested.str() == "1|2|1\n2|3|1\n");
  CHECK(all.str() == harvested.str());
  std::ostringstream file_only;
  write_peerings(file_only, reg, PeeringSource::File);
  CHECK(file_only.str() == "1|2|1\n");
}

TEST_CASE("registry files round-trip") {
  std::istringstream px("2|Second|198.18.0.0/24,198.18.2.0/24\n1|First|196.0.2.0/24\n");
  std::istringstream pe("64501|64500|1\n64500|64502|2\n");
  auto reg = load_registry(px, pe);
  std::ostringstream ex, pr;
  write_exchanges(ex, reg);
  write_peerings(pr, reg);
  CHECK(ex.str() == "1|First|196.0.2.0/24\n2|Second|198.18.0.0/24,198.18.2.0/24\n");
  CHECK(pr.str() == "64500|64501|1\n64500|64502|2\n");
  std::istringstream ex2(ex.str()), pr2(pr.str());
  auto again = load_registry(ex2, pr2);
  CHECK(again.peerings() == reg.peerings());
  CHECK(again.detect_ix(ip("198.18.2.77")) == IXId(2));
  CHECK_FALSE(again.detect_ix(ip("198.18.1.1")));
}

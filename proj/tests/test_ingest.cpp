#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "peninsula/ingest.hpp"
#include "support.hpp"

using namespace peninsula;

namespace {
std::string obs(std::int64_t t, const char* vp, const char* block, const char* state) {
  std::ostringstream s;
  s << R"({"t":)" << t << R"(,"vp":")" << vp << R"(","block":")" << block << R"(","state":")" << state << "\"}\n";
  return s.str();
}
}  // namespace

TEST(ReadObservations, BinsIntoRoundsFromEarliestTimestamp) {
  std::istringstream in(obs(1000, "W", "10.0.0.0", "up") + obs(1700, "C", "10.0.0.0", "down") +
                        obs(2400, "W", "10.0.1.0", "down"));
  auto r = read_observations(in);
  EXPECT_EQ(r.rounds.epoch, 1000);
  EXPECT_EQ(r.matrix.rounds(), 3u);
  EXPECT_EQ(r.matrix.vp_count(), 2u);
  EXPECT_EQ(r.matrix.vps()[0].id, "C");
  EXPECT_EQ(r.matrix.state(0, 0, 1), ReachState::Up);
  EXPECT_EQ(r.matrix.state(0, 1, 0), ReachState::Down);
  EXPECT_EQ(r.matrix.state(1, 2, 1), ReachState::Down);
  EXPECT_EQ(r.matrix.state(1, 0, 1), ReachState::Unknown);
  EXPECT_EQ(r.records, 3u);
}

TEST(ReadObservations, LatestTimestampWinsAndTiesGoToLaterLine) {
  std::istringstream in(obs(1010, "W", "10.0.0.0", "down") + obs(1000, "W", "10.0.0.0", "up") +
                        obs(2000, "W", "10.0.0.0", "up") + obs(2000, "W", "10.0.0.0", "down"));
  auto r = read_observations(in, ObservationOptions{1000, 660, {}, 0});
  EXPECT_EQ(r.matrix.state(0, 0, 0), ReachState::Down);
  EXPECT_EQ(r.matrix.state(0, 1, 0), ReachState::Down);
  EXPECT_EQ(r.superseded, 2u);
}

TEST(ReadObservations, ErrorsCarryLineNumbers) {
  std::istringstream in(obs(1000, "W", "10.0.0.0", "up") + "\n" + R"({"t":1001,"vp":"W","block":"10.0.0.1","state":"up"})");
  try {
    read_observations(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream bad_state(obs(1000, "W", "10.0.0.0", "maybe"));
  EXPECT_THROW(read_observations(bad_state), ParseError);
  std::istringstream not_json("{t: 1}\n");
  EXPECT_THROW(read_observations(not_json), ParseError);
  std::istringstream missing(R"({"t":1,"vp":"W","block":"10.0.0.0"})");
  EXPECT_THROW(read_observations(missing), ParseError);
}

TEST(ReadObservations, EpochAndDeclaredVpChecks) {
  std::istringstream early(obs(900, "W", "10.0.0.0", "up"));
  EXPECT_THROW(read_observations(early, ObservationOptions{1000, 660, {}, 0}), InputError);
  std::istringstream undeclared(obs(1000, "X", "10.0.0.0", "up"));
  ObservationOptions o;
  o.declared_vps = {{"W", "US"}};
  EXPECT_THROW(read_observations(undeclared, o), InputError);
  std::istringstream declared(obs(1000, "W", "10.0.0.0", "up"));
  o.min_rounds = 5;
  auto r = read_observations(declared, o);
  EXPECT_EQ(r.matrix.rounds(), 5u);
  EXPECT_EQ(r.matrix.vps()[0].country, "US");
}

TEST(ReadObservations, WriteThenReadIsLossless) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = support::random_matrix(rng, 4, 6, 9, 0.0);
    RoundConfig rc{5000, 660};
    std::stringstream buf;
    write_observations(buf, m, rc);
    ObservationOptions o;
    o.epoch = rc.epoch;
    o.declared_vps = m.vps();
    o.min_rounds = m.rounds();
    auto back = read_observations(buf, o);
    EXPECT_EQ(back.matrix, m);
  }
}

TEST(ReadTraceroutes, HopFormsAndOutcomes) {
  std::istringstream in(
      R"({"t":5,"vp":"W","target":"193.0.1.1","hops":["10.0.0.1",null,"193.0.1.1"]})"
      "\n"
      R"({"t":6,"vp":"C","target":"193.0.1.1","hops":[{"ttl":1,"addr":"10.0.0.1"},{"ttl":3}],"unreachable":true})"
      "\n");
  auto r = read_traceroutes(in);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].outcome, TraceOutcome::Success);
  EXPECT_EQ(r.records[0].hops[1].index, 2u);
  EXPECT_FALSE(r.records[0].hops[1].addr);
  EXPECT_EQ(r.records[1].outcome, TraceOutcome::Unreachable);
  EXPECT_EQ(r.records[1].hops[1].index, 3u);
}

TEST(ReadTraceroutes, RejectsNonMonotoneAndMismatchedOutcome) {
  std::istringstream in(
      R"({"t":5,"vp":"W","target":"193.0.1.1","hops":[{"ttl":2,"addr":"10.0.0.1"},{"ttl":2,"addr":"10.0.0.2"}]})"
      "\n"
      R"({"t":5,"vp":"W","target":"193.0.1.1","hops":["10.0.0.1"],"outcome":"success"})"
      "\n"
      R"({"t":5,"vp":"W","target":"193.0.1.1","hops":["10.0.0.1"],"outcome":"gap"})"
      "\n");
  auto r = read_traceroutes(in);
  EXPECT_EQ(r.rejected_nonmonotone, 1u);
  EXPECT_EQ(r.rejected_outcome_mismatch, 1u);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].outcome, TraceOutcome::Gap);
}

TEST(ReadTraceroutes, WriteThenRead) {
  TracerouteRecord t;
  t.vp = "W";
  t.target = *Ipv4Addr::parse("193.0.1.1");
  t.t = 77;
  t.hops = {Hop{1, Ipv4Addr::parse("10.0.0.1")}, Hop{2, std::nullopt}};
  t.unreachable_marker = true;
  t.outcome = classify_trace_outcome(t.target, t.hops, true);
  std::stringstream buf;
  write_traceroutes(buf, {t});
  auto r = read_traceroutes(buf);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0], t);
}

TEST(ReadTraceroutes, ActiveTargetFilter) {
  TracerouteRecord a, b;
  a.target = *Ipv4Addr::parse("193.0.1.1");
  b.target = *Ipv4Addr::parse("193.0.2.1");
  auto kept = filter_active_targets({a, b}, {*BlockId::parse("193.0.1.0")});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].target, a.target);
}

TEST(PrefixFile, CountsConflictingDuplicates) {
  std::istringstream in("prefix,asn\n193.0.0.0/22,21021\n193.0.0.0/22,21021\n193.0.0.0/22,5\n10.0.0.0/8,1\n");
  auto r = read_prefix_table(in);
  EXPECT_EQ(r.conflicting_duplicates, 1u);
  EXPECT_EQ(r.table.size(), 2u);
  std::stringstream out;
  write_prefix_table(out, r.table);
  EXPECT_EQ(out.str(), "prefix,asn\n10.0.0.0/8,1\n193.0.0.0/22,5\n");
  std::istringstream host_bits("prefix,asn\n193.0.1.0/22,1\n");
  EXPECT_THROW(read_prefix_table(host_bits), ParseError);
  std::istringstream wrong_header("net,asn\n");
  EXPECT_THROW(read_prefix_table(wrong_header), ParseError);
}

TEST(LabelFiles, CountriesIndustriesAndBlockLists) {
  std::istringstream vps("vp,country\nW,US\nX,\nY,unknown\n");
  auto c = read_vp_countries(vps);
  EXPECT_EQ(c["W"], "US");
  EXPECT_EQ(c["X"], "??");
  EXPECT_EQ(c["Y"], "??");
  std::istringstream bad("vp,country\nW,usa\n");
  EXPECT_THROW(read_vp_countries(bad), ParseError);
  std::istringstream blocks("block,country\n193.0.0.0,PL\n");
  EXPECT_EQ(read_block_countries(blocks).at(*BlockId::parse("193.0.0.0")), "PL");
  std::istringstream ind("asn,industry\n21021,ISP\n");
  EXPECT_EQ(read_asn_industries(ind).at(21021), "ISP");
  std::istringstream list("block\n10.0.0.0\n10.0.1.0\n");
  EXPECT_EQ(read_block_list(list).size(), 2u);
  auto labeled = with_countries(support::make_vps(2), {{"v1", "JP"}});
  EXPECT_EQ(labeled[1].country, "JP");
  EXPECT_THROW(with_countries(support::make_vps(2), {{"zz", "JP"}}), InputError);
}

TEST(TargetProbes, ParsesAndValidates) {
  std::istringstream in(R"({"t":1,"vp":"W","target":"a","ok":true})"
                        "\n"
                        R"({"t":2,"vp":"W","target":"b","ok":false})"
                        "\n");
  auto p = read_target_probes(in);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_TRUE(p[0].ok);
  EXPECT_EQ(p[1].target, "b");
  std::istringstream bad(R"({"t":1,"vp":"W","target":"a","ok":1})");
  EXPECT_THROW(read_target_probes(bad), ParseError);
}

TEST(ReliabilityFilter, UptimeAndFlakiness) {
  using support::matrix_from;
  // block 0: stable. block 1: v1 up only 1 of 2 rounds. block 2: never seen by v1.
  auto m = matrix_from(support::make_vps(2), {{"UU", "UU"}, {"UU", "UD"}, {"U?", "U?"}});
  auto r = filter_reliable_blocks(m);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0], support::block(0));
  ASSERT_EQ(r.dropped.size(), 2u);
  EXPECT_EQ(r.dropped[0].second, DropReason::LowUptime);
  EXPECT_EQ(r.dropped[1].second, DropReason::LowUptime);
  EXPECT_EQ(to_string(DropReason::Flaky), "flaky");
}

TEST(ReliabilityFilter, TooManyDistinctDisagreementsIsFlaky) {
  // 4 VPs, 40 rounds, mostly up, with three distinct single-VP-down up-sets.
  std::vector<std::string> rounds(40, "UUUU");
  rounds[3] = "DUUU";
  rounds[9] = "UDUU";
  rounds[15] = "UUDU";
  auto m = support::matrix_from(support::make_vps(4), {rounds});
  ReliabilityFilterConfig cfg;
  cfg.max_inconsistent_combinations = 2;
  auto r = filter_reliable_blocks(m, cfg);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].second, DropReason::Flaky);
  cfg.max_inconsistent_combinations = 3;
  EXPECT_EQ(filter_reliable_blocks(m, cfg).kept.size(), 1u);
}

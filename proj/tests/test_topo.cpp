#include <gtest/gtest.h>

#include "peninsula/topo.hpp"
#include "support.hpp"

using namespace peninsula;

namespace {

Ipv4Addr ip(const char* s) { return *Ipv4Addr::parse(s); }
Prefix pfx(const char* s) { return *Prefix::parse(s); }

PrefixTable table() {
  PrefixTable t;
  t.insert(pfx("193.0.0.0/22"), 21021);
  t.insert(pfx("193.0.8.0/22"), 21021);
  t.insert(pfx("100.64.0.0/16"), 174);
  return t;
}

TracerouteRecord failed(const char* target, std::vector<const char*> hops, std::int64_t t = 0) {
  TracerouteRecord tr;
  tr.target = ip(target);
  tr.t = t;
  std::uint32_t i = 1;
  for (auto h : hops) tr.hops.push_back(Hop{i++, h ? std::optional(ip(h)) : std::nullopt});
  tr.unreachable_marker = true;
  tr.outcome = TraceOutcome::Unreachable;
  return tr;
}

Event event(const char* blk, EventKind k, std::uint32_t s, std::uint32_t e, VpSet up = {}) {
  Event ev;
  ev.block = *BlockId::parse(blk);
  ev.kind = k;
  ev.start_round = s;
  ev.end_round = e;
  ev.up_signature = std::move(up);
  ev.duration_s = std::int64_t{e - s + 1} * 660;
  return ev;
}

}  // namespace

TEST(Halt, AtTargetAsAndPrefix) {
  auto t = table();
  auto h = halt_classify(failed("193.0.1.1", {"100.64.0.1", "193.0.2.1"}), t);
  EXPECT_TRUE(h.at_target_as);
  EXPECT_TRUE(h.at_target_prefix);
  auto other_prefix = halt_classify(failed("193.0.1.1", {"100.64.0.1", "193.0.9.1"}), t);
  EXPECT_TRUE(other_prefix.at_target_as);
  EXPECT_FALSE(other_prefix.at_target_prefix);
}

TEST(Halt, BeforeTargetAs) {
  auto t = table();
  auto h = halt_classify(failed("193.0.1.1", {"100.64.0.1", nullptr}), t);
  EXPECT_FALSE(h.at_target_as);
  EXPECT_EQ(h.halting_as, 174u);
  EXPECT_EQ(*h.halting_addr, ip("100.64.0.1"));
}

TEST(Halt, UnresolvedIsBefore) {
  auto t = table();
  EXPECT_FALSE(halt_classify(failed("193.0.1.1", {nullptr, nullptr}), t).at_target_as);
  EXPECT_FALSE(halt_classify(failed("8.8.8.8", {"8.8.8.1"}), t).at_target_as);
}

TEST(Halt, SuccessCannotBeLocalized) {
  auto tr = failed("193.0.1.1", {"193.0.1.1"});
  tr.outcome = TraceOutcome::Success;
  EXPECT_THROW(halt_classify(tr, table()), InputError);
}

TEST(Halt, TableRowsBySitesUp) {
  RoundConfig rc{0, 660};
  std::vector<Event> events{event("193.0.1.0", EventKind::Peninsula, 0, 4, {0}),
                            event("193.0.2.0", EventKind::Outage, 0, 4),
                            event("193.0.3.0", EventKind::Island, 0, 4)};
  std::vector<TracerouteRecord> traces{failed("193.0.1.1", {"193.0.0.1"}, 100),
                                       failed("193.0.1.1", {"100.64.0.1"}, 200),
                                       failed("193.0.2.1", {"100.64.0.1"}, 300),
                                       failed("193.0.3.1", {"100.64.0.1"}, 300),
                                       failed("193.0.1.1", {"100.64.0.1"}, 5 * 660)};
  auto ht = halt_table(traces, events, table(), rc, 3);
  ASSERT_EQ(ht.rows.size(), 4u);
  EXPECT_EQ(ht.rows[1], (HaltRow{1, 1, 1, 1}));
  EXPECT_EQ(ht.rows[0], (HaltRow{0, 1, 0, 1}));
  EXPECT_EQ(ht.unjoined, 2u);
  EXPECT_EQ(ht.peninsula_summary(), ht.rows[1]);
}

TEST(PrefixFractions, MatchesAcrossBlocks) {
  RoundConfig rc{0, 660};
  std::vector<Event> events{event("193.0.0.0", EventKind::Peninsula, 0, 9, {0}),
                            event("193.0.1.0", EventKind::Peninsula, 0, 9, {0}),
                            event("193.0.2.0", EventKind::Peninsula, 0, 9, {1}),
                            event("193.0.8.0", EventKind::Peninsula, 0, 9, {0})};
  std::vector<BlockId> measurable;
  for (const char* b : {"193.0.0.0", "193.0.1.0", "193.0.2.0", "193.0.3.0"}) measurable.push_back(*BlockId::parse(b));
  auto f = peninsula_prefix_fractions(events, table(), measurable, rc);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].prefix, pfx("193.0.0.0/22"));
  EXPECT_EQ(f[0].blocks_in_peninsula, 2u);
  EXPECT_EQ(f[0].measurable_blocks, 4u);
  EXPECT_DOUBLE_EQ(f[0].fraction, 0.5);
  EXPECT_EQ(f[0].block_seconds, 2 * 6600);
  EXPECT_THROW(peninsula_prefix_fractions(events, table(), measurable, rc, 0), InputError);
}

TEST(Heatmap, BinsAndWeights) {
  auto bins = HeatmapBins::standard();
  EXPECT_EQ(prefix_len_bin(bins, 4), 0u);
  EXPECT_EQ(prefix_len_bin(bins, 22), 14u);
  EXPECT_EQ(fraction_bin(bins, 0.5), 4u);
  EXPECT_EQ(fraction_bin(bins, 0.51), 5u);
  EXPECT_EQ(fraction_bin(bins, 1.0), 9u);
  std::vector<PrefixFraction> f(2);
  f[0].prefix = pfx("193.0.0.0/22");
  f[0].fraction = 0.5;
  f[0].block_seconds = 300;
  f[1].prefix = pfx("20.0.0.0/16");
  f[1].fraction = 1.0;
  f[1].block_seconds = 100;
  auto count = fraction_heatmap(f, bins, HeatmapWeight::Count);
  EXPECT_DOUBLE_EQ(count.total(), 2.0);
  auto dur = fraction_heatmap(f, bins, HeatmapWeight::Duration);
  EXPECT_DOUBLE_EQ(dur.total(), 1.0);
  EXPECT_DOUBLE_EQ(dur.cells[14][4], 0.75);
  HeatmapBins bad = bins;
  bad.fraction_edges = {0.5, 0.1};
  EXPECT_THROW(fraction_heatmap(f, bad, HeatmapWeight::Count), InputError);
}

TEST(Industry, JoinsBlocksToLabels) {
  std::vector<BlockId> blocks{*BlockId::parse("193.0.0.0"), *BlockId::parse("193.0.1.0"), *BlockId::parse("193.0.8.0"),
                              *BlockId::parse("100.64.0.0"), *BlockId::parse("8.8.8.0")};
  auto t = industry_table(blocks, table(), {{21021, "isp"}});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t["isp"].ases, 1u);
  EXPECT_EQ(t["isp"].blocks, 3u);
  EXPECT_EQ(t["unknown"].blocks, 1u);
}

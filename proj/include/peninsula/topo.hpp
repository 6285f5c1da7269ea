#pragma once

// Where failed traceroutes stop relative to the target's AS and routed
// prefix, and how much of a routed prefix a peninsula covers.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "peninsula/error.hpp"
#include "peninsula/model.hpp"
#include "peninsula/prefix_table.hpp"

namespace peninsula {

struct HaltClass {
  bool at_target_as = false;
  bool at_target_prefix = false;
  std::optional<Ipv4Addr> halting_addr;
  std::optional<std::uint32_t> halting_as;
  std::optional<std::uint32_t> target_as;
  std::optional<Prefix> halting_prefix;
  std::optional<Prefix> target_prefix;
};

// Only Unreachable and Loop traces can be localized. The halting point is the
// last responding hop; a trace with no responding hop, or whose target or
// halt does not resolve, is classified as "before" on the affected side.
inline HaltClass halt_classify(const TracerouteRecord& trace, const PrefixTable& table) {
  if (!trace.failed()) {
    throw InputError(std::string("cannot localize a ") + std::string(to_string(trace.outcome)) + " traceroute");
  }
  HaltClass h;
  if (auto target = table.lookup(trace.target)) {
    h.target_as = target->asn;
    h.target_prefix = target->prefix;
  }
  h.halting_addr = trace.last_responding();
  if (h.halting_addr) {
    if (auto halt = table.lookup(*h.halting_addr)) {
      h.halting_as = halt->asn;
      h.halting_prefix = halt->prefix;
    }
  }
  h.at_target_as = h.halting_as && h.target_as && *h.halting_as == *h.target_as;
  h.at_target_prefix = h.halting_prefix && h.target_prefix && *h.halting_prefix == *h.target_prefix;
  return h;
}

struct HaltRow {
  std::uint64_t at_as = 0;
  std::uint64_t before_as = 0;
  std::uint64_t at_prefix = 0;
  std::uint64_t before_prefix = 0;

  std::uint64_t traces() const { return at_as + before_as; }

  HaltRow& operator+=(const HaltRow& o) {
    at_as += o.at_as;
    before_as += o.before_as;
    at_prefix += o.at_prefix;
    before_prefix += o.before_prefix;
    return *this;
  }
  friend bool operator==(const HaltRow&, const HaltRow&) = default;
};

// Rows indexed by the number of VPs that saw the block up during the event
// the trace falls in (0 = outage, vp_count = all up, in between = peninsula).
struct HaltTable {
  std::vector<HaltRow> rows;
  std::uint64_t unjoined = 0;  // failed traces outside every event

  HaltRow peninsula_summary() const {
    HaltRow sum;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) sum += rows[i];
    return sum;
  }
};

namespace detail {

// Block events (Peninsula, Outage, AllUp, Island) for one block are
// disjoint in time; index them for trace joins.
class EventIndex {
 public:
  EventIndex(std::span<const Event> events, const RoundConfig& rc) : rc_(rc) {
    for (const auto& e : events) {
      if (e.kind == EventKind::CountryPeninsula || e.kind == EventKind::AddressIsland) continue;
      by_block_[e.block].push_back(&e);
    }
    for (auto& [b, list] : by_block_) {
      std::sort(list.begin(), list.end(), [](auto* x, auto* y) { return x->start_round < y->start_round; });
    }
  }

  // Event whose span, from the start of its first round through the last
  // second of its last round, contains t.
  const Event* find(BlockId block, std::int64_t t) const {
    auto it = by_block_.find(block);
    if (it == by_block_.end()) return nullptr;
    for (auto* e : it->second) {
      if (t >= rc_.start_of(e->start_round) && t <= rc_.end_of(e->end_round) - 1) return e;
    }
    return nullptr;
  }

 private:
  RoundConfig rc_;
  std::map<BlockId, std::vector<const Event*>> by_block_;
};

}  // namespace detail

inline HaltTable halt_table(std::span<const TracerouteRecord> traces, std::span<const Event> events,
                            const PrefixTable& table, const RoundConfig& rc, std::size_t vp_count) {
  HaltTable out;
  out.rows.resize(vp_count + 1);
  detail::EventIndex index(events, rc);
  for (const auto& tr : traces) {
    if (!tr.failed()) continue;
    const Event* e = index.find(BlockId::containing(tr.target), tr.t);
    if (!e || e->kind == EventKind::Island) {
      ++out.unjoined;
      continue;
    }
    std::size_t up = 0;
    if (e->kind == EventKind::Peninsula) up = e->up_signature.size();
    if (e->kind == EventKind::AllUp) up = vp_count;
    up = std::min(up, vp_count);
    auto h = halt_classify(tr, table);
    auto& row = out.rows[up];
    ++(h.at_target_as ? row.at_as : row.before_as);
    ++(h.at_target_prefix ? row.at_prefix : row.before_prefix);
  }
  return out;
}

struct PrefixFraction {
  Prefix prefix;
  std::uint32_t asn = 0;
  std::int64_t start_bin = 0;
  std::int64_t duration_bin = 0;
  VpSet signature;
  std::size_t blocks_in_peninsula = 0;
  std::size_t measurable_blocks = 0;
  double fraction = 0.0;
  std::int64_t block_seconds = 0;  // summed event durations of member blocks
};

// Matches peninsula events across blocks of one routed prefix by start time
// bin, duration bin and up-set signature. Groups spanning fewer than two
// blocks are dropped. The denominator counts `measurable` blocks whose
// longest match is the same prefix.
inline std::vector<PrefixFraction> peninsula_prefix_fractions(std::span<const Event> events, const PrefixTable& table,
                                                              std::span<const BlockId> measurable,
                                                              const RoundConfig& rc, std::int64_t bin_s = 3600) {
  if (bin_s <= 0) throw InputError("matching bin must be positive");
  std::map<Prefix, std::size_t> measurable_per_prefix;
  for (auto b : measurable) {
    if (auto e = table.lookup(b)) ++measurable_per_prefix[e->prefix];
  }
  using Key = std::tuple<Prefix, std::int64_t, std::int64_t, VpSet>;
  struct Group {
    std::uint32_t asn = 0;
    std::set<BlockId> blocks;
    std::int64_t block_seconds = 0;
  };
  std::map<Key, Group> groups;
  for (const auto& e : events) {
    if (e.kind != EventKind::Peninsula) continue;
    auto route = table.lookup(e.block);
    if (!route) continue;
    const auto start_t = rc.start_of(e.start_round);
    Key key{route->prefix, start_t / bin_s, e.duration_s / bin_s, e.up_signature};
    auto& g = groups[key];
    g.asn = route->asn;
    g.blocks.insert(e.block);
    g.block_seconds += e.duration_s;
  }
  std::vector<PrefixFraction> out;
  for (const auto& [key, g] : groups) {
    if (g.blocks.size() < 2) continue;
    PrefixFraction pf;
    std::tie(pf.prefix, pf.start_bin, pf.duration_bin, pf.signature) = key;
    pf.asn = g.asn;
    pf.blocks_in_peninsula = g.blocks.size();
    pf.measurable_blocks = std::max(measurable_per_prefix[pf.prefix], pf.blocks_in_peninsula);
    pf.fraction = static_cast<double>(pf.blocks_in_peninsula) / static_cast<double>(pf.measurable_blocks);
    pf.block_seconds = g.block_seconds;
    out.push_back(pf);
  }
  return out;
}

struct HeatmapBins {
  // Lower bounds of prefix-length bins; the last bin runs through /24.
  // Lengths below the first bound fall into the first bin.
  std::vector<int> prefix_len_lower;
  // Fraction bin edges e0 < e1 < ... ; bin i covers (e_i, e_{i+1}].
  std::vector<double> fraction_edges;

  static HeatmapBins standard() {
    HeatmapBins b;
    for (int len = 8; len <= 24; ++len) b.prefix_len_lower.push_back(len);
    for (int i = 0; i <= 10; ++i) b.fraction_edges.push_back(i / 10.0);
    return b;
  }
};

enum class HeatmapWeight { Count, Duration };

struct Heatmap {
  HeatmapBins bins;
  std::vector<std::vector<double>> cells;  // [prefix-length bin][fraction bin]

  double total() const {
    double s = 0.0;
    for (const auto& row : cells) {
      for (double v : row) s += v;
    }
    return s;
  }
};

inline std::size_t prefix_len_bin(const HeatmapBins& bins, int len) {
  std::size_t i = 0;
  while (i + 1 < bins.prefix_len_lower.size() && len >= bins.prefix_len_lower[i + 1]) ++i;
  return i;
}

inline std::size_t fraction_bin(const HeatmapBins& bins, double f) {
  const auto n = bins.fraction_edges.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (f <= bins.fraction_edges[i + 1]) return i;
  }
  return n - 1;
}

// Count weighting adds 1 per prefix fraction; duration weighting adds the
// fraction's share of total peninsula block-time, so cells sum to 1.
inline Heatmap fraction_heatmap(std::span<const PrefixFraction> fractions, const HeatmapBins& bins,
                                HeatmapWeight weight) {
  if (bins.prefix_len_lower.empty() || bins.fraction_edges.size() < 2) throw InputError("heatmap needs bins");
  if (!std::is_sorted(bins.fraction_edges.begin(), bins.fraction_edges.end()) ||
      !std::is_sorted(bins.prefix_len_lower.begin(), bins.prefix_len_lower.end())) {
    throw InputError("heatmap bin edges must be ascending");
  }
  Heatmap h;
  h.bins = bins;
  h.cells.assign(bins.prefix_len_lower.size(), std::vector<double>(bins.fraction_edges.size() - 1, 0.0));
  long double total = 0;
  for (const auto& f : fractions) total += static_cast<long double>(f.block_seconds);
  for (const auto& f : fractions) {
    double w = 1.0;
    if (weight == HeatmapWeight::Duration) {
      w = total > 0 ? static_cast<double>(static_cast<long double>(f.block_seconds) / total) : 0.0;
    }
    h.cells[prefix_len_bin(bins, f.prefix.length)][fraction_bin(bins, f.fraction)] += w;
  }
  return h;
}

struct IndustryCount {
  std::size_t ases = 0;
  std::size_t blocks = 0;
};

// Joins blocks to origin ASes and ASes to industry labels. Blocks without a
// route are skipped; ASes without a label are reported as "unknown".
inline std::map<std::string, IndustryCount> industry_table(std::span<const BlockId> blocks, const PrefixTable& table,
                                                           const std::map<std::uint32_t, std::string>& industries) {
  std::map<std::string, std::set<std::uint32_t>> ases;
  std::map<std::string, IndustryCount> out;
  for (auto b : std::set<BlockId>(blocks.begin(), blocks.end())) {
    auto route = table.lookup(b);
    if (!route) continue;
    auto it = industries.find(route->asn);
    const std::string& label = it == industries.end() ? std::string("unknown") : it->second;
    ases[label].insert(route->asn);
    ++out[label].blocks;
  }
  for (auto& [label, set] : ases) out[label].ases = set.size();
  return out;
}

}  // namespace peninsula

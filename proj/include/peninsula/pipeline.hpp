#pragma once

// End-to-end block classification. Observers that Chiloe places in an island
// do not provide valid observations about the rest of the Internet, so their
// states are masked before Taitao runs. A block that every remaining valid
// observer sees down while an islanded observer still reaches it is inside
// that island rather than out.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peninsula/detect.hpp"
#include "peninsula/events.hpp"
#include "peninsula/ingest.hpp"
#include "peninsula/model.hpp"
#include "peninsula/parallel.hpp"

namespace peninsula {

struct PipelineConfig {
  IslandConfig island;
  EventBuildConfig events;
  bool detect_islands = true;
  std::map<BlockId, std::string> block_countries;
  unsigned jobs = 1;
};

struct Analysis {
  std::vector<IslandVerdict> island_verdicts;  // (vp, round) order; empty if disabled
  IslandEvents islands;
  std::vector<ClassifiedRound> rounds;         // (block, round) order
  std::vector<Event> block_events;             // Peninsula / Outage / AllUp / Island
  std::vector<Event> country_events;

  // Per-kind cell counts: index by static_cast<size_t>(EventKind); the last
  // slot counts rounds with no verdict.
  std::array<std::uint64_t, 7> round_counts{};
};

// Which observers are islanded at each round, as [round] -> VpSet.
inline std::vector<VpSet> islanded_by_round(const IslandEvents& islands, std::size_t rounds) {
  std::vector<VpSet> out(rounds);
  for (const auto& e : islands.events) {
    for (auto r = e.start_round; r <= e.end_round && r < rounds; ++r) out[r].insert(e.vp);
  }
  return out;
}

// Classifies one (block, round) given the observers islanded at that round.
inline ClassifiedRound classify_block_round(BlockId block, std::uint32_t round, std::span<const ReachState> row,
                                            const VpSet& islanded) {
  ClassifiedRound cr;
  cr.block = block;
  cr.round = round;
  VpSet up;
  VpSet island_up;
  std::uint32_t n_valid = 0;
  for (std::size_t v = 0; v < row.size(); ++v) {
    if (row[v] == ReachState::Unknown) continue;
    if (islanded.contains(v)) {
      if (row[v] == ReachState::Up) island_up.insert(v);
      continue;
    }
    ++n_valid;
    if (row[v] == ReachState::Up) up.insert(v);
  }
  if (up.empty() && !island_up.empty()) {
    cr.kind = EventKind::Island;
    cr.up_set = std::move(island_up);
    return cr;
  }
  auto rc = detail::finish_class(std::move(up), n_valid);
  cr.kind = event_kind_of(rc.kind);
  cr.up_set = std::move(rc.up_set);
  return cr;
}

inline Analysis analyze(const RoundMatrix& m, const PipelineConfig& cfg) {
  Analysis a;
  const auto nb = m.blocks().size();
  const auto nr = m.rounds();
  const auto nvp = m.vp_count();

  std::vector<VpSet> islanded(nr);
  if (cfg.detect_islands && nb > 0 && nr > 0) {
    validate(cfg.island);
    // Rounds with no responsive core cannot be judged; they stay Normal.
    const auto cores = trailing_cores(m, core_lookback_rounds(cfg.island, cfg.events.round_width));
    a.island_verdicts.resize(nvp * nr);
    parallel_for(nvp, cfg.jobs, [&](std::size_t v) {
      for (std::size_t r = 0; r < nr; ++r) {
        auto& out = a.island_verdicts[v * nr + r];
        if (cores[r].empty()) {
          out = IslandVerdict{v, static_cast<std::uint32_t>(r), 0, 0, 1.0, IslandKind::Normal};
        } else {
          out = chiloe_round(m, v, static_cast<std::uint32_t>(r), cfg.island, cores[r]);
        }
      }
    });
    a.islands = island_events(a.island_verdicts, cfg.island, cfg.events.round_width);
    islanded = islanded_by_round(a.islands, nr);
  }

  a.rounds.resize(nb * nr);
  std::vector<ClassifiedRound> country_rounds(nb * nr);
  parallel_for(nb, cfg.jobs, [&](std::size_t b) {
    const auto block = m.blocks()[b];
    std::optional<std::string> bc;
    if (auto it = cfg.block_countries.find(block); it != cfg.block_countries.end()) bc = it->second;
    std::vector<ReachState> masked(nvp);
    for (std::size_t r = 0; r < nr; ++r) {
      auto row = m.row(b, r);
      const auto round = static_cast<std::uint32_t>(r);
      a.rounds[b * nr + r] = classify_block_round(block, round, row, islanded[r]);
      for (std::size_t v = 0; v < nvp; ++v) masked[v] = islanded[r].contains(v) ? ReachState::Unknown : row[v];
      auto cv = classify_country(masked, m.vps(), bc);
      auto& cr = country_rounds[b * nr + r];
      cr.block = block;
      cr.round = round;
      if (cv.is_country) {
        cr.kind = EventKind::CountryPeninsula;
        cr.up_set = std::move(cv.up_set);
        cr.country = std::move(cv.country);
      }
    }
  });
  for (const auto& cr : a.rounds) ++a.round_counts[cr.kind ? static_cast<std::size_t>(*cr.kind) : 6];
  a.block_events = build_events(std::span<const ClassifiedRound>(a.rounds), cfg.events);
  a.country_events = build_events(std::span<const ClassifiedRound>(country_rounds), cfg.events);
  return a;
}

struct TargetIslands {
  std::vector<VantagePoint> vps;    // sorted ids seen in the probes
  std::vector<IslandEvent> events;  // rounds here are window indices
  std::int64_t epoch = 0;
};

// k-target mode: probes are binned into windows from `epoch` (default: the
// earliest probe); each VP window with at least one probe is judged with
// chiloe_k_target and consecutive island windows merge into one event.
inline TargetIslands k_target_islands(std::span<const TargetProbe> probes, std::size_t k, bool strict,
                                      std::int64_t window_s, std::optional<std::int64_t> epoch = std::nullopt,
                                      const IslandConfig& cfg = {}) {
  if (window_s <= 0) throw InputError("window must be positive");
  TargetIslands out;
  if (probes.empty()) return out;
  out.epoch = epoch.value_or(std::min_element(probes.begin(), probes.end(), [](auto& a, auto& b) { return a.t < b.t; })->t);
  // vp -> window -> target -> outcomes
  std::map<std::string, std::map<std::int64_t, std::map<std::string, std::vector<bool>>>> bins;
  for (const auto& p : probes) {
    if (p.t < out.epoch) throw InputError("probe at t=" + std::to_string(p.t) + " precedes the epoch");
    bins[p.vp][(p.t - out.epoch) / window_s][p.target].push_back(p.ok);
  }
  for (const auto& [vp, windows] : bins) {
    const auto v = out.vps.size();
    out.vps.push_back(VantagePoint{vp, std::string(kUnknownCountry)});
    std::optional<IslandEvent> open;
    auto close = [&] {
      if (!open) return;
      open->duration_s = std::int64_t{open->rounds()} * window_s;
      out.events.push_back(*open);
      open.reset();
    };
    for (const auto& [w, targets] : windows) {
      std::vector<std::vector<bool>> successes;
      std::size_t reached = 0;
      for (const auto& [target, oks] : targets) {
        successes.push_back(oks);
        if (std::find(oks.begin(), oks.end(), true) != oks.end()) ++reached;
      }
      const auto round = static_cast<std::uint32_t>(w);
      if (!chiloe_k_target(successes, k, strict, cfg)) {
        close();
        continue;
      }
      const double fraction = static_cast<double>(reached) / static_cast<double>(k);
      if (open && open->end_round + 1 != round) close();
      if (!open) open = IslandEvent{v, EventKind::Island, round, round, fraction, 0};
      open->end_round = round;
      open->min_fraction = std::min(open->min_fraction, fraction);
    }
    close();
  }
  return out;
}

}  // namespace peninsula

#pragma once

// Detectors over a RoundMatrix:
//  * Taitao flags a (block, round) as a peninsula candidate when valid VPs
//    disagree on reachability.
//  * Country-level Taitao flags blocks reachable from exactly the valid VPs
//    of one country.
//  * Chiloe flags a VP as being in an island when it reaches at most half of
//    the recently responsive core.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peninsula/error.hpp"
#include "peninsula/model.hpp"
#include "peninsula/parallel.hpp"

namespace peninsula {

// ---------------------------------------------------------------- Taitao

inline DetectionVerdict make_verdict(BlockId block, std::uint32_t round, RoundClass rc) {
  return DetectionVerdict{block, round, rc.n_valid, std::move(rc.up_set), rc.kind};
}

// Rounds past the matrix horizon have no observations and yield NoData.
inline DetectionVerdict taitao_round(const RoundMatrix& m, BlockId block, std::uint32_t round) {
  auto b = m.block_index(block);
  if (!b) throw InputError("block " + block.to_string() + " not present in matrix");
  if (round >= m.rounds()) return DetectionVerdict{block, round, 0, {}, VerdictKind::NoData};
  return make_verdict(block, round, classify_round(m.row(*b, round)));
}

// One verdict per (block, round), ordered by block then round. When `subset`
// is given, verdicts are recomputed from the raw states of those VPs only.
inline std::vector<DetectionVerdict> taitao_scan(const RoundMatrix& m, std::span<const std::size_t> subset = {},
                                                 unsigned jobs = 1) {
  const auto nb = m.blocks().size();
  const auto nr = m.rounds();
  std::vector<DetectionVerdict> out(nb * nr);
  parallel_for(nb, jobs, [&](std::size_t b) {
    for (std::size_t r = 0; r < nr; ++r) {
      auto row = m.row(b, r);
      auto rc = subset.empty() ? classify_round(row) : classify_round(row, subset);
      out[b * nr + r] = make_verdict(m.blocks()[b], static_cast<std::uint32_t>(r), std::move(rc));
    }
  });
  return out;
}

// ------------------------------------------------------- country peninsulas

enum class CountryAnchor { Domestic, ForeignAnchored, Unlabeled };

inline std::string_view to_string(CountryAnchor a) {
  switch (a) {
    case CountryAnchor::Domestic: return "domestic";
    case CountryAnchor::ForeignAnchored: return "foreign-anchored";
    case CountryAnchor::Unlabeled: return "unlabeled";
  }
  return "?";
}

struct CountryVerdict {
  bool is_country = false;
  std::string country;
  CountryAnchor anchor = CountryAnchor::Unlabeled;
  VpSet up_set;
};

// The up-set must be non-empty, share one known country c, and contain every
// valid VP of c; at least one valid VP with a known, different country must
// see the block down. VPs with unknown country never match c and do not
// count as foreign evidence.
inline CountryVerdict classify_country(std::span<const ReachState> row, const std::vector<VantagePoint>& vps,
                                       const std::optional<std::string>& block_country) {
  CountryVerdict v;
  auto rc = classify_round(row);
  if (rc.kind != VerdictKind::Disagreement) return v;
  const std::string* country = nullptr;
  bool uniform = true;
  rc.up_set.for_each([&](std::size_t i) {
    if (!vps[i].has_country()) {
      uniform = false;
    } else if (!country) {
      country = &vps[i].country;
    } else if (*country != vps[i].country) {
      uniform = false;
    }
  });
  if (!uniform || !country) return v;
  bool foreign_seen = false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == ReachState::Unknown) continue;
    if (vps[i].country == *country) {
      if (row[i] != ReachState::Up) return v;  // a domestic observer is down
    } else if (vps[i].has_country()) {
      foreign_seen = true;
    }
  }
  if (!foreign_seen) return v;
  v.is_country = true;
  v.country = *country;
  v.up_set = std::move(rc.up_set);
  if (!block_country || *block_country == kUnknownCountry) {
    v.anchor = CountryAnchor::Unlabeled;
  } else {
    v.anchor = *block_country == v.country ? CountryAnchor::Domestic : CountryAnchor::ForeignAnchored;
  }
  return v;
}

inline CountryVerdict country_peninsula_round(const RoundMatrix& m, BlockId block, std::uint32_t round,
                                              const std::map<BlockId, std::string>& block_countries = {}) {
  auto b = m.block_index(block);
  if (!b) throw InputError("block " + block.to_string() + " not present in matrix");
  if (round >= m.rounds()) return {};
  std::optional<std::string> bc;
  if (auto it = block_countries.find(block); it != block_countries.end()) bc = it->second;
  return classify_country(m.row(*b, round), m.vps(), bc);
}

// Ordered by (block, round), one entry per cell.
inline std::vector<CountryVerdict> country_scan(const RoundMatrix& m,
                                                const std::map<BlockId, std::string>& block_countries = {},
                                                unsigned jobs = 1) {
  const auto nb = m.blocks().size();
  const auto nr = m.rounds();
  std::vector<CountryVerdict> out(nb * nr);
  parallel_for(nb, jobs, [&](std::size_t b) {
    std::optional<std::string> bc;
    if (auto it = block_countries.find(m.blocks()[b]); it != block_countries.end()) bc = it->second;
    for (std::size_t r = 0; r < nr; ++r) out[b * nr + r] = classify_country(m.row(b, r), m.vps(), bc);
  });
  return out;
}

// ------------------------------------------------------------------ Chiloe

struct IslandConfig {
  double island_threshold = 0.50;        // reachable fraction at or below this is an island
  double noise_floor = 0.05;             // unreachable fraction at or below this is normal
  double address_island_epsilon = 0.0;   // reachable fraction at or below this is an address island
  std::uint32_t long_event_rounds = 1;   // runs longer than this must approach zero reachability
  double refine_tolerance = 0.01;
  std::int64_t core_window_s = 7 * 86400;  // core = blocks seen Up by anyone within this window
};

inline void validate(const IslandConfig& c) {
  if (!(c.noise_floor >= 0.0 && c.noise_floor < c.island_threshold && c.island_threshold <= 0.5)) {
    throw InputError("island config requires 0 <= noise_floor < island_threshold <= 0.5");
  }
  if (!(c.address_island_epsilon >= 0.0)) throw InputError("address_island_epsilon must be >= 0");
  if (!(c.refine_tolerance >= 0.0)) throw InputError("refine_tolerance must be >= 0");
  if (c.core_window_s <= 0) throw InputError("core window must be positive");
}

enum class IslandKind : std::uint8_t { Normal, PeninsulaSuspect, Island, AddressIsland };

inline std::string_view to_string(IslandKind k) {
  switch (k) {
    case IslandKind::Normal: return "normal";
    case IslandKind::PeninsulaSuspect: return "peninsula_suspect";
    case IslandKind::Island: return "island";
    case IslandKind::AddressIsland: return "address_island";
  }
  return "?";
}

inline bool is_island(IslandKind k) { return k == IslandKind::Island || k == IslandKind::AddressIsland; }

struct IslandVerdict {
  std::size_t vp = 0;
  std::uint32_t round = 0;
  std::size_t reachable = 0;
  std::size_t core_size = 0;
  double reachable_fraction = 0.0;
  IslandKind kind = IslandKind::Normal;
};

// Precedence: AddressIsland > Island > PeninsulaSuspect > Normal. Fractions
// are formed from integer counts so boundary cases (e.g. exactly half) land
// on the inclusive side.
inline IslandKind classify_island(std::size_t reachable, std::size_t core, const IslandConfig& cfg) {
  const double up = static_cast<double>(reachable) / static_cast<double>(core);
  const double down = static_cast<double>(core - reachable) / static_cast<double>(core);
  if (up <= cfg.address_island_epsilon) return IslandKind::AddressIsland;
  if (up <= cfg.island_threshold) return IslandKind::Island;
  if (down > cfg.noise_floor) return IslandKind::PeninsulaSuspect;
  return IslandKind::Normal;
}

inline std::uint32_t core_lookback_rounds(const IslandConfig& cfg, std::int64_t round_width) {
  return static_cast<std::uint32_t>((cfg.core_window_s + round_width - 1) / round_width);
}

// Blocks seen Up by any VP in rounds [round - lookback + 1, round].
inline std::vector<std::size_t> trailing_core(const RoundMatrix& m, std::uint32_t round, std::uint32_t lookback) {
  std::vector<std::size_t> core;
  const std::uint32_t first = round + 1 > lookback ? round + 1 - lookback : 0;
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    for (std::uint32_t r = first; r <= round && r < m.rounds(); ++r) {
      auto row = m.row(b, r);
      if (std::find(row.begin(), row.end(), ReachState::Up) != row.end()) {
        core.push_back(b);
        break;
      }
    }
  }
  return core;
}

// trailing_core for every round at once: remember the last round each block
// was seen Up by anyone.
inline std::vector<std::vector<std::size_t>> trailing_cores(const RoundMatrix& m, std::uint32_t lookback) {
  std::vector<std::vector<std::size_t>> cores(m.rounds());
  std::vector<std::int64_t> last_up(m.blocks().size(), -1);
  for (std::size_t r = 0; r < m.rounds(); ++r) {
    for (std::size_t b = 0; b < m.blocks().size(); ++b) {
      auto row = m.row(b, r);
      if (std::find(row.begin(), row.end(), ReachState::Up) != row.end()) last_up[b] = static_cast<std::int64_t>(r);
      if (last_up[b] >= 0 && static_cast<std::int64_t>(r) - last_up[b] < static_cast<std::int64_t>(lookback)) {
        cores[r].push_back(b);
      }
    }
  }
  return cores;
}

inline IslandVerdict chiloe_round(const RoundMatrix& m, std::size_t vp, std::uint32_t round, const IslandConfig& cfg,
                                  std::span<const std::size_t> core) {
  if (core.empty()) throw InputError("empty core block set: nothing to measure reachability against");
  if (vp >= m.vp_count()) throw InputError("vantage point index out of range");
  IslandVerdict v;
  v.vp = vp;
  v.round = round;
  v.core_size = core.size();
  if (round < m.rounds()) {
    for (auto b : core) {
      if (m.state(b, round, vp) == ReachState::Up) ++v.reachable;
    }
  }
  v.reachable_fraction = static_cast<double>(v.reachable) / static_cast<double>(v.core_size);
  v.kind = classify_island(v.reachable, v.core_size, cfg);
  return v;
}

// Verdicts for every (vp, round), ordered by vp then round. The core set is
// recomputed per round from the trailing window unless `fixed_core` is given.
inline std::vector<IslandVerdict> chiloe_scan(const RoundMatrix& m, const IslandConfig& cfg, std::int64_t round_width,
                                              std::optional<std::vector<std::size_t>> fixed_core = std::nullopt,
                                              unsigned jobs = 1) {
  validate(cfg);
  const auto nr = m.rounds();
  const auto nvp = m.vp_count();
  std::vector<std::vector<std::size_t>> cores;
  if (fixed_core) {
    cores.assign(nr, *fixed_core);
  } else {
    cores = trailing_cores(m, core_lookback_rounds(cfg, round_width));
  }
  for (std::size_t r = 0; r < nr; ++r) {
    if (cores[r].empty()) {
      throw InputError("empty core block set at round " + std::to_string(r) +
                       ": nothing to measure reachability against");
    }
  }
  std::vector<IslandVerdict> out(nvp * nr);
  parallel_for(nvp, jobs, [&](std::size_t v) {
    for (std::size_t r = 0; r < nr; ++r) {
      out[v * nr + r] = chiloe_round(m, v, static_cast<std::uint32_t>(r), cfg, cores[r]);
    }
  });
  return out;
}

enum class RefineOutcome { Island, Demoted };

// Brief runs are kept as measured. Runs longer than long_event_rounds must
// drive reachability to (nearly) zero somewhere in the run, otherwise they
// look like a long-lived peninsula seen from the VP.
inline RefineOutcome chiloe_refine_long_events(std::span<const IslandVerdict> run, const IslandConfig& cfg) {
  if (run.size() <= cfg.long_event_rounds) return RefineOutcome::Island;
  double min_fraction = 1.0;
  for (const auto& v : run) min_fraction = std::min(min_fraction, v.reachable_fraction);
  return min_fraction <= cfg.address_island_epsilon + cfg.refine_tolerance ? RefineOutcome::Island
                                                                           : RefineOutcome::Demoted;
}

struct IslandEvent {
  std::size_t vp = 0;
  EventKind kind = EventKind::Island;  // Island or AddressIsland
  std::uint32_t start_round = 0;
  std::uint32_t end_round = 0;  // inclusive
  double min_fraction = 0.0;
  std::int64_t duration_s = 0;

  std::uint32_t rounds() const { return end_round - start_round + 1; }
  bool covers(std::uint32_t r) const { return r >= start_round && r <= end_round; }

  friend bool operator==(const IslandEvent&, const IslandEvent&) = default;
};

struct IslandEvents {
  std::vector<IslandEvent> events;
  std::size_t demoted = 0;
};

// Groups consecutive island verdicts per VP into events and applies the
// long-event refinement. Input must be ordered by (vp, round).
inline IslandEvents island_events(std::span<const IslandVerdict> verdicts, const IslandConfig& cfg,
                                  std::int64_t round_width) {
  IslandEvents out;
  std::size_t i = 0;
  while (i < verdicts.size()) {
    if (!is_island(verdicts[i].kind)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < verdicts.size() && is_island(verdicts[j].kind) && verdicts[j].vp == verdicts[i].vp &&
           verdicts[j].round == verdicts[j - 1].round + 1) {
      ++j;
    }
    auto run = verdicts.subspan(i, j - i);
    if (chiloe_refine_long_events(run, cfg) == RefineOutcome::Island) {
      IslandEvent e;
      e.vp = run.front().vp;
      e.start_round = run.front().round;
      e.end_round = run.back().round;
      e.min_fraction = 1.0;
      for (const auto& v : run) e.min_fraction = std::min(e.min_fraction, v.reachable_fraction);
      e.kind = e.min_fraction <= cfg.address_island_epsilon ? EventKind::AddressIsland : EventKind::Island;
      e.duration_s = std::int64_t{e.rounds()} * round_width;
      out.events.push_back(e);
    } else {
      ++out.demoted;
    }
    i = j;
  }
  return out;
}

// Island test over a small fixed target list (e.g. root-server identifiers)
// for one VP and window. `successes[t]` lists the outcomes toward target t;
// targets absent from the list count as never reached. Strict mode requires
// zero successes to every target; otherwise the usual threshold applies with
// the core equal to the k targets.
inline bool chiloe_k_target(const std::vector<std::vector<bool>>& successes, std::size_t k, bool strict,
                            const IslandConfig& cfg = {}) {
  if (k == 0) throw InputError("k-target island test needs at least one target");
  if (successes.size() > k) throw InputError("more targets observed than k");
  std::size_t reached = 0;
  for (const auto& per_target : successes) {
    if (std::find(per_target.begin(), per_target.end(), true) != per_target.end()) ++reached;
  }
  if (strict) return reached == 0;
  return is_island(classify_island(reached, k, cfg));
}

}  // namespace peninsula

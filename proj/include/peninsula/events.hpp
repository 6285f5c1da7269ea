#pragma once

// Assembly of per-round verdicts into maximal events, plus event-level
// statistics: long-event filtering, duration CDFs and island rates.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "peninsula/error.hpp"
#include "peninsula/model.hpp"

namespace peninsula {

// A single (block, round) after classification. `kind` is empty for rounds
// without a usable verdict; such rounds break events unless bridged.
struct ClassifiedRound {
  BlockId block;
  std::uint32_t round = 0;
  std::optional<EventKind> kind;
  VpSet up_set;
  std::string country;
};

inline ClassifiedRound classified(const DetectionVerdict& v) {
  return ClassifiedRound{v.block, v.round, event_kind_of(v.kind), v.up_set, {}};
}

struct EventBuildConfig {
  std::int64_t round_width = 660;
  std::uint32_t bridge_nodata_rounds = 0;
};

namespace detail {

struct OpenEvent {
  Event event;
  std::unordered_map<VpSet, std::uint32_t> signatures;

  void close(std::vector<Event>& out, std::int64_t width) {
    // Modal up-set; ties go to the smaller set in VpSet order.
    const VpSet* best = nullptr;
    std::uint32_t best_n = 0;
    for (const auto& [set, n] : signatures) {
      if (n > best_n || (n == best_n && set < *best)) {
        best = &set;
        best_n = n;
      }
    }
    if (best) event.up_signature = *best;
    event.duration_s = std::int64_t{event.rounds()} * width;
    out.push_back(std::move(event));
  }
};

}  // namespace detail

// Merges maximal runs of one kind per block. Rounds without a kind (and
// rounds missing from the stream) break a run unless the gap is at most
// bridge_nodata_rounds long and the run resumes with the same kind, in which
// case the gap is absorbed into the event span. Country peninsulas only merge
// with the same country. Each event's signature is its most frequent up-set.
inline std::vector<Event> build_events(std::span<const ClassifiedRound> stream, const EventBuildConfig& cfg = {}) {
  std::vector<Event> out;
  std::optional<detail::OpenEvent> open;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& cr = stream[i];
    if (i > 0) {
      const auto& prev = stream[i - 1];
      if (cr.block < prev.block || (cr.block == prev.block && cr.round <= prev.round)) {
        throw InputError("verdict stream not ordered by (block, round) at position " + std::to_string(i));
      }
    }
    if (open && open->event.block != cr.block) {
      open->close(out, cfg.round_width);
      open.reset();
    }
    if (!cr.kind) continue;
    if (open) {
      const bool same = open->event.kind == *cr.kind && open->event.country == cr.country;
      const auto gap = cr.round - open->event.end_round - 1;
      if (same && gap <= cfg.bridge_nodata_rounds) {
        open->event.end_round = cr.round;
        ++open->signatures[cr.up_set];
        continue;
      }
      open->close(out, cfg.round_width);
      open.reset();
    }
    open.emplace();
    open->event.block = cr.block;
    open->event.kind = *cr.kind;
    open->event.start_round = open->event.end_round = cr.round;
    open->event.country = cr.country;
    ++open->signatures[cr.up_set];
  }
  if (open) open->close(out, cfg.round_width);
  return out;
}

inline std::vector<Event> build_events(std::span<const DetectionVerdict> verdicts, const EventBuildConfig& cfg = {}) {
  std::vector<ClassifiedRound> stream;
  stream.reserve(verdicts.size());
  for (const auto& v : verdicts) stream.push_back(classified(v));
  return build_events(std::span<const ClassifiedRound>(stream), cfg);
}

inline constexpr std::int64_t kLongEventSeconds = 5 * 3600;

// Keeps events lasting at least min_duration_s (inclusive).
inline std::vector<Event> filter_long_events(std::vector<Event> events, std::int64_t min_duration_s = kLongEventSeconds) {
  std::erase_if(events, [&](const Event& e) { return e.duration_s < min_duration_s; });
  return events;
}

inline std::vector<Event> events_of_kind(std::span<const Event> events, EventKind kind) {
  std::vector<Event> out;
  for (const auto& e : events) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

enum class CdfWeight { Count, TotalDuration };

struct CdfPoint {
  std::int64_t duration_s = 0;
  double cumulative = 0.0;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

// Empirical CDF over distinct durations. Count weighting gives each event
// weight 1; TotalDuration weights each event by its duration, so the value at
// d is the share of total time spent in events no longer than d.
inline std::vector<CdfPoint> duration_cdf(std::span<const std::int64_t> durations, CdfWeight weight) {
  if (durations.empty()) throw InputError("duration CDF needs at least one event");
  std::vector<std::int64_t> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  long double total = 0;
  for (auto d : sorted) total += weight == CdfWeight::Count ? 1.0L : static_cast<long double>(d);
  if (total <= 0) throw InputError("duration-weighted CDF needs positive total duration");
  std::vector<CdfPoint> out;
  long double acc = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    acc += weight == CdfWeight::Count ? 1.0L : static_cast<long double>(sorted[i]);
    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
      out.push_back({sorted[i], static_cast<double>(acc / total)});
    }
  }
  out.back().cumulative = 1.0;
  return out;
}

inline std::vector<CdfPoint> duration_cdf(std::span<const Event> events, CdfWeight weight) {
  std::vector<std::int64_t> d;
  d.reserve(events.size());
  for (const auto& e : events) d.push_back(e.duration_s);
  return duration_cdf(std::span<const std::int64_t>(d), weight);
}

// CDF value at `duration_s` (step function, right-continuous).
inline double cdf_at(std::span<const CdfPoint> cdf, std::int64_t duration_s) {
  double v = 0.0;
  for (const auto& p : cdf) {
    if (p.duration_s > duration_s) break;
    v = p.cumulative;
  }
  return v;
}

// Share of weight in events lasting at least `duration_s`.
inline double share_at_least(std::span<const CdfPoint> cdf, std::int64_t duration_s) {
  return 1.0 - cdf_at(cdf, duration_s - 1);
}

struct IslandRate {
  double aggregate = 0.0;   // events per year
  double normalized = 0.0;  // events per VP-year
};

inline constexpr double kSecondsPerYear = 365.25 * 86400.0;

inline IslandRate island_rate(std::size_t event_count, std::size_t vp_count, double span_years) {
  if (!(span_years > 0.0)) throw InputError("island rate needs a positive span");
  if (vp_count == 0) throw InputError("island rate needs at least one vantage point");
  IslandRate r;
  r.aggregate = static_cast<double>(event_count) / span_years;
  r.normalized = r.aggregate / static_cast<double>(vp_count);
  return r;
}

}  // namespace peninsula

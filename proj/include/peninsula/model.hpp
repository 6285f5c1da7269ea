#pragma once

// Core domain types shared by every module: vantage points, round binning,
// the per-(block, round, VP) reachability matrix, detection verdicts,
// events and traceroute records.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "peninsula/error.hpp"
#include "peninsula/ipv4.hpp"
#include "peninsula/vp_set.hpp"

namespace peninsula {

inline constexpr std::string_view kUnknownCountry = "??";

inline bool is_country_code(std::string_view c) {
  return c.size() == 2 && c[0] >= 'A' && c[0] <= 'Z' && c[1] >= 'A' && c[1] <= 'Z';
}

struct VantagePoint {
  std::string id;
  std::string country{kUnknownCountry};

  bool has_country() const { return country != kUnknownCountry; }

  friend bool operator==(const VantagePoint&, const VantagePoint&) = default;
};

inline void validate(const VantagePoint& vp) {
  if (vp.id.empty()) throw InputError("vantage point id must be non-empty");
  if (vp.country != kUnknownCountry && !is_country_code(vp.country)) {
    throw InputError("vantage point " + vp.id + ": bad country code '" + vp.country + "'");
  }
}

// Round i covers [epoch + i*width, epoch + (i+1)*width).
struct RoundConfig {
  std::int64_t epoch = 0;
  std::int64_t width = 660;

  std::uint32_t round_of(std::int64_t t) const {
    if (width <= 0) throw InputError("round width must be positive");
    if (t < epoch) throw InputError("timestamp " + std::to_string(t) + " precedes epoch");
    return static_cast<std::uint32_t>((t - epoch) / width);
  }
  std::int64_t start_of(std::uint32_t round) const { return epoch + std::int64_t{round} * width; }
  std::int64_t end_of(std::uint32_t round) const { return start_of(round) + width; }
};

enum class ReachState : std::uint8_t { Unknown = 0, Up = 1, Down = 2 };

class RoundMatrixBuilder;

// Dense (block, round, VP) state cube. Blocks are kept sorted; rounds run
// 0..rounds()-1 relative to the dataset's RoundConfig. Cells never written
// are Unknown. Instances are immutable; build them with RoundMatrixBuilder.
class RoundMatrix {
 public:
  RoundMatrix() = default;

  const std::vector<VantagePoint>& vps() const { return vps_; }
  const std::vector<BlockId>& blocks() const { return blocks_; }
  std::size_t rounds() const { return rounds_; }
  std::size_t vp_count() const { return vps_.size(); }

  std::optional<std::size_t> block_index(BlockId b) const {
    auto it = std::lower_bound(blocks_.begin(), blocks_.end(), b);
    if (it == blocks_.end() || *it != b) return std::nullopt;
    return static_cast<std::size_t>(it - blocks_.begin());
  }

  std::optional<std::size_t> vp_index(std::string_view id) const {
    for (std::size_t i = 0; i < vps_.size(); ++i) {
      if (vps_[i].id == id) return i;
    }
    return std::nullopt;
  }

  ReachState state(std::size_t block, std::size_t round, std::size_t vp) const {
    return cells_[offset(block, round) + vp];
  }

  // All VP states for one (block, round), in VP order.
  std::span<const ReachState> row(std::size_t block, std::size_t round) const {
    return {cells_.data() + offset(block, round), vps_.size()};
  }

  std::size_t known_cells() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](ReachState s) { return s != ReachState::Unknown; }));
  }

  friend bool operator==(const RoundMatrix&, const RoundMatrix&) = default;

 private:
  friend class RoundMatrixBuilder;

  std::size_t offset(std::size_t block, std::size_t round) const {
    return (block * rounds_ + round) * vps_.size();
  }

  std::vector<VantagePoint> vps_;
  std::vector<BlockId> blocks_;
  std::size_t rounds_ = 0;
  std::vector<ReachState> cells_;
};

class RoundMatrixBuilder {
 public:
  RoundMatrixBuilder(std::vector<VantagePoint> vps, std::vector<BlockId> blocks, std::size_t rounds) {
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    for (std::size_t i = 0; i < vps.size(); ++i) {
      validate(vps[i]);
      for (std::size_t j = 0; j < i; ++j) {
        if (vps[j].id == vps[i].id) throw InputError("duplicate vantage point id " + vps[i].id);
      }
    }
    m_.vps_ = std::move(vps);
    m_.blocks_ = std::move(blocks);
    m_.rounds_ = rounds;
    m_.cells_.assign(m_.blocks_.size() * rounds * m_.vps_.size(), ReachState::Unknown);
  }

  explicit RoundMatrixBuilder(RoundMatrix from) : m_(std::move(from)) {}

  const RoundMatrix& view() const { return m_; }

  void set(std::size_t block, std::size_t round, std::size_t vp, ReachState s) {
    m_.cells_[m_.offset(block, round) + vp] = s;
  }

  void set_country(std::size_t vp, std::string country) {
    VantagePoint relabeled{m_.vps_.at(vp).id, std::move(country)};
    validate(relabeled);
    m_.vps_[vp] = std::move(relabeled);
  }

  RoundMatrix build() && { return std::move(m_); }

 private:
  RoundMatrix m_;
};

enum class VerdictKind : std::uint8_t { NoData, AllUp, AllDown, Disagreement };

inline std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::NoData: return "no_data";
    case VerdictKind::AllUp: return "all_up";
    case VerdictKind::AllDown: return "all_down";
    case VerdictKind::Disagreement: return "disagreement";
  }
  return "?";
}

struct RoundClass {
  VerdictKind kind = VerdictKind::NoData;
  VpSet up_set;
  std::uint32_t n_valid = 0;
};

namespace detail {
inline RoundClass finish_class(VpSet up, std::uint32_t n_valid) {
  RoundClass rc;
  rc.n_valid = n_valid;
  auto n_up = up.size();
  if (n_valid == 0) {
    rc.kind = VerdictKind::NoData;
  } else if (n_up == 0) {
    rc.kind = VerdictKind::AllDown;
  } else if (n_up == n_valid) {
    rc.kind = VerdictKind::AllUp;
  } else {
    rc.kind = VerdictKind::Disagreement;
  }
  rc.up_set = std::move(up);
  return rc;
}
}  // namespace detail

// A peninsula candidate is any round with 0 < |up| < |valid|; Unknown
// entries are not valid observations and count toward neither side.
inline RoundClass classify_round(std::span<const ReachState> states) {
  VpSet up;
  std::uint32_t n_valid = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == ReachState::Unknown) continue;
    ++n_valid;
    if (states[i] == ReachState::Up) up.insert(i);
  }
  return detail::finish_class(std::move(up), n_valid);
}

// Same, restricted to the listed VP indices. up_set keeps original indices.
inline RoundClass classify_round(std::span<const ReachState> states, std::span<const std::size_t> subset) {
  VpSet up;
  std::uint32_t n_valid = 0;
  for (auto i : subset) {
    if (states[i] == ReachState::Unknown) continue;
    ++n_valid;
    if (states[i] == ReachState::Up) up.insert(i);
  }
  return detail::finish_class(std::move(up), n_valid);
}

struct DetectionVerdict {
  BlockId block;
  std::uint32_t round = 0;
  std::uint32_t n_valid = 0;
  VpSet up_set;
  VerdictKind kind = VerdictKind::NoData;

  friend bool operator==(const DetectionVerdict&, const DetectionVerdict&) = default;
};

enum class EventKind : std::uint8_t { Peninsula, Outage, AllUp, CountryPeninsula, Island, AddressIsland };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Peninsula: return "peninsula";
    case EventKind::Outage: return "outage";
    case EventKind::AllUp: return "all_up";
    case EventKind::CountryPeninsula: return "country_peninsula";
    case EventKind::Island: return "island";
    case EventKind::AddressIsland: return "address_island";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::Peninsula, EventKind::Outage, EventKind::AllUp, EventKind::CountryPeninsula,
                 EventKind::Island, EventKind::AddressIsland}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<EventKind> event_kind_of(VerdictKind k) {
  switch (k) {
    case VerdictKind::AllUp: return EventKind::AllUp;
    case VerdictKind::AllDown: return EventKind::Outage;
    case VerdictKind::Disagreement: return EventKind::Peninsula;
    case VerdictKind::NoData: return std::nullopt;
  }
  return std::nullopt;
}

// Maximal run of rounds sharing one kind for one block.
struct Event {
  BlockId block;
  EventKind kind = EventKind::AllUp;
  std::uint32_t start_round = 0;
  std::uint32_t end_round = 0;  // inclusive
  VpSet up_signature;
  std::int64_t duration_s = 0;
  std::string country;  // CountryPeninsula only

  std::uint32_t rounds() const { return end_round - start_round + 1; }

  friend bool operator==(const Event&, const Event&) = default;
};

enum class TraceOutcome : std::uint8_t { Success, Unreachable, Loop, Gap };

inline std::string_view to_string(TraceOutcome o) {
  switch (o) {
    case TraceOutcome::Success: return "success";
    case TraceOutcome::Unreachable: return "unreachable";
    case TraceOutcome::Loop: return "loop";
    case TraceOutcome::Gap: return "gap";
  }
  return "?";
}

inline std::optional<TraceOutcome> parse_trace_outcome(std::string_view s) {
  for (auto o : {TraceOutcome::Success, TraceOutcome::Unreachable, TraceOutcome::Loop, TraceOutcome::Gap}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

struct Hop {
  std::uint32_t index = 0;  // TTL, 1-based
  std::optional<Ipv4Addr> addr;

  friend bool operator==(const Hop&, const Hop&) = default;
};

// Outcome precedence: Success (last responding hop inside the target /24),
// then Loop (an address repeating at non-adjacent hops), then Unreachable
// (explicit ICMP-unreachable marker), otherwise Gap.
inline TraceOutcome classify_trace_outcome(Ipv4Addr target, std::span<const Hop> hops, bool unreachable_marker) {
  const Hop* last = nullptr;
  for (const auto& h : hops) {
    if (h.addr) last = &h;
  }
  if (last && BlockId::containing(target).contains(*last->addr)) return TraceOutcome::Success;

  std::unordered_map<std::uint32_t, std::uint32_t> last_seen;
  for (const auto& h : hops) {
    if (!h.addr) continue;
    auto [it, inserted] = last_seen.try_emplace(h.addr->value, h.index);
    if (!inserted) {
      if (h.index > it->second + 1) return TraceOutcome::Loop;
      it->second = h.index;
    }
  }
  if (unreachable_marker) return TraceOutcome::Unreachable;
  return TraceOutcome::Gap;
}

struct TracerouteRecord {
  std::string vp;
  Ipv4Addr target;
  std::int64_t t = 0;
  std::vector<Hop> hops;
  bool unreachable_marker = false;
  TraceOutcome outcome = TraceOutcome::Gap;

  std::optional<Ipv4Addr> last_responding() const {
    for (auto it = hops.rbegin(); it != hops.rend(); ++it) {
      if (it->addr) return it->addr;
    }
    return std::nullopt;
  }

  bool failed() const { return outcome == TraceOutcome::Unreachable || outcome == TraceOutcome::Loop; }

  friend bool operator==(const TracerouteRecord&, const TracerouteRecord&) = default;
};

}  // namespace peninsula

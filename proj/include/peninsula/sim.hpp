#pragma once

// Synthetic scenarios with planted outages, peninsulas and islands. A
// scenario is a set of regions (contiguous runs of /24 blocks under one
// routed prefix) and a schedule of events on those regions. Generation
// produces observations, traceroutes, a prefix table and the truth ledger the
// detectors are scored against.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "peninsula/confusion.hpp"
#include "peninsula/csv.hpp"
#include "peninsula/detect.hpp"
#include "peninsula/error.hpp"
#include "peninsula/events.hpp"
#include "peninsula/model.hpp"
#include "peninsula/parallel.hpp"
#include "peninsula/prefix_table.hpp"

namespace peninsula::sim {

enum class PlantKind { Outage, Peninsula, Island };

inline std::string_view to_string(PlantKind k) {
  switch (k) {
    case PlantKind::Outage: return "outage";
    case PlantKind::Peninsula: return "peninsula";
    case PlantKind::Island: return "island";
  }
  return "?";
}

// Where failed traceroutes stop: at the origin AS edge, or one AS earlier.
enum class HaltSite { Edge, Upstream };

struct VpSpec {
  std::string id;
  std::string country = std::string(kUnknownCountry);
  std::uint32_t lag = 0;  // rounds
};

struct RegionSpec {
  std::string name;
  BlockId base;
  std::size_t blocks = 0;
  int prefix_len = 24;
  std::uint32_t asn = 0;
  std::vector<std::uint32_t> upstreams;  // failed traces halt in the first, successful ones use the last
  std::string country;                   // optional block country label
};

struct PlantedEvent {
  std::string region;  // may be empty for an island that holds no blocks
  PlantKind kind = PlantKind::Outage;
  std::uint32_t start = 0;
  std::uint32_t end = 0;  // inclusive
  // Peninsula: VPs that still reach the region. Island: VPs inside it.
  // Entries are VP ids or "country:XX".
  std::vector<std::string> vps;
  HaltSite halt = HaltSite::Edge;
};

struct Scenario {
  std::string name = "scenario";
  std::uint32_t rounds = 0;
  std::int64_t round_width = 660;
  std::int64_t epoch = 0;
  double p_fd = 0.0;
  double p_fu = 0.0;
  std::uint32_t trace_interval_rounds = 0;  // 0: one day's worth of rounds
  std::vector<VpSpec> vps;
  std::vector<RegionSpec> regions;
  std::vector<PlantedEvent> events;

  RoundConfig round_config() const { return RoundConfig{epoch, round_width}; }
  std::uint32_t trace_interval() const {
    if (trace_interval_rounds > 0) return trace_interval_rounds;
    return static_cast<std::uint32_t>(std::max<std::int64_t>(1, (86400 + round_width / 2) / round_width));
  }
};

// ------------------------------------------------------------ scenario file

namespace detail {

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == '+' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

template <class Int>
Int parse_int_value(std::string_view v, std::size_t line, std::string_view key) {
  auto x = csv::parse_int<Int>(v);
  if (!x) throw ParseError(line, "bad integer for '" + std::string(key) + "': " + std::string(v));
  return *x;
}

inline double parse_double_value(std::string_view v, std::size_t line, std::string_view key) {
  auto x = csv::parse_double(v);
  if (!x) throw ParseError(line, "bad number for '" + std::string(key) + "': " + std::string(v));
  return *x;
}

}  // namespace detail

// Sections: [scenario], [vp ID], [region NAME], and any number of [event].
// Lines are `key = value`; '#' starts a comment.
inline Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  enum class Section { None, Scenario, Vp, Region, Event } section = Section::None;
  std::string line;
  std::size_t n = 0;
  std::set<std::string> seen_keys;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto text = csv::trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(n, "unterminated section header");
      auto inner = csv::trim(text.substr(1, text.size() - 2));
      auto sp = inner.find(' ');
      auto head = inner.substr(0, sp);
      auto arg = sp == std::string_view::npos ? std::string_view{} : csv::trim(inner.substr(sp + 1));
      seen_keys.clear();
      if (head == "scenario") {
        section = Section::Scenario;
        if (!arg.empty()) sc.name = std::string(arg);
      } else if (head == "vp") {
        if (arg.empty()) throw ParseError(n, "[vp] needs an id");
        section = Section::Vp;
        sc.vps.emplace_back();
        sc.vps.back().id = std::string(arg);
      } else if (head == "region") {
        if (arg.empty()) throw ParseError(n, "[region] needs a name");
        section = Section::Region;
        sc.regions.emplace_back();
        sc.regions.back().name = std::string(arg);
      } else if (head == "event") {
        section = Section::Event;
        sc.events.emplace_back();
      } else {
        throw ParseError(n, "unknown section [" + std::string(head) + "]");
      }
      continue;
    }
    auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(n, "expected key = value");
    auto key = csv::trim(text.substr(0, eq));
    auto value = csv::trim(text.substr(eq + 1));
    if (!seen_keys.insert(std::string(key)).second) throw ParseError(n, "duplicate key '" + std::string(key) + "'");
    auto unknown = [&] { return ParseError(n, "unknown key '" + std::string(key) + "'"); };
    switch (section) {
      case Section::None: throw ParseError(n, "key outside of any section");
      case Section::Scenario:
        if (key == "name") sc.name = std::string(value);
        else if (key == "rounds") sc.rounds = detail::parse_int_value<std::uint32_t>(value, n, key);
        else if (key == "round_width") sc.round_width = detail::parse_int_value<std::int64_t>(value, n, key);
        else if (key == "epoch") sc.epoch = detail::parse_int_value<std::int64_t>(value, n, key);
        else if (key == "p_fd") sc.p_fd = detail::parse_double_value(value, n, key);
        else if (key == "p_fu") sc.p_fu = detail::parse_double_value(value, n, key);
        else if (key == "trace_interval") sc.trace_interval_rounds = detail::parse_int_value<std::uint32_t>(value, n, key);
        else throw unknown();
        break;
      case Section::Vp: {
        auto& vp = sc.vps.back();
        if (key == "country") vp.country = std::string(value);
        else if (key == "lag") vp.lag = detail::parse_int_value<std::uint32_t>(value, n, key);
        else throw unknown();
        break;
      }
      case Section::Region: {
        auto& r = sc.regions.back();
        if (key == "base") {
          auto b = BlockId::parse(value);
          if (!b) throw ParseError(n, "region base must be a /24 block address: " + std::string(value));
          r.base = *b;
        } else if (key == "blocks") {
          r.blocks = detail::parse_int_value<std::size_t>(value, n, key);
        } else if (key == "prefix_len") {
          r.prefix_len = detail::parse_int_value<int>(value, n, key);
        } else if (key == "asn") {
          r.asn = detail::parse_int_value<std::uint32_t>(value, n, key);
        } else if (key == "upstreams") {
          for (const auto& u : detail::split_list(value)) r.upstreams.push_back(detail::parse_int_value<std::uint32_t>(u, n, key));
        } else if (key == "country") {
          r.country = std::string(value);
        } else {
          throw unknown();
        }
        break;
      }
      case Section::Event: {
        auto& e = sc.events.back();
        if (key == "region") {
          e.region = std::string(value);
        } else if (key == "kind") {
          if (value == "outage") e.kind = PlantKind::Outage;
          else if (value == "peninsula") e.kind = PlantKind::Peninsula;
          else if (value == "island") e.kind = PlantKind::Island;
          else throw ParseError(n, "unknown event kind '" + std::string(value) + "'");
        } else if (key == "start") {
          e.start = detail::parse_int_value<std::uint32_t>(value, n, key);
        } else if (key == "end") {
          e.end = detail::parse_int_value<std::uint32_t>(value, n, key);
        } else if (key == "up" || key == "vps") {
          e.vps = detail::split_list(value);
        } else if (key == "halt") {
          if (value == "edge") e.halt = HaltSite::Edge;
          else if (value == "upstream") e.halt = HaltSite::Upstream;
          else throw ParseError(n, "halt must be edge or upstream");
        } else {
          throw unknown();
        }
        break;
      }
    }
  }
  return sc;
}

inline Scenario parse_scenario(const std::string& path) {
  auto in = csv::open_input(path);
  return parse_scenario(in);
}

inline void write_scenario(std::ostream& out, const Scenario& sc) {
  out << "[scenario]\nname = " << sc.name << "\nrounds = " << sc.rounds << "\nround_width = " << sc.round_width
      << "\nepoch = " << sc.epoch << "\np_fd = " << csv::format_double(sc.p_fd)
      << "\np_fu = " << csv::format_double(sc.p_fu) << "\n";
  if (sc.trace_interval_rounds) out << "trace_interval = " << sc.trace_interval_rounds << "\n";
  for (const auto& v : sc.vps) out << "\n[vp " << v.id << "]\ncountry = " << v.country << "\nlag = " << v.lag << "\n";
  for (const auto& r : sc.regions) {
    out << "\n[region " << r.name << "]\nbase = " << r.base.base().to_string() << "\nblocks = " << r.blocks
        << "\nprefix_len = " << r.prefix_len << "\nasn = " << r.asn << "\n";
    if (!r.upstreams.empty()) {
      out << "upstreams = ";
      for (std::size_t i = 0; i < r.upstreams.size(); ++i) out << (i ? ", " : "") << r.upstreams[i];
      out << "\n";
    }
    if (!r.country.empty()) out << "country = " << r.country << "\n";
  }
  for (const auto& e : sc.events) {
    out << "\n[event]\n";
    if (!e.region.empty()) out << "region = " << e.region << "\n";
    out << "kind = " << to_string(e.kind) << "\nstart = " << e.start << "\nend = " << e.end << "\n";
    if (!e.vps.empty()) {
      out << (e.kind == PlantKind::Island ? "vps = " : "up = ");
      for (std::size_t i = 0; i < e.vps.size(); ++i) out << (i ? ", " : "") << e.vps[i];
      out << "\n";
    }
    out << "halt = " << (e.halt == HaltSite::Edge ? "edge" : "upstream") << "\n";
  }
}

// ---------------------------------------------------------------- compiling

// A validated scenario in index form.
struct Compiled {
  std::vector<VantagePoint> vps;
  std::vector<std::uint32_t> lags;
  std::vector<BlockId> blocks;                 // sorted
  std::vector<std::size_t> region_of_block;    // parallel to blocks
  std::vector<std::size_t> event_region;       // per event; regions.size() when none
  std::vector<VpSet> event_vps;                // resolved per event
  std::vector<std::vector<int>> region_event;  // [region][round] -> event index or -1
  std::vector<std::vector<int>> vp_island;     // [round][vp] -> island event index or -1
};

inline VpSet resolve_vps(const Scenario& sc, const std::vector<std::string>& tokens, std::size_t event_index) {
  VpSet out;
  for (const auto& tok : tokens) {
    if (tok.rfind("country:", 0) == 0) {
      auto c = tok.substr(8);
      bool any = false;
      for (std::size_t v = 0; v < sc.vps.size(); ++v) {
        if (sc.vps[v].country == c) {
          out.insert(v);
          any = true;
        }
      }
      if (!any) throw InputError("event " + std::to_string(event_index) + ": no vantage point in country " + c);
      continue;
    }
    auto it = std::find_if(sc.vps.begin(), sc.vps.end(), [&](const VpSpec& v) { return v.id == tok; });
    if (it == sc.vps.end()) throw InputError("event " + std::to_string(event_index) + ": unknown vantage point " + tok);
    out.insert(static_cast<std::size_t>(it - sc.vps.begin()));
  }
  return out;
}

inline Compiled compile(const Scenario& sc) {
  if (sc.rounds == 0) throw InputError("scenario needs at least one round");
  if (sc.round_width <= 0) throw InputError("round_width must be positive");
  if (!(sc.p_fd >= 0.0 && sc.p_fd < 0.5) || !(sc.p_fu >= 0.0 && sc.p_fu < 0.5)) {
    throw InputError("noise probabilities must lie in [0, 0.5)");
  }
  if (sc.vps.empty()) throw InputError("scenario needs at least one vantage point");
  Compiled c;
  std::set<std::string> ids;
  for (const auto& v : sc.vps) {
    if (!ids.insert(v.id).second) throw InputError("duplicate vantage point " + v.id);
    VantagePoint vp{v.id, v.country};
    validate(vp);
    c.vps.push_back(vp);
    c.lags.push_back(v.lag);
  }

  std::set<std::string> names;
  std::vector<std::pair<BlockId, std::size_t>> blocks;
  for (std::size_t ri = 0; ri < sc.regions.size(); ++ri) {
    const auto& r = sc.regions[ri];
    if (!names.insert(r.name).second) throw InputError("duplicate region " + r.name);
    if (r.asn == 0) throw InputError("region " + r.name + " needs an asn");
    if (r.prefix_len < 8 || r.prefix_len > 24) throw InputError("region " + r.name + ": prefix_len must be in [8, 24]");
    const auto span = std::size_t{1} << (24 - r.prefix_len);
    if (r.blocks > span) throw InputError("region " + r.name + ": blocks exceed its prefix");
    if ((r.base.base().value & ~Prefix::mask_for(r.prefix_len)) != 0) {
      throw InputError("region " + r.name + ": base is not aligned to /" + std::to_string(r.prefix_len));
    }
    for (std::size_t i = 0; i < r.blocks; ++i) {
      blocks.emplace_back(BlockId(Ipv4Addr{r.base.base().value + static_cast<std::uint32_t>(i << 8)}), ri);
    }
  }
  std::sort(blocks.begin(), blocks.end());
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i].first == blocks[i - 1].first) {
      throw InputError("regions overlap at block " + blocks[i].first.to_string());
    }
  }
  for (const auto& [b, ri] : blocks) {
    c.blocks.push_back(b);
    c.region_of_block.push_back(ri);
  }
  if (c.blocks.empty()) throw InputError("scenario needs at least one block");

  c.region_event.assign(sc.regions.size(), std::vector<int>(sc.rounds, -1));
  c.vp_island.assign(sc.rounds, std::vector<int>(sc.vps.size(), -1));
  for (std::size_t ei = 0; ei < sc.events.size(); ++ei) {
    const auto& e = sc.events[ei];
    const auto tag = "event " + std::to_string(ei) + ": ";
    if (e.start > e.end || e.end >= sc.rounds) throw InputError(tag + "span outside the simulation horizon");
    std::size_t ri = sc.regions.size();
    if (!e.region.empty()) {
      auto it = std::find_if(sc.regions.begin(), sc.regions.end(), [&](const RegionSpec& r) { return r.name == e.region; });
      if (it == sc.regions.end()) throw InputError(tag + "unknown region " + e.region);
      ri = static_cast<std::size_t>(it - sc.regions.begin());
    } else if (e.kind != PlantKind::Island) {
      throw InputError(tag + "needs a region");
    }
    auto set = resolve_vps(sc, e.vps, ei);
    if (e.kind == PlantKind::Peninsula && (set.empty() || set.size() == sc.vps.size())) {
      throw InputError(tag + "peninsula up-set must be a non-empty proper subset of the vantage points");
    }
    if (e.kind == PlantKind::Island && set.empty()) throw InputError(tag + "island needs at least one vantage point");
    if (e.kind == PlantKind::Outage && !set.empty()) throw InputError(tag + "outage takes no vantage points");
    for (auto r = e.start; r <= e.end; ++r) {
      if (ri < sc.regions.size()) {
        auto& slot = c.region_event[ri][r];
        if (slot >= 0) throw InputError(tag + "overlaps event " + std::to_string(slot) + " on region " + e.region);
        slot = static_cast<int>(ei);
      }
      if (e.kind == PlantKind::Island) {
        set.for_each([&](std::size_t v) {
          auto& isl = c.vp_island[r][v];
          if (isl >= 0) throw InputError(tag + "vantage point " + sc.vps[v].id + " is already in island event " + std::to_string(isl));
          isl = static_cast<int>(ei);
        });
      }
    }
    c.event_region.push_back(ri);
    c.event_vps.push_back(std::move(set));
  }
  return c;
}

inline void validate(const Scenario& sc) { (void)compile(sc); }

// ------------------------------------------------------------- ground truth

// What VP v would see for block b at round r with no noise and no lag.
inline bool true_up(const Scenario& sc, const Compiled& c, std::size_t v, std::size_t b, std::uint32_t r) {
  const auto region = c.region_of_block[b];
  if (int isl = c.vp_island[r][v]; isl >= 0) return c.event_region[static_cast<std::size_t>(isl)] == region;
  const int e = c.region_event[region][r];
  if (e < 0) return true;
  switch (sc.events[static_cast<std::size_t>(e)].kind) {
    case PlantKind::Outage: return false;
    case PlantKind::Peninsula: return c.event_vps[static_cast<std::size_t>(e)].contains(v);
    case PlantKind::Island: return false;
  }
  return true;
}

struct TruthLedger {
  std::vector<BlockId> blocks;
  std::uint32_t rounds = 0;
  std::vector<ClassifiedRound> cells;  // (block, round) order
  std::vector<VpSet> islanded;         // [round]

  const ClassifiedRound& at(std::size_t b, std::uint32_t r) const { return cells[b * rounds + r]; }
};

// Island regions are Island; elsewhere the kind follows from which
// non-islanded VPs truly reach the block.
inline TruthLedger truth_ledger(const Scenario& sc, const Compiled& c) {
  TruthLedger t;
  t.blocks = c.blocks;
  t.rounds = sc.rounds;
  t.cells.resize(c.blocks.size() * sc.rounds);
  t.islanded.resize(sc.rounds);
  for (std::uint32_t r = 0; r < sc.rounds; ++r) {
    for (std::size_t v = 0; v < c.vps.size(); ++v) {
      if (c.vp_island[r][v] >= 0) t.islanded[r].insert(v);
    }
  }
  for (std::size_t b = 0; b < c.blocks.size(); ++b) {
    const auto region = c.region_of_block[b];
    for (std::uint32_t r = 0; r < sc.rounds; ++r) {
      auto& cell = t.cells[b * sc.rounds + r];
      cell.block = c.blocks[b];
      cell.round = r;
      const int e = c.region_event[region][r];
      if (e >= 0 && sc.events[static_cast<std::size_t>(e)].kind == PlantKind::Island) {
        cell.kind = EventKind::Island;
        cell.up_set = c.event_vps[static_cast<std::size_t>(e)];
        continue;
      }
      VpSet up;
      std::uint32_t valid = 0;
      for (std::size_t v = 0; v < c.vps.size(); ++v) {
        if (t.islanded[r].contains(v)) continue;
        ++valid;
        if (true_up(sc, c, v, b, r)) up.insert(v);
      }
      if (valid == 0) continue;
      if (up.empty()) {
        cell.kind = EventKind::Outage;
      } else if (up.size() == valid) {
        cell.kind = EventKind::AllUp;
        cell.up_set = std::move(up);
      } else {
        cell.kind = EventKind::Peninsula;
        cell.up_set = std::move(up);
      }
    }
  }
  return t;
}

inline std::vector<Event> truth_events(const TruthLedger& t, std::int64_t round_width) {
  return build_events(std::span<const ClassifiedRound>(t.cells), EventBuildConfig{round_width, 0});
}

inline std::vector<IslandEvent> truth_vp_islands(const TruthLedger& t, std::size_t vp_count, std::int64_t round_width) {
  std::vector<IslandEvent> out;
  for (std::size_t v = 0; v < vp_count; ++v) {
    std::optional<IslandEvent> open;
    for (std::uint32_t r = 0; r < t.rounds; ++r) {
      if (t.islanded[r].contains(v)) {
        if (!open) open = IslandEvent{v, EventKind::Island, r, r, 0.0, 0};
        open->end_round = r;
      } else if (open) {
        open->duration_s = std::int64_t{open->rounds()} * round_width;
        out.push_back(*open);
        open.reset();
      }
    }
    if (open) {
      open->duration_s = std::int64_t{open->rounds()} * round_width;
      out.push_back(*open);
    }
  }
  return out;
}

// --------------------------------------------------------------- generation

struct Generated {
  RoundConfig round_config;
  RoundMatrix observations;
  std::vector<TracerouteRecord> traces;  // ordered by (target, t, vp)
  PrefixTable prefixes;
  std::map<BlockId, std::string> block_countries;
  TruthLedger truth;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace detail {

inline Ipv4Addr transit_infra(std::size_t i) { return Ipv4Addr{(100u << 24) | (64u << 16) | (static_cast<std::uint32_t>(i) << 8) | 1u}; }
inline Ipv4Addr origin_infra(std::size_t i) { return Ipv4Addr{(100u << 24) | (96u << 16) | (static_cast<std::uint32_t>(i) << 8) | 1u}; }
inline Ipv4Addr vp_gateway(std::size_t v) { return Ipv4Addr{(10u << 24) | (static_cast<std::uint32_t>(v & 0xffff) << 8) | 1u}; }

}  // namespace detail

// Routed prefixes for the regions, one /24 of infrastructure per origin AS
// (100.96.i.0/24) and per transit AS (100.64.i.0/24).
inline PrefixTable scenario_prefixes(const Scenario& sc, std::map<std::uint32_t, std::size_t>* transit_index = nullptr) {
  PrefixTable t;
  std::map<std::uint32_t, std::size_t> transits;
  for (const auto& r : sc.regions) {
    for (auto u : r.upstreams) transits.emplace(u, 0);
  }
  if (transits.size() > 256 || sc.regions.size() > 256) throw InputError("too many ASes for the synthetic address plan");
  std::size_t i = 0;
  for (auto& [asn, idx] : transits) {
    idx = i;
    t.insert(Prefix{Ipv4Addr{detail::transit_infra(i).value & ~0xffu}, 24}, asn);
    ++i;
  }
  for (std::size_t ri = 0; ri < sc.regions.size(); ++ri) {
    const auto& r = sc.regions[ri];
    t.insert(Prefix{r.base.base(), static_cast<std::uint8_t>(r.prefix_len)}, r.asn);
    t.insert(Prefix{Ipv4Addr{detail::origin_infra(ri).value & ~0xffu}, 24}, r.asn);
  }
  if (transit_index) *transit_index = std::move(transits);
  return t;
}

inline Generated generate(const Scenario& sc, std::uint64_t seed, unsigned jobs = 1) {
  const auto c = compile(sc);
  Generated g;
  g.round_config = sc.round_config();
  std::map<std::uint32_t, std::size_t> transit_index;
  g.prefixes = scenario_prefixes(sc, &transit_index);
  for (std::size_t b = 0; b < c.blocks.size(); ++b) {
    auto route = g.prefixes.lookup(c.blocks[b]);
    const auto& region = sc.regions[c.region_of_block[b]];
    if (!route || route->prefix != Prefix{region.base.base(), static_cast<std::uint8_t>(region.prefix_len)}) {
      throw InputError("block " + c.blocks[b].to_string() + " does not route to its region's prefix");
    }
    if (!region.country.empty()) g.block_countries[c.blocks[b]] = region.country;
  }

  // Observations: one independent random stream per block so the result
  // does not depend on how blocks are sharded.
  RoundMatrixBuilder builder(c.vps, c.blocks, sc.rounds);
  const auto nvp = c.vps.size();
  parallel_for(c.blocks.size(), jobs, [&](std::size_t b) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(b + 1)));
    for (std::uint32_t r = 0; r < sc.rounds; ++r) {
      for (std::size_t v = 0; v < nvp; ++v) {
        const auto seen_round = r >= c.lags[v] ? r - c.lags[v] : 0;
        bool up = true_up(sc, c, v, b, seen_round);
        const double u = unit_uniform(rng);
        if (up && u < sc.p_fd) up = false;
        else if (!up && u < sc.p_fu) up = true;
        builder.set(b, r, v, up ? ReachState::Up : ReachState::Down);
      }
    }
  });
  g.observations = std::move(builder).build();

  // Traceroutes toward every block of an affected region, one per VP per
  // trace interval across the event.
  const auto interval = sc.trace_interval();
  for (std::size_t ei = 0; ei < sc.events.size(); ++ei) {
    const auto& e = sc.events[ei];
    const auto ri = c.event_region[ei];
    if (ri >= sc.regions.size()) continue;
    const auto& region = sc.regions[ri];
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
      if (c.region_of_block[b] != ri) continue;
      const Ipv4Addr target{c.blocks[b].base().value + 1};
      for (auto r = e.start; r <= e.end; r += interval) {
        for (std::size_t v = 0; v < nvp; ++v) {
          TracerouteRecord tr;
          tr.vp = c.vps[v].id;
          tr.target = target;
          tr.t = g.round_config.start_of(r) + static_cast<std::int64_t>(v % static_cast<std::size_t>(sc.round_width));
          std::vector<std::optional<Ipv4Addr>> path{detail::vp_gateway(v)};
          const bool reach = true_up(sc, c, v, b, r);
          if (reach) {
            if (!region.upstreams.empty()) path.push_back(detail::transit_infra(transit_index[region.upstreams.back()]));
            path.push_back(detail::origin_infra(ri));
            path.push_back(target);
          } else {
            if (!region.upstreams.empty()) path.push_back(detail::transit_infra(transit_index[region.upstreams.front()]));
            if (e.halt == HaltSite::Edge || region.upstreams.empty()) path.push_back(detail::origin_infra(ri));
            path.push_back(std::nullopt);
            path.push_back(std::nullopt);
            tr.unreachable_marker = true;
          }
          for (std::size_t h = 0; h < path.size(); ++h) tr.hops.push_back(Hop{static_cast<std::uint32_t>(h + 1), path[h]});
          tr.outcome = classify_trace_outcome(tr.target, tr.hops, tr.unreachable_marker);
          g.traces.push_back(std::move(tr));
        }
      }
    }
  }
  std::sort(g.traces.begin(), g.traces.end(), [](const TracerouteRecord& a, const TracerouteRecord& b) {
    return std::tie(a.target, a.t, a.vp) < std::tie(b.target, b.t, b.vp);
  });
  g.truth = truth_ledger(sc, c);
  return g;
}

// ------------------------------------------------------------------ scoring

struct KindScore {
  std::string kind;
  ConfusionMatrix cm;  // tn is always 0
};

namespace detail {

struct Span {
  std::size_t key = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
};

// tp: truths overlapped by a detection; fn: the rest; fp: detections
// overlapping no truth.
inline ConfusionMatrix match_spans(std::vector<Span> truth, std::vector<Span> found) {
  auto order = [](const Span& a, const Span& b) { return std::tie(a.key, a.start) < std::tie(b.key, b.start); };
  std::sort(truth.begin(), truth.end(), order);
  std::sort(found.begin(), found.end(), order);
  auto overlaps_any = [&](const Span& s, const std::vector<Span>& pool) {
    auto it = std::lower_bound(pool.begin(), pool.end(), s.key, [](const Span& p, std::size_t k) { return p.key < k; });
    for (; it != pool.end() && it->key == s.key && it->start <= s.end; ++it) {
      if (it->end >= s.start) return true;
    }
    return false;
  };
  ConfusionMatrix cm;
  for (const auto& t : truth) ++(overlaps_any(t, found) ? cm.tp : cm.fn);
  for (const auto& f : found) {
    if (!overlaps_any(f, truth)) ++cm.fp;
  }
  return cm;
}

}  // namespace detail

inline const std::vector<EventKind>& scored_block_kinds() {
  static const std::vector<EventKind> k{EventKind::AllUp, EventKind::Outage, EventKind::Peninsula, EventKind::Island};
  return k;
}

// Per-kind span-overlap scores for block events, plus "vp_island" for
// observer islands (Island and AddressIsland detections both count).
inline std::vector<KindScore> score(std::span<const Event> detected, std::span<const IslandEvent> detected_islands,
                                    const TruthLedger& truth, std::size_t vp_count, std::int64_t round_width) {
  std::map<BlockId, std::size_t> index;
  for (std::size_t i = 0; i < truth.blocks.size(); ++i) index.emplace(truth.blocks[i], i);
  auto key_of = [&](BlockId b) {
    auto it = index.find(b);
    return it == index.end() ? SIZE_MAX : it->second;
  };
  const auto truth_block_events = truth_events(truth, round_width);
  std::vector<KindScore> out;
  for (auto kind : scored_block_kinds()) {
    std::vector<detail::Span> t, f;
    for (const auto& e : truth_block_events) {
      if (e.kind == kind) t.push_back({key_of(e.block), e.start_round, e.end_round});
    }
    for (const auto& e : detected) {
      if (e.kind == kind) f.push_back({key_of(e.block), e.start_round, e.end_round});
    }
    out.push_back({std::string(to_string(kind)), detail::match_spans(std::move(t), std::move(f))});
  }
  std::vector<detail::Span> t, f;
  for (const auto& e : truth_vp_islands(truth, vp_count, round_width)) t.push_back({e.vp, e.start_round, e.end_round});
  for (const auto& e : detected_islands) f.push_back({e.vp, e.start_round, e.end_round});
  out.push_back({"vp_island", detail::match_spans(std::move(t), std::move(f))});
  return out;
}

// ----------------------------------------------------------------- fixtures

inline std::vector<VpSpec> standard_vps() {
  return {{"W", "US", 0}, {"C", "US", 0}, {"J", "JP", 0}, {"G", "GR", 0}, {"E", "US", 0}, {"N", "NL", 0}};
}

// One customer AS dual-homed to two transits. During the event the first
// transit blackholes the customer and only W, which routes through the
// second, still reaches it, for 17 rounds (just over three hours).
inline Scenario fixture_polish() {
  Scenario sc;
  sc.name = "polish";
  sc.rounds = 96;
  sc.epoch = 1'600'000'000 - 1'600'000'000 % 660;
  sc.vps = standard_vps();
  sc.regions.push_back({"core", *BlockId::parse("20.0.0.0"), 200, 16, 3356, {1299}, ""});
  sc.regions.push_back({"customer", *BlockId::parse("193.0.0.0"), 4, 22, 21021, {174, 6453}, "PL"});
  PlantedEvent e;
  e.region = "customer";
  e.kind = PlantKind::Peninsula;
  e.start = 40;
  e.end = 56;
  e.vps = {"W"};
  e.halt = HaltSite::Upstream;
  sc.events.push_back(e);
  return sc;
}

struct RandomScenarioConfig {
  std::size_t blocks = 600;
  std::uint32_t rounds = 300;
  double noise = 0.0;
  std::uint32_t min_event_rounds = 1;
  std::uint32_t max_event_rounds = 40;
  std::size_t event_regions = 8;
  std::size_t island_events = 2;
};

// Mixed outages and peninsulas on small regions (at most 30% of blocks in
// total) plus islands of one VP each. Island regions stay under 1% of the
// responsive core so their observers stay below the long-event refinement bound.
inline Scenario random_scenario(std::uint64_t seed, const RandomScenarioConfig& cfg = {}) {
  if (cfg.blocks < 100 || cfg.blocks > 65536) throw InputError("random scenario needs 100..65536 blocks");
  if (cfg.min_event_rounds == 0 || cfg.min_event_rounds > cfg.max_event_rounds) throw InputError("bad event lengths");
  if (cfg.rounds < 2 * cfg.max_event_rounds + 4) throw InputError("horizon too short for the event lengths");
  if (cfg.island_events > 6 || cfg.event_regions > 32) throw InputError("too many planted events");
  std::mt19937_64 rng(splitmix64(seed));
  auto uniform = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng() % (hi - lo + 1); };

  Scenario sc;
  sc.name = "random-" + std::to_string(seed);
  sc.rounds = cfg.rounds;
  sc.epoch = 1'600'000'000 - 1'600'000'000 % 660;
  sc.p_fd = sc.p_fu = cfg.noise;
  sc.vps = standard_vps();

  const std::size_t event_budget = cfg.blocks * 3 / 10;
  const std::size_t per_region = std::clamp<std::size_t>(event_budget / std::max<std::size_t>(cfg.event_regions, 1), 1, 8);
  const std::size_t island_cap = cfg.blocks / 150;
  std::size_t used = 0;
  auto add_events = [&](const std::string& region, std::uint32_t start_floor) {
    std::uint32_t cursor = start_floor;
    const auto count = uniform(1, 2);
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto len = static_cast<std::uint32_t>(uniform(cfg.min_event_rounds, cfg.max_event_rounds));
      if (cursor + len + 2 >= cfg.rounds) break;
      const auto start = static_cast<std::uint32_t>(uniform(cursor, std::min<std::uint64_t>(cursor + cfg.rounds / 3, cfg.rounds - len - 1)));
      PlantedEvent e;
      e.region = region;
      e.start = start;
      e.end = start + len - 1;
      e.halt = uniform(0, 1) ? HaltSite::Edge : HaltSite::Upstream;
      if (uniform(0, 1)) {
        e.kind = PlantKind::Peninsula;
        const auto mask = uniform(1, (1u << sc.vps.size()) - 2);
        for (std::size_t v = 0; v < sc.vps.size(); ++v) {
          if (mask >> v & 1) e.vps.push_back(sc.vps[v].id);
        }
      } else {
        e.kind = PlantKind::Outage;
      }
      sc.events.push_back(e);
      cursor = e.end + 3;
    }
  };

  for (std::size_t i = 0; i < cfg.event_regions; ++i) {
    const auto n = static_cast<std::size_t>(uniform(2, per_region));
    if (used + n > event_budget) break;
    used += n;
    const std::string name = "ev" + std::to_string(i);
    sc.regions.push_back({name, BlockId(Ipv4Addr{(30u << 24) | static_cast<std::uint32_t>(i * 8) << 8}), n, 21,
                          static_cast<std::uint32_t>(64500 + i), {uniform(0, 1) ? 174u : 3356u, 6453u}, ""});
    add_events(name, 0);
  }

  std::vector<std::size_t> island_vps(sc.vps.size());
  for (std::size_t v = 0; v < island_vps.size(); ++v) island_vps[v] = v;
  std::shuffle(island_vps.begin(), island_vps.end(), rng);
  for (std::size_t i = 0; i < cfg.island_events; ++i) {
    const auto n = static_cast<std::size_t>(uniform(0, std::min<std::size_t>(island_cap, 3)));
    PlantedEvent e;
    e.kind = PlantKind::Island;
    e.vps = {sc.vps[island_vps[i]].id};
    e.halt = HaltSite::Upstream;
    const auto len = static_cast<std::uint32_t>(uniform(cfg.min_event_rounds, cfg.max_event_rounds));
    e.start = static_cast<std::uint32_t>(uniform(0, cfg.rounds - len));
    e.end = e.start + len - 1;
    if (n > 0) {
      const std::string name = "isl" + std::to_string(i);
      sc.regions.push_back({name, BlockId(Ipv4Addr{(40u << 24) | static_cast<std::uint32_t>(i * 8) << 8}), n, 21,
                            static_cast<std::uint32_t>(64600 + i), {1299}, ""});
      e.region = name;
      used += n;
    }
    sc.events.push_back(e);
  }

  const std::size_t core = cfg.blocks - used;
  int len = 24;
  while ((std::size_t{1} << (24 - len)) < core) --len;
  sc.regions.insert(sc.regions.begin(), RegionSpec{"core", BlockId(Ipv4Addr{20u << 24}), core, len, 3356, {1299}, ""});
  return sc;
}

}  // namespace peninsula::sim

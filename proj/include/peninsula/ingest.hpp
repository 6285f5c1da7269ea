#pragma once

// File readers and writers for observations, traceroutes, prefix tables and
// label files, plus the reliable-block filter applied before validation.
//
// Observation JSONL:  {"t": int, "vp": str, "block": "a.b.c.0", "state": "up"|"down"}
// Traceroute JSONL:   {"t": int, "vp": str, "target": "a.b.c.d",
//                      "hops": [str|null | {"ttl": int, "addr": str|null}, ...],
//                      "unreachable": bool, "outcome": str (optional, checked)}
// Prefix CSV:         prefix,asn
// Label CSVs:         vp,country | block,country | asn,industry | block

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "peninsula/csv.hpp"
#include "peninsula/error.hpp"
#include "peninsula/model.hpp"
#include "peninsula/prefix_table.hpp"

namespace peninsula {

struct ObservationRecord {
  std::int64_t t = 0;
  std::string vp;
  BlockId block;
  ReachState state = ReachState::Unknown;
};

struct ObservationOptions {
  // Defaults to the earliest timestamp in the input.
  std::optional<std::int64_t> epoch;
  std::int64_t width = 660;
  // When non-empty, fixes VP order and countries; records naming other VPs
  // are rejected. Otherwise VPs are the ids seen, sorted.
  std::vector<VantagePoint> declared_vps;
  // Minimum number of rounds in the resulting matrix.
  std::size_t min_rounds = 0;
};

struct ObservationIngest {
  RoundMatrix matrix;
  RoundConfig rounds;
  std::size_t records = 0;
  std::size_t superseded = 0;  // records overridden by a later one for the same cell
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  return *it;
}

inline nlohmann::json parse_json_line(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  return j;
}

inline ObservationRecord parse_observation(const std::string& text, std::size_t line) {
  auto j = parse_json_line(text, line);
  ObservationRecord r;
  const auto& t = require(j, "t", line);
  if (!t.is_number_integer()) throw ParseError(line, "'t' must be an integer");
  r.t = t.get<std::int64_t>();
  const auto& vp = require(j, "vp", line);
  if (!vp.is_string() || vp.get_ref<const std::string&>().empty()) throw ParseError(line, "'vp' must be a non-empty string");
  r.vp = vp.get<std::string>();
  const auto& block = require(j, "block", line);
  if (!block.is_string()) throw ParseError(line, "'block' must be a string");
  auto b = BlockId::parse(block.get_ref<const std::string&>());
  if (!b) throw ParseError(line, "'block' must be a /24-aligned dotted quad");
  r.block = *b;
  const auto& state = require(j, "state", line);
  if (state == "up") {
    r.state = ReachState::Up;
  } else if (state == "down") {
    r.state = ReachState::Down;
  } else {
    throw ParseError(line, "'state' must be \"up\" or \"down\"");
  }
  return r;
}

}  // namespace detail

// Bins observations into rounds. A later timestamp wins for a repeated
// (vp, block, round) cell; equal timestamps resolve to the later line.
inline ObservationIngest read_observations(std::istream& in, const ObservationOptions& opts = {}) {
  std::vector<ObservationRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (csv::trim(text).empty()) continue;
    records.push_back(detail::parse_observation(text, line));
  }

  ObservationIngest out;
  out.records = records.size();
  out.rounds.width = opts.width;
  if (opts.width <= 0) throw InputError("round width must be positive");
  if (opts.epoch) {
    out.rounds.epoch = *opts.epoch;
  } else if (!records.empty()) {
    out.rounds.epoch = std::min_element(records.begin(), records.end(), [](auto& a, auto& b) { return a.t < b.t; })->t;
  }

  std::vector<VantagePoint> vps = opts.declared_vps;
  if (vps.empty()) {
    std::set<std::string> ids;
    for (auto& r : records) ids.insert(r.vp);
    for (auto& id : ids) vps.push_back(VantagePoint{id, std::string(kUnknownCountry)});
  }
  std::map<std::string, std::size_t> vp_index;
  for (std::size_t i = 0; i < vps.size(); ++i) vp_index[vps[i].id] = i;

  std::vector<BlockId> blocks;
  std::size_t rounds = opts.min_rounds;
  std::vector<std::uint32_t> record_rounds(records.size());
  line = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (!vp_index.count(r.vp)) throw InputError("observation from undeclared vantage point '" + r.vp + "'");
    if (r.t < out.rounds.epoch) {
      throw InputError("observation at t=" + std::to_string(r.t) + " precedes epoch " +
                       std::to_string(out.rounds.epoch));
    }
    record_rounds[i] = out.rounds.round_of(r.t);
    rounds = std::max<std::size_t>(rounds, record_rounds[i] + 1);
    blocks.push_back(r.block);
  }

  RoundMatrixBuilder builder(std::move(vps), std::move(blocks), rounds);
  const auto& view = builder.view();
  std::vector<std::int64_t> stamp(view.blocks().size() * rounds * view.vp_count(),
                                  std::numeric_limits<std::int64_t>::min());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    auto b = *view.block_index(r.block);
    auto v = vp_index[r.vp];
    auto cell = (b * rounds + record_rounds[i]) * view.vp_count() + v;
    if (stamp[cell] != std::numeric_limits<std::int64_t>::min()) ++out.superseded;
    if (r.t >= stamp[cell]) {
      stamp[cell] = r.t;
      builder.set(b, record_rounds[i], v, r.state);
    }
  }
  out.matrix = std::move(builder).build();
  return out;
}

inline ObservationIngest read_observations(const std::filesystem::path& path, const ObservationOptions& opts = {}) {
  auto in = csv::open_input(path.string());
  return read_observations(in, opts);
}

// One line per known cell, ordered by (block, round, vp), stamped at the
// start of its round. Re-reading with the same epoch and VPs reproduces the
// matrix.
inline void write_observations(std::ostream& out, const RoundMatrix& m, const RoundConfig& rc) {
  std::vector<std::string> quoted;
  for (auto& vp : m.vps()) quoted.push_back(nlohmann::json(vp.id).dump());
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    auto block = m.blocks()[b].to_string();
    for (std::size_t r = 0; r < m.rounds(); ++r) {
      auto row = m.row(b, r);
      for (std::size_t v = 0; v < row.size(); ++v) {
        if (row[v] == ReachState::Unknown) continue;
        out << "{\"t\":" << rc.start_of(static_cast<std::uint32_t>(r)) << ",\"vp\":" << quoted[v]
            << ",\"block\":\"" << block << "\",\"state\":\"" << (row[v] == ReachState::Up ? "up" : "down")
            << "\"}\n";
      }
    }
  }
}

struct TraceIngest {
  std::vector<TracerouteRecord> records;
  std::size_t rejected_nonmonotone = 0;
  std::size_t rejected_outcome_mismatch = 0;

  std::size_t rejected() const { return rejected_nonmonotone + rejected_outcome_mismatch; }
};

namespace detail {

inline std::optional<Ipv4Addr> parse_hop_addr(const nlohmann::json& v, std::size_t line) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw ParseError(line, "hop address must be a string or null");
  auto a = Ipv4Addr::parse(v.get_ref<const std::string&>());
  if (!a) throw ParseError(line, "bad hop address '" + v.get<std::string>() + "'");
  return a;
}

}  // namespace detail

inline TraceIngest read_traceroutes(std::istream& in) {
  TraceIngest out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (csv::trim(text).empty()) continue;
    auto j = detail::parse_json_line(text, line);
    TracerouteRecord rec;
    const auto& t = detail::require(j, "t", line);
    if (!t.is_number_integer()) throw ParseError(line, "'t' must be an integer");
    rec.t = t.get<std::int64_t>();
    const auto& vp = detail::require(j, "vp", line);
    if (!vp.is_string()) throw ParseError(line, "'vp' must be a string");
    rec.vp = vp.get<std::string>();
    const auto& target = detail::require(j, "target", line);
    auto addr = target.is_string() ? Ipv4Addr::parse(target.get_ref<const std::string&>()) : std::nullopt;
    if (!addr) throw ParseError(line, "'target' must be a dotted quad");
    rec.target = *addr;
    const auto& hops = detail::require(j, "hops", line);
    if (!hops.is_array()) throw ParseError(line, "'hops' must be an array");
    bool monotone = true;
    std::uint32_t position = 0;
    for (const auto& h : hops) {
      ++position;
      Hop hop;
      if (h.is_object()) {
        const auto& ttl = detail::require(h, "ttl", line);
        if (!ttl.is_number_unsigned()) throw ParseError(line, "hop 'ttl' must be a non-negative integer");
        hop.index = ttl.get<std::uint32_t>();
        auto a = h.find("addr");
        hop.addr = a == h.end() ? std::nullopt : detail::parse_hop_addr(*a, line);
      } else {
        hop.index = position;
        hop.addr = detail::parse_hop_addr(h, line);
      }
      if (!rec.hops.empty() && hop.index <= rec.hops.back().index) monotone = false;
      rec.hops.push_back(hop);
    }
    if (auto u = j.find("unreachable"); u != j.end()) {
      if (!u->is_boolean()) throw ParseError(line, "'unreachable' must be a boolean");
      rec.unreachable_marker = u->get<bool>();
    }
    if (!monotone) {
      ++out.rejected_nonmonotone;
      continue;
    }
    rec.outcome = classify_trace_outcome(rec.target, rec.hops, rec.unreachable_marker);
    if (auto o = j.find("outcome"); o != j.end()) {
      auto declared = o->is_string() ? parse_trace_outcome(o->get_ref<const std::string&>()) : std::nullopt;
      if (!declared) throw ParseError(line, "unknown 'outcome' value");
      if (*declared != rec.outcome) {
        ++out.rejected_outcome_mismatch;
        continue;
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline TraceIngest read_traceroutes(const std::filesystem::path& path) {
  auto in = csv::open_input(path.string());
  return read_traceroutes(in);
}

inline void write_traceroutes(std::ostream& out, const std::vector<TracerouteRecord>& traces) {
  for (const auto& tr : traces) {
    out << "{\"t\":" << tr.t << ",\"vp\":" << nlohmann::json(tr.vp).dump() << ",\"target\":\""
        << tr.target.to_string() << "\",\"hops\":[";
    for (std::size_t i = 0; i < tr.hops.size(); ++i) {
      if (i) out << ',';
      if (tr.hops[i].addr) {
        out << '"' << tr.hops[i].addr->to_string() << '"';
      } else {
        out << "null";
      }
    }
    out << "],\"unreachable\":" << (tr.unreachable_marker ? "true" : "false") << ",\"outcome\":\""
        << to_string(tr.outcome) << "\"}\n";
  }
}

// Traces whose target /24 never appeared in the ever-active allowlist are
// dropped (they would fail against an empty address, not a filtered path).
inline std::vector<TracerouteRecord> filter_active_targets(std::vector<TracerouteRecord> traces,
                                                           const std::unordered_set<BlockId>& ever_active) {
  std::erase_if(traces, [&](const TracerouteRecord& t) { return !ever_active.count(BlockId::containing(t.target)); });
  return traces;
}

// One probe toward a fixed target (e.g. a root server identifier), for the
// k-target island test.
struct TargetProbe {
  std::int64_t t = 0;
  std::string vp;
  std::string target;
  bool ok = false;
};

inline std::vector<TargetProbe> read_target_probes(std::istream& in) {
  std::vector<TargetProbe> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (csv::trim(text).empty()) continue;
    auto j = detail::parse_json_line(text, line);
    TargetProbe p;
    const auto& t = detail::require(j, "t", line);
    if (!t.is_number_integer()) throw ParseError(line, "'t' must be an integer");
    p.t = t.get<std::int64_t>();
    const auto& vp = detail::require(j, "vp", line);
    const auto& target = detail::require(j, "target", line);
    const auto& ok = detail::require(j, "ok", line);
    if (!vp.is_string() || vp.get_ref<const std::string&>().empty()) throw ParseError(line, "'vp' must be a non-empty string");
    if (!target.is_string() || target.get_ref<const std::string&>().empty()) {
      throw ParseError(line, "'target' must be a non-empty string");
    }
    if (!ok.is_boolean()) throw ParseError(line, "'ok' must be a boolean");
    p.vp = vp.get<std::string>();
    p.target = target.get<std::string>();
    p.ok = ok.get<bool>();
    out.push_back(std::move(p));
  }
  return out;
}

struct PrefixIngest {
  PrefixTable table;
  std::size_t conflicting_duplicates = 0;
};

inline PrefixIngest read_prefix_table(std::istream& in) {
  PrefixIngest out;
  csv::Reader reader(in, {"prefix", "asn"});
  while (auto row = reader.next()) {
    auto prefix = Prefix::parse((*row)[0]);
    if (!prefix) throw ParseError(reader.line(), "bad prefix '" + (*row)[0] + "'");
    auto asn = csv::parse_int<std::uint32_t>((*row)[1]);
    if (!asn) throw ParseError(reader.line(), "bad asn '" + (*row)[1] + "'");
    if (out.table.insert(*prefix, *asn) == PrefixTable::InsertResult::ReplacedConflicting) {
      ++out.conflicting_duplicates;
    }
  }
  return out;
}

inline PrefixIngest read_prefix_table(const std::filesystem::path& path) {
  auto in = csv::open_input(path.string());
  return read_prefix_table(in);
}

inline void write_prefix_table(std::ostream& out, const PrefixTable& table) {
  out << "prefix,asn\n";
  for (const auto& e : table.entries()) out << e.prefix.to_string() << ',' << e.asn << '\n';
}

namespace detail {
inline std::string normalize_country(const std::string& c, std::size_t line) {
  if (c.empty() || c == kUnknownCountry || c == "unknown") return std::string(kUnknownCountry);
  if (!is_country_code(c)) throw ParseError(line, "bad country code '" + c + "'");
  return c;
}
}  // namespace detail

inline std::map<std::string, std::string> read_vp_countries(std::istream& in) {
  std::map<std::string, std::string> out;
  csv::Reader reader(in, {"vp", "country"});
  while (auto row = reader.next()) {
    if ((*row)[0].empty()) throw ParseError(reader.line(), "empty vp id");
    out[(*row)[0]] = detail::normalize_country((*row)[1], reader.line());
  }
  return out;
}

inline std::map<BlockId, std::string> read_block_countries(std::istream& in) {
  std::map<BlockId, std::string> out;
  csv::Reader reader(in, {"block", "country"});
  while (auto row = reader.next()) {
    auto b = BlockId::parse((*row)[0]);
    if (!b) throw ParseError(reader.line(), "bad block '" + (*row)[0] + "'");
    out[*b] = detail::normalize_country((*row)[1], reader.line());
  }
  return out;
}

inline std::map<std::uint32_t, std::string> read_asn_industries(std::istream& in) {
  std::map<std::uint32_t, std::string> out;
  csv::Reader reader(in, {"asn", "industry"});
  while (auto row = reader.next()) {
    auto asn = csv::parse_int<std::uint32_t>((*row)[0]);
    if (!asn) throw ParseError(reader.line(), "bad asn '" + (*row)[0] + "'");
    out[*asn] = (*row)[1];
  }
  return out;
}

inline std::unordered_set<BlockId> read_block_list(std::istream& in) {
  std::unordered_set<BlockId> out;
  csv::Reader reader(in, {"block"});
  while (auto row = reader.next()) {
    auto b = BlockId::parse((*row)[0]);
    if (!b) throw ParseError(reader.line(), "bad block '" + (*row)[0] + "'");
    out.insert(*b);
  }
  return out;
}

// Attaches countries to VPs. Every labeled VP must be one of `vps`.
inline std::vector<VantagePoint> with_countries(std::vector<VantagePoint> vps,
                                                const std::map<std::string, std::string>& countries) {
  for (const auto& [id, country] : countries) {
    auto it = std::find_if(vps.begin(), vps.end(), [&](const VantagePoint& v) { return v.id == id; });
    if (it == vps.end()) throw InputError("country label for unknown vantage point '" + id + "'");
    it->country = country;
  }
  return vps;
}

struct ReliabilityFilterConfig {
  double min_uptime_fraction = 0.85;
  std::size_t max_inconsistent_combinations = 10;
};

enum class DropReason { LowUptime, Flaky };

inline std::string_view to_string(DropReason r) { return r == DropReason::LowUptime ? "low-uptime" : "flaky"; }

struct ReliabilityReport {
  std::vector<BlockId> kept;
  std::vector<std::pair<BlockId, DropReason>> dropped;
};

// A block is reliable when every VP sees it Up in at least
// min_uptime_fraction of that VP's valid rounds, and the block shows no more
// than max_inconsistent_combinations distinct disagreement up-sets. A VP with
// no valid rounds for the block counts as zero uptime.
inline ReliabilityReport filter_reliable_blocks(const RoundMatrix& m, const ReliabilityFilterConfig& cfg = {}) {
  if (!(cfg.min_uptime_fraction > 0.0 && cfg.min_uptime_fraction <= 1.0)) {
    throw InputError("min_uptime_fraction must be in (0, 1]");
  }
  ReliabilityReport report;
  const auto nvp = m.vp_count();
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    std::vector<std::size_t> up(nvp, 0), valid(nvp, 0);
    std::unordered_set<VpSet> signatures;
    for (std::size_t r = 0; r < m.rounds(); ++r) {
      auto row = m.row(b, r);
      for (std::size_t v = 0; v < nvp; ++v) {
        if (row[v] == ReachState::Unknown) continue;
        ++valid[v];
        if (row[v] == ReachState::Up) ++up[v];
      }
      auto rc = classify_round(row);
      if (rc.kind == VerdictKind::Disagreement) signatures.insert(std::move(rc.up_set));
    }
    bool low = false;
    for (std::size_t v = 0; v < nvp; ++v) {
      if (valid[v] == 0 || static_cast<double>(up[v]) / static_cast<double>(valid[v]) < cfg.min_uptime_fraction) {
        low = true;
        break;
      }
    }
    if (low) {
      report.dropped.emplace_back(m.blocks()[b], DropReason::LowUptime);
    } else if (signatures.size() > cfg.max_inconsistent_combinations) {
      report.dropped.emplace_back(m.blocks()[b], DropReason::Flaky);
    } else {
      report.kept.push_back(m.blocks()[b]);
    }
  }
  return report;
}

}  // namespace peninsula

#pragma once

// CSV tables and gnuplot scripts. Every table has a header row and a fixed
// column order; rows come out in a deterministic order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peninsula/confusion.hpp"
#include "peninsula/csv.hpp"
#include "peninsula/detect.hpp"
#include "peninsula/error.hpp"
#include "peninsula/events.hpp"
#include "peninsula/fractions.hpp"
#include "peninsula/model.hpp"
#include "peninsula/topo.hpp"

namespace peninsula {

// "5h", "660s", "90m", "2d", "1w" or a bare number of seconds.
inline std::optional<std::int64_t> parse_duration(std::string_view text) {
  text = csv::trim(text);
  if (text.empty()) return std::nullopt;
  std::int64_t scale = 1;
  switch (text.back()) {
    case 's': scale = 1; break;
    case 'm': scale = 60; break;
    case 'h': scale = 3600; break;
    case 'd': scale = 86400; break;
    case 'w': scale = 7 * 86400; break;
    default: scale = 0; break;
  }
  if (scale != 0) text.remove_suffix(1);
  else scale = 1;
  auto n = csv::parse_int<std::int64_t>(text);
  if (!n || *n < 0) return std::nullopt;
  return *n * scale;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

// Ids are sorted so the text does not depend on VP index order.
inline std::string join_vps(const VpSet& set, const std::vector<VantagePoint>& vps) {
  std::vector<std::string> ids;
  set.for_each([&](std::size_t v) { ids.push_back(v < vps.size() ? vps[v].id : "#" + std::to_string(v)); });
  std::sort(ids.begin(), ids.end());
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : "+") + id;
  return out;
}

inline std::string join_indices(std::span<const std::size_t> subset, const std::vector<VantagePoint>& vps) {
  std::string out;
  for (auto v : subset) {
    if (!out.empty()) out += '+';
    out += vps[v].id;
  }
  return out;
}

// ------------------------------------------------------------------ events

inline const std::vector<std::string>& event_columns() {
  static const std::vector<std::string> c{"block", "kind", "start_round", "end_round", "duration_s", "up_signature", "country"};
  return c;
}

inline void write_events_csv(std::ostream& out, std::span<const Event> events, const std::vector<VantagePoint>& vps) {
  for (std::size_t i = 0; i < event_columns().size(); ++i) out << (i ? "," : "") << event_columns()[i];
  out << "\n";
  for (const auto& e : events) {
    out << e.block.to_string() << ',' << to_string(e.kind) << ',' << e.start_round << ',' << e.end_round << ','
        << e.duration_s << ',' << join_vps(e.up_signature, vps) << ',' << e.country << "\n";
  }
}

// Signatures are resolved against `vps`; ids not in the list are an error.
inline std::vector<Event> read_events_csv(std::istream& in, const std::vector<VantagePoint>& vps) {
  std::map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < vps.size(); ++v) index.emplace(vps[v].id, v);
  csv::Reader reader(in, event_columns());
  std::vector<Event> out;
  while (auto row = reader.next()) {
    auto& f = *row;
    Event e;
    auto block = BlockId::parse(f[0]);
    auto kind = parse_event_kind(f[1]);
    auto start = csv::parse_int<std::uint32_t>(f[2]);
    auto end = csv::parse_int<std::uint32_t>(f[3]);
    auto dur = csv::parse_int<std::int64_t>(f[4]);
    if (!block || !kind || !start || !end || !dur || *end < *start) throw ParseError(reader.line(), "malformed event row");
    e.block = *block;
    e.kind = *kind;
    e.start_round = *start;
    e.end_round = *end;
    e.duration_s = *dur;
    std::string_view sig = f[5];
    while (!sig.empty()) {
      auto plus = sig.find('+');
      auto id = std::string(sig.substr(0, plus));
      auto it = index.find(id);
      if (it == index.end()) throw ParseError(reader.line(), "unknown vantage point '" + id + "' in signature");
      e.up_signature.insert(it->second);
      if (plus == std::string_view::npos) break;
      sig.remove_prefix(plus + 1);
    }
    e.country = f[6];
    out.push_back(std::move(e));
  }
  return out;
}

// VP ids appearing in event signatures, sorted; used when no observation
// file supplies the VP list.
inline std::vector<VantagePoint> vps_from_events_csv(std::istream& in) {
  csv::Reader reader(in, event_columns());
  std::set<std::string> ids;
  while (auto row = reader.next()) {
    std::string_view sig = (*row)[5];
    while (!sig.empty()) {
      auto plus = sig.find('+');
      ids.emplace(sig.substr(0, plus));
      if (plus == std::string_view::npos) break;
      sig.remove_prefix(plus + 1);
    }
  }
  std::vector<VantagePoint> out;
  for (const auto& id : ids) out.push_back(VantagePoint{id, std::string(kUnknownCountry)});
  return out;
}

inline void write_islands_csv(std::ostream& out, std::span<const IslandEvent> events,
                              const std::vector<VantagePoint>& vps) {
  out << "vp,kind,start_round,end_round,duration_s,min_fraction\n";
  for (const auto& e : events) {
    out << vps.at(e.vp).id << ',' << to_string(e.kind) << ',' << e.start_round << ',' << e.end_round << ','
        << e.duration_s << ',' << csv::format_double(e.min_fraction) << "\n";
  }
}

inline void write_round_counts_csv(std::ostream& out, const std::array<std::uint64_t, 7>& counts) {
  out << "verdict,rounds\n";
  for (auto k : {EventKind::AllUp, EventKind::Outage, EventKind::Peninsula, EventKind::Island}) {
    out << to_string(k) << ',' << counts[static_cast<std::size_t>(k)] << "\n";
  }
  out << "no_data," << counts[6] << "\n";
}

// --------------------------------------------------------------- analyses

inline void write_fractions_csv(std::ostream& out, std::span<const SubsetFractions> curve,
                                const std::vector<VantagePoint>& vps) {
  out << "size,subset,all_up,all_down,disagree,f_all_up,f_all_down,f_disagree\n";
  for (const auto& s : curve) {
    const auto& f = s.fractions;
    out << s.subset.size() << ',' << join_indices(s.subset, vps) << ',' << f.all_up << ',' << f.all_down << ','
        << f.disagree << ',' << csv::format_double(f.f_all_up()) << ',' << csv::format_double(f.f_all_down()) << ','
        << csv::format_double(f.f_disagree()) << "\n";
  }
}

struct NamedCdf {
  std::string kind;
  CdfWeight weight = CdfWeight::Count;
  std::vector<CdfPoint> points;
};

inline void write_cdf_csv(std::ostream& out, std::span<const NamedCdf> cdfs) {
  out << "kind,weight,duration_s,cumulative\n";
  for (const auto& c : cdfs) {
    const char* w = c.weight == CdfWeight::Count ? "count" : "duration";
    for (const auto& p : c.points) out << c.kind << ',' << w << ',' << p.duration_s << ',' << csv::format_double(p.cumulative) << "\n";
  }
}

inline void write_similarity_csv(std::ostream& out, std::span<const SimilarityScore> scores,
                                 const std::vector<VantagePoint>& vps) {
  out << "a,b,p1,p0,d_star,s\n";
  for (const auto& s : scores) {
    out << vps.at(s.a).id << ',' << vps.at(s.b).id << ',' << s.p1 << ',' << s.p0 << ',' << s.d_star << ','
        << format_optional(s.s) << "\n";
  }
}

inline void write_halt_table_csv(std::ostream& out, const HaltTable& t) {
  out << "sites_up,at_as,before_as,at_prefix,before_prefix\n";
  auto row = [&](const std::string& label, const HaltRow& r) {
    out << label << ',' << r.at_as << ',' << r.before_as << ',' << r.at_prefix << ',' << r.before_prefix << "\n";
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) row(std::to_string(i), t.rows[i]);
  if (t.rows.size() > 2) row("1-" + std::to_string(t.rows.size() - 2), t.peninsula_summary());
}

inline void write_heatmap_csv(std::ostream& out, std::span<const std::pair<std::string, Heatmap>> maps) {
  out << "weight,prefix_len,fraction_lo,fraction_hi,value\n";
  for (const auto& [name, h] : maps) {
    for (std::size_t i = 0; i < h.cells.size(); ++i) {
      for (std::size_t j = 0; j < h.cells[i].size(); ++j) {
        out << name << ',' << h.bins.prefix_len_lower[i] << ',' << csv::format_double(h.bins.fraction_edges[j]) << ','
            << csv::format_double(h.bins.fraction_edges[j + 1]) << ',' << csv::format_double(h.cells[i][j]) << "\n";
      }
    }
  }
}

inline void write_prefix_fractions_csv(std::ostream& out, std::span<const PrefixFraction> fractions,
                                       const std::vector<VantagePoint>& vps) {
  out << "prefix,asn,start_bin,duration_bin,signature,blocks,measurable,fraction,block_seconds\n";
  for (const auto& f : fractions) {
    out << f.prefix.to_string() << ',' << f.asn << ',' << f.start_bin << ',' << f.duration_bin << ','
        << join_vps(f.signature, vps) << ',' << f.blocks_in_peninsula << ',' << f.measurable_blocks << ','
        << csv::format_double(f.fraction) << ',' << f.block_seconds << "\n";
  }
}

inline void write_confusion_csv(std::ostream& out, std::span<const std::pair<std::string, ConfusionMatrix>> rows) {
  out << "policy,tp,fp,fn,tn,precision,recall,f1\n";
  for (const auto& [name, cm] : rows) {
    out << name << ',' << cm.tp << ',' << cm.fp << ',' << cm.fn << ',' << cm.tn << ',' << format_optional(cm.precision())
        << ',' << format_optional(cm.recall()) << ',' << format_optional(cm.f1()) << "\n";
  }
}

inline void write_industry_csv(std::ostream& out, const std::map<std::string, IndustryCount>& table) {
  out << "industry,ases,blocks\n";
  for (const auto& [label, c] : table) out << label << ',' << c.ases << ',' << c.blocks << "\n";
}

// ----------------------------------------------------------------- gnuplot

inline void write_cdf_gnuplot(std::ostream& out, std::string_view csv_name) {
  out << "set datafile separator ','\n"
         "set logscale x\n"
         "set xlabel 'duration (s)'\n"
         "set ylabel 'CDF'\n"
         "set key bottom right\n"
         "plot '"
      << csv_name << "' using 3:(strcol(1) eq 'peninsula' && strcol(2) eq 'count' ? $4 : 1/0) with steps title 'count', \\\n"
      << "     '" << csv_name << "' using 3:(strcol(1) eq 'peninsula' && strcol(2) eq 'duration' ? $4 : 1/0) with steps title 'duration'\n";
}

inline void write_fractions_gnuplot(std::ostream& out, std::string_view csv_name) {
  out << "set datafile separator ','\n"
         "set xlabel 'VPs in subset'\n"
         "set ylabel 'fraction of block-time'\n"
         "plot '"
      << csv_name << "' using 1:8 every ::1 with points title 'disagree', \\\n"
      << "     '" << csv_name << "' using 1:7 every ::1 with points title 'all down'\n";
}

inline void write_heatmap_gnuplot(std::ostream& out, std::string_view csv_name) {
  out << "set datafile separator ','\n"
         "set xlabel 'prefix length'\n"
         "set ylabel 'fraction of prefix in peninsula'\n"
         "set view map\n"
         "splot '"
      << csv_name << "' using 2:(($3+$4)/2):(strcol(1) eq 'count' ? $5 : 1/0) with points pt 5 palette notitle\n";
}

}  // namespace peninsula

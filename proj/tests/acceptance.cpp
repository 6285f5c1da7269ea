// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "peninsula/confusion.hpp"
#include "peninsula/detect.hpp"
#include "peninsula/events.hpp"
#include "peninsula/fractions.hpp"
#include "peninsula/ingest.hpp"
#include "peninsula/pipeline.hpp"
#include "peninsula/report.hpp"
#include "peninsula/sim.hpp"
#include "peninsula/topo.hpp"

using namespace peninsula;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Analysis run_pipeline(const sim::Generated& g, unsigned jobs = 1) {
  PipelineConfig cfg;
  cfg.events.round_width = g.round_config.width;
  cfg.jobs = jobs;
  cfg.block_countries = g.block_countries;
  return analyze(g.observations, cfg);
}

// ---------------------------------------------------------------- 1

Outcome confusion_arithmetic() {
  auto t0 = Clock::now();
  ConfusionMatrix strict{184, 0, 251, 12};
  ConfusionMatrix loose{184, 0, 40, 12};
  const double ps = *strict.precision(), pl = *loose.precision(), r = *strict.recall();
  const double fs = *strict.f1(), fl = *loose.f1();
  const double dt = seconds_since(t0);
  bool ok = near(ps, 0.42, 0.01) && near(pl, 0.82, 0.01) && near(r, 0.94, 0.01) && near(*loose.recall(), 0.94, 0.01) &&
            near(fs, 0.58, 0.01) && near(fl, 0.88, 0.01) && dt < 1.0;
  return {ok, fmt("precision %.3f/%.3f recall %.3f F1 %.3f/%.3f in %.4fs", ps, pl, r, fs, fl, dt)};
}

// ---------------------------------------------------------------- 2

Outcome island_rate_arithmetic() {
  auto t0 = Clock::now();
  auto r = island_rate(23, 6, 3.0);
  const double dt = seconds_since(t0);
  bool ok = near(r.aggregate, 7.67, 0.01) && near(r.normalized, 1.28, 0.01) && dt < 1.0;
  return {ok, fmt("%.3f per year, %.3f per VP-year in %.4fs", r.aggregate, r.normalized, dt)};
}

// ---------------------------------------------------------------- 3

Outcome noiseless_round_trip() {
  auto t0 = Clock::now();
  const sim::RandomScenarioConfig cfg{1000, 500, 0.0, 1, 40, 8, 2};
  int scenarios = 0, exact = 0;
  std::string worst;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto sc = sim::random_scenario(seed, cfg);
    auto g = sim::generate(sc, seed);
    auto a = run_pipeline(g);
    ++scenarios;
    bool ok = a.rounds.size() == g.truth.cells.size();
    for (std::size_t i = 0; ok && i < a.rounds.size(); ++i) ok = a.rounds[i].kind == g.truth.cells[i].kind;
    for (const auto& s : sim::score(a.block_events, a.islands.events, g.truth, sc.vps.size(), sc.round_width)) {
      if (s.cm.fp != 0 || s.cm.fn != 0) {
        ok = false;
        worst = fmt("seed %llu %s tp=%llu fp=%llu fn=%llu", (unsigned long long)seed, s.kind.c_str(),
                    (unsigned long long)s.cm.tp, (unsigned long long)s.cm.fp, (unsigned long long)s.cm.fn);
      }
    }
    exact += ok;
  }
  const double dt = seconds_since(t0);
  return {exact == scenarios && dt < 30.0,
          fmt("%d/%d scenarios exact (1000 blocks x 500 rounds x 6 VPs) in %.2fs %s", exact, scenarios, dt, worst.c_str())};
}

// ---------------------------------------------------------------- 4

Outcome noisy_recall() {
  auto t0 = Clock::now();
  const sim::RandomScenarioConfig cfg{1000, 500, 0.01, 5, 40, 8, 2};
  std::map<std::string, std::pair<double, int>> recall;  // kind -> (sum, seeds with truths)
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto sc = sim::random_scenario(1000 + seed, cfg);
    auto g = sim::generate(sc, seed);
    auto a = run_pipeline(g);
    for (const auto& s : sim::score(a.block_events, a.islands.events, g.truth, sc.vps.size(), sc.round_width)) {
      if (auto r = s.cm.recall()) {
        recall[s.kind].first += *r;
        ++recall[s.kind].second;
      }
    }
  }
  const double dt = seconds_since(t0);
  bool ok = dt < 120.0 && !recall.empty();
  std::string detail;
  for (const auto& [kind, acc] : recall) {
    const double mean = acc.first / acc.second;
    ok = ok && mean >= 0.9;
    detail += fmt("%s=%.3f ", kind.c_str(), mean);
  }
  return {ok, detail + fmt("over 20 seeds in %.2fs", dt)};
}

// ---------------------------------------------------------------- 5

Outcome partition_invariant() {
  double worst = 0.0;
  std::uint64_t single_disagree = 0;
  std::size_t datasets = 0;
  auto check = [&](const RoundMatrix& m) {
    ++datasets;
    ConvergenceConfig cc;
    for (const auto& s : convergence_curve(m, cc)) {
      const auto& f = s.fractions;
      if (f.denominator() > 0) worst = std::max(worst, std::abs(f.f_all_up() + f.f_all_down() + f.f_disagree() - 1.0));
      if (s.subset.size() == 1) single_disagree += f.disagree;
    }
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto sc = sim::random_scenario(seed, {300, 200, 0.02, 1, 40, 8, 2});
    check(sim::generate(sc, seed).observations);
  }
  check(sim::generate(sim::fixture_polish(), 1).observations);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    std::vector<BlockId> blocks;
    for (std::uint32_t b = 0; b < 12; ++b) blocks.push_back(BlockId(Ipv4Addr{(10u << 24) | (b << 8)}));
    std::vector<VantagePoint> vps;
    for (int v = 0; v < 6; ++v) vps.push_back({"v" + std::to_string(v), std::string(kUnknownCountry)});
    RoundMatrixBuilder b(vps, blocks, 30);
    for (std::size_t x = 0; x < 12; ++x)
      for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t v = 0; v < 6; ++v) b.set(x, r, v, static_cast<ReachState>(rng() % 3));
    check(std::move(b).build());
  }
  return {worst <= 1e-9 && single_disagree == 0,
          fmt("%zu datasets, max |sum-1| = %.3g, single-VP disagree cells = %llu", datasets, worst,
              (unsigned long long)single_disagree)};
}

// ---------------------------------------------------------------- 6

VerdictKind naive_taitao(std::span<const ReachState> row) {
  int up = 0, down = 0;
  for (auto s : row) {
    if (s == ReachState::Up) ++up;
    if (s == ReachState::Down) ++down;
  }
  if (up + down == 0) return VerdictKind::NoData;
  if (up == 0) return VerdictKind::AllDown;
  if (down == 0) return VerdictKind::AllUp;
  return VerdictKind::Disagreement;
}

bool naive_country(std::span<const ReachState> row, const std::vector<std::string>& cs) {
  for (const std::string c : {"US", "JP"}) {
    bool any_up = false, ok = true, foreign_down = false;
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (row[v] == ReachState::Up) {
        any_up = true;
        ok = ok && cs[v] == c;
      } else if (row[v] == ReachState::Down) {
        if (cs[v] == c) ok = false;
        else if (cs[v] != kUnknownCountry) foreign_down = true;
      }
    }
    if (any_up && ok && foreign_down) return true;
  }
  return false;
}

IslandKind naive_island(std::size_t reach, std::size_t core) {
  // Integer forms of: reach/core <= 0, <= 1/2, and down/core > 1/20.
  if (reach == 0) return IslandKind::AddressIsland;
  if (2 * reach <= core) return IslandKind::Island;
  if (20 * (core - reach) > core) return IslandKind::PeninsulaSuspect;
  return IslandKind::Normal;
}

Outcome brute_force_equivalence() {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> pool{"US", "JP", std::string(kUnknownCountry)};
  std::uint64_t cells = 0, mismatches = 0, island_checks = 0;
  IslandConfig icfg;
  icfg.core_window_s = 3 * 660;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t nvp = 1 + rng() % 4, nb = 1 + rng() % 8, nr = 1 + rng() % 16;
    std::vector<std::string> cs(nvp);
    std::vector<VantagePoint> vps;
    for (std::size_t v = 0; v < nvp; ++v) {
      cs[v] = pool[rng() % pool.size()];
      vps.push_back({"v" + std::to_string(v), cs[v]});
    }
    std::vector<BlockId> blocks;
    for (std::uint32_t b = 0; b < nb; ++b) blocks.push_back(BlockId(Ipv4Addr{(10u << 24) | (b << 8)}));
    RoundMatrixBuilder builder(vps, blocks, nr);
    const unsigned bias = 1 + rng() % 5;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t v = 0; v < nvp; ++v) {
          auto x = rng() % (bias + 2);
          builder.set(b, r, v, x == 0 ? ReachState::Unknown : x == 1 ? ReachState::Down : ReachState::Up);
        }
    auto m = std::move(builder).build();
    auto taitao = taitao_scan(m);
    auto country = country_scan(m);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t r = 0; r < nr; ++r) {
        auto row = m.row(b, r);
        const auto& t = taitao[b * nr + r];
        ++cells;
        bool ok = t.kind == naive_taitao(row);
        for (std::size_t v = 0; v < nvp; ++v) ok = ok && t.up_set.contains(v) == (row[v] == ReachState::Up);
        ok = ok && country[b * nr + r].is_country == naive_country(row, cs);
        mismatches += !ok;
      }
    }
    // Chiloe: naive core over the trailing three rounds, including the current one.
    for (std::size_t r = 0; r < nr; ++r) {
      std::vector<std::size_t> core;
      for (std::size_t b = 0; b < nb; ++b) {
        bool seen = false;
        for (std::size_t q = r >= 2 ? r - 2 : 0; q <= r; ++q)
          for (std::size_t v = 0; v < nvp; ++v) seen = seen || m.state(b, q, v) == ReachState::Up;
        if (seen) core.push_back(b);
      }
      if (core.empty()) continue;
      for (std::size_t v = 0; v < nvp; ++v) {
        std::size_t reach = 0;
        for (auto b : core) reach += m.state(b, r, v) == ReachState::Up;
        auto got = chiloe_round(m, v, static_cast<std::uint32_t>(r), icfg, core);
        ++island_checks;
        if (got.kind != naive_island(reach, core.size()) || got.reachable != reach) ++mismatches;
      }
      if (trailing_core(m, static_cast<std::uint32_t>(r), core_lookback_rounds(icfg, 660)) != core) ++mismatches;
    }
  }
  // Exhaustive single rows over four VPs with fixed countries.
  const std::vector<std::string> cs{"US", "US", "JP", std::string(kUnknownCountry)};
  std::vector<VantagePoint> vps;
  for (std::size_t v = 0; v < 4; ++v) vps.push_back({"v" + std::to_string(v), cs[v]});
  for (int code = 0; code < 81; ++code) {
    std::vector<ReachState> row(4);
    for (int v = 0, c = code; v < 4; ++v, c /= 3) row[v] = static_cast<ReachState>(c % 3);
    ++cells;
    if (classify_round(row).kind != naive_taitao(row)) ++mismatches;
    if (classify_country(row, vps, std::nullopt).is_country != naive_country(row, cs)) ++mismatches;
  }
  return {mismatches == 0, fmt("%llu cells and %llu island verdicts checked, %llu mismatches", (unsigned long long)cells,
                               (unsigned long long)island_checks, (unsigned long long)mismatches)};
}

// ---------------------------------------------------------------- 7

Outcome convergence_shape() {
  sim::Scenario sc;
  sc.name = "disjoint";
  sc.rounds = 200;
  sc.vps = sim::standard_vps();
  sc.regions.push_back({"core", *BlockId::parse("20.0.0.0"), 200, 16, 3356, {1299}, ""});
  const std::vector<std::vector<std::string>> ups{{"W"}, {"C"}, {"J", "G"}, {"E", "N"}, {"W", "C", "J"}, {"G", "E", "N"}};
  for (std::size_t i = 0; i < ups.size(); ++i) {
    const std::string name = "p" + std::to_string(i);
    sc.regions.push_back({name, BlockId(Ipv4Addr{(30u << 24) | static_cast<std::uint32_t>(i * 8) << 8}), 8, 21,
                          static_cast<std::uint32_t>(64500 + i), {174, 6453}, ""});
    sim::PlantedEvent e;
    e.region = name;
    e.kind = sim::PlantKind::Peninsula;
    e.start = static_cast<std::uint32_t>(10 + 25 * i);
    e.end = e.start + 40;
    e.vps = ups[i];
    sc.events.push_back(e);
  }
  sim::PlantedEvent out;
  out.region = "p0";
  out.kind = sim::PlantKind::Outage;
  out.start = 60;
  out.end = 90;
  sc.events.push_back(out);
  auto g = sim::generate(sc, 7);
  auto means = mean_by_size(convergence_curve(g.observations));
  bool ok = means.size() == 6;
  std::string detail;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (i > 0) {
      ok = ok && means[i].mean_disagree >= means[i - 1].mean_disagree;
      ok = ok && means[i].mean_all_down <= means[i - 1].mean_all_down;
    }
    detail += fmt("k=%zu(%zu) disagree=%.4f down=%.4f; ", means[i].size, means[i].samples, means[i].mean_disagree,
                  means[i].mean_all_down);
  }
  ok = ok && means.back().mean_disagree > means.front().mean_disagree;
  return {ok, detail};
}

// ---------------------------------------------------------------- 8

Outcome halt_localization() {
  std::uint64_t edge_at = 0, edge_total = 0, up_before = 0, up_total = 0;
  auto run = [&](sim::Scenario sc, sim::HaltSite site) {
    for (auto& e : sc.events) e.halt = site;
    auto g = sim::generate(sc, 3);
    auto a = run_pipeline(g);
    auto ht = halt_table(g.traces, a.block_events, g.prefixes, g.round_config, sc.vps.size());
    HaltRow all;
    for (const auto& r : ht.rows) all += r;
    if (site == sim::HaltSite::Edge) {
      edge_at += all.at_as;
      edge_total += all.traces() + ht.unjoined;
    } else {
      up_before += all.before_as;
      up_total += all.traces() + ht.unjoined;
    }
  };
  for (auto site : {sim::HaltSite::Edge, sim::HaltSite::Upstream}) {
    run(sim::fixture_polish(), site);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) run(sim::random_scenario(seed, {600, 300, 0.0, 5, 40, 8, 0}), site);
  }
  bool ok = edge_total > 0 && up_total > 0 && edge_at == edge_total && up_before == up_total;
  return {ok, fmt("edge: %llu/%llu at target AS; upstream: %llu/%llu before target AS", (unsigned long long)edge_at,
                  (unsigned long long)edge_total, (unsigned long long)up_before, (unsigned long long)up_total)};
}

// ---------------------------------------------------------------- 9

Outcome duration_weighting() {
  // Long events (>= 5 h at 660 s rounds, i.e. >= 28 rounds) hold 288 of 320
  // peninsula rounds, a share of exactly 0.9.
  const std::vector<std::uint32_t> lengths{28, 35, 42, 50, 61, 72, 1, 2, 3, 4, 5, 6, 11};
  sim::Scenario sc;
  sc.name = "durations";
  sc.rounds = 100;
  sc.vps = sim::standard_vps();
  sc.regions.push_back({"core", *BlockId::parse("20.0.0.0"), 200, 16, 3356, {1299}, ""});
  std::uint64_t planted_long = 0, planted_total = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string name = "r" + std::to_string(i);
    sc.regions.push_back({name, BlockId(Ipv4Addr{(30u << 24) | static_cast<std::uint32_t>(i) << 8}), 1, 24,
                          static_cast<std::uint32_t>(64500 + i), {174}, ""});
    sim::PlantedEvent e;
    e.region = name;
    e.kind = sim::PlantKind::Peninsula;
    e.start = static_cast<std::uint32_t>(3 + i);
    e.end = e.start + lengths[i] - 1;
    e.vps = {sc.vps[i % 6].id};
    sc.events.push_back(e);
    planted_total += lengths[i];
    if (lengths[i] * sc.round_width >= kLongEventSeconds) planted_long += lengths[i];
  }
  const double planted = static_cast<double>(planted_long) / static_cast<double>(planted_total);
  auto g = sim::generate(sc, 11);
  auto a = run_pipeline(g);
  auto pen = events_of_kind(a.block_events, EventKind::Peninsula);
  auto cdf = duration_cdf(std::span<const Event>(pen), CdfWeight::TotalDuration);
  const double share = share_at_least(cdf, kLongEventSeconds);
  const bool ok = near(planted, 0.9, 1e-12) && near(share, 0.9, 0.02) && pen.size() == lengths.size();
  return {ok, fmt("planted long share %.4f, duration-weighted CDF share %.4f over %zu events", planted, share, pen.size())};
}

// ---------------------------------------------------------------- 10

std::string all_outputs(unsigned jobs) {
  auto sc = sim::random_scenario(42, {800, 400, 0.01, 1, 40, 8, 2});
  auto g = sim::generate(sc, 42, jobs);
  auto a = run_pipeline(g, jobs);
  const auto& vps = g.observations.vps();
  std::ostringstream out;
  write_observations(out, g.observations, g.round_config);
  write_traceroutes(out, g.traces);
  auto events = a.block_events;
  events.insert(events.end(), a.country_events.begin(), a.country_events.end());
  write_events_csv(out, events, vps);
  write_islands_csv(out, a.islands.events, vps);
  write_round_counts_csv(out, a.round_counts);
  ConvergenceConfig cc;
  cc.jobs = jobs;
  auto curve = convergence_curve(g.observations, cc);
  write_fractions_csv(out, curve, vps);
  auto sims = similarity_matrix(g.observations, jobs);
  write_similarity_csv(out, sims, vps);
  write_halt_table_csv(out, halt_table(g.traces, a.block_events, g.prefixes, g.round_config, vps.size()));
  auto pf = peninsula_prefix_fractions(a.block_events, g.prefixes, g.observations.blocks(), g.round_config);
  write_prefix_fractions_csv(out, pf, vps);
  for (const auto& s : sim::score(a.block_events, a.islands.events, g.truth, vps.size(), sc.round_width)) {
    out << s.kind << ',' << s.cm.tp << ',' << s.cm.fp << ',' << s.cm.fn << "\n";
  }
  return out.str();
}

Outcome determinism() {
  const auto one = all_outputs(1);
  const auto four = all_outputs(4);
  const auto again = all_outputs(1);
  return {one == four && one == again && !one.empty(),
          fmt("%zu bytes, jobs=1 vs jobs=4 %s", one.size(), one == four ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"confusion arithmetic", confusion_arithmetic},
      {"island-rate arithmetic", island_rate_arithmetic},
      {"noiseless round trip", noiseless_round_trip},
      {"noisy robustness", noisy_recall},
      {"partition invariant", partition_invariant},
      {"brute-force equivalence", brute_force_equivalence},
      {"convergence shape", convergence_shape},
      {"halt localization", halt_localization},
      {"duration weighting", duration_weighting},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}

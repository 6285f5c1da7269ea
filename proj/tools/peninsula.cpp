// peninsula: detect, island, report and sim subcommands over the
// peninsula header library.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peninsula/confusion.hpp"
#include "peninsula/detect.hpp"
#include "peninsula/events.hpp"
#include "peninsula/fractions.hpp"
#include "peninsula/ingest.hpp"
#include "peninsula/pipeline.hpp"
#include "peninsula/report.hpp"
#include "peninsula/sim.hpp"
#include "peninsula/topo.hpp"

namespace fs = std::filesystem;
using namespace peninsula;

namespace {

struct Options {
  std::int64_t round_width = 660;
  std::optional<std::int64_t> epoch;
  std::string min_duration = "0";
  double island_threshold = 0.5;
  double noise_floor = 0.05;
  std::uint32_t bridge_nodata = 0;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
  std::string out;

  std::int64_t min_duration_s() const {
    auto d = parse_duration(min_duration);
    if (!d) throw InputError("bad duration '" + min_duration + "' (use e.g. 5h, 30m, 660s)");
    return *d;
  }

  IslandConfig island() const {
    IslandConfig c;
    c.island_threshold = island_threshold;
    c.noise_floor = noise_floor;
    validate(c);
    return c;
  }

  EventBuildConfig events() const {
    if (round_width <= 0) throw InputError("--round-width must be positive");
    return EventBuildConfig{round_width, bridge_nodata};
  }
};

fs::path output_dir(const Options& o) {
  fs::path dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv("PENINSULA_OUT");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  return dir;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
  if (!out) throw InputError("write failed for " + path.string());
}

void add_shared(CLI::App* cmd, Options& o) {
  cmd->add_option("--round-width", o.round_width, "Round width in seconds")->capture_default_str();
  cmd->add_option("--epoch", o.epoch, "Start of round 0 (default: earliest observation)");
  cmd->add_option("--jobs,-j", o.jobs, "Worker threads")->capture_default_str();
  cmd->add_option("--out,-o", o.out, "Output directory (default: $PENINSULA_OUT or .)");
}

void add_detection(CLI::App* cmd, Options& o) {
  cmd->add_option("--min-duration", o.min_duration, "Drop events shorter than this (e.g. 5h)")->capture_default_str();
  cmd->add_option("--island-threshold", o.island_threshold, "Reachable fraction at or below which a VP is islanded")
      ->capture_default_str();
  cmd->add_option("--noise-floor", o.noise_floor, "Unreachable fraction tolerated as noise")->capture_default_str();
  cmd->add_option("--bridge-nodata", o.bridge_nodata, "Rounds without data absorbed inside an event")
      ->capture_default_str();
}

ObservationIngest load_observations(const std::string& path, const Options& o, const std::string& vp_countries) {
  ObservationOptions opts;
  opts.epoch = o.epoch;
  opts.width = o.round_width;
  auto in = csv::open_input(path);
  auto obs = read_observations(in, opts);
  if (!vp_countries.empty()) {
    auto cin = csv::open_input(vp_countries);
    auto labeled = with_countries(obs.matrix.vps(), read_vp_countries(cin));
    RoundMatrixBuilder b(std::move(obs.matrix));
    for (std::size_t v = 0; v < labeled.size(); ++v) b.set_country(v, labeled[v].country);
    obs.matrix = std::move(b).build();
  }
  return obs;
}

std::vector<Event> merged_events(const Analysis& a, std::int64_t min_duration_s) {
  auto events = filter_long_events(a.block_events, min_duration_s);
  auto country = filter_long_events(a.country_events, min_duration_s);
  events.insert(events.end(), country.begin(), country.end());
  std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    return std::tie(x.block, x.start_round, x.kind) < std::tie(y.block, y.start_round, y.kind);
  });
  return events;
}

std::vector<IslandEvent> long_islands(const IslandEvents& islands, std::int64_t min_duration_s) {
  std::vector<IslandEvent> out;
  for (const auto& e : islands.events) {
    if (e.duration_s >= min_duration_s) out.push_back(e);
  }
  return out;
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
  std::string obs;
  std::string vp_countries;
  std::string block_countries;
  bool no_islands = false;
};

int cmd_detect(const DetectArgs& args, const Options& o) {
  auto obs = load_observations(args.obs, o, args.vp_countries);
  PipelineConfig cfg;
  cfg.island = o.island();
  cfg.events = o.events();
  cfg.detect_islands = !args.no_islands;
  cfg.jobs = o.jobs;
  if (!args.block_countries.empty()) {
    auto in = csv::open_input(args.block_countries);
    cfg.block_countries = read_block_countries(in);
  }
  const auto min_d = o.min_duration_s();
  auto a = analyze(obs.matrix, cfg);
  auto events = merged_events(a, min_d);
  auto islands = long_islands(a.islands, min_d);
  const auto dir = output_dir(o);
  const auto& vps = obs.matrix.vps();
  write_file(dir / "events.csv", [&](std::ostream& out) { write_events_csv(out, events, vps); });
  write_file(dir / "islands.csv", [&](std::ostream& out) { write_islands_csv(out, islands, vps); });
  write_file(dir / "summary.csv", [&](std::ostream& out) { write_round_counts_csv(out, a.round_counts); });

  std::map<std::string, std::size_t> by_kind;
  for (const auto& e : events) ++by_kind[std::string(to_string(e.kind))];
  std::cout << "blocks " << obs.matrix.blocks().size() << ", rounds " << obs.matrix.rounds() << ", vantage points "
            << obs.matrix.vp_count() << "\n";
  std::cout << "verdicts:";
  for (auto k : {EventKind::AllUp, EventKind::Outage, EventKind::Peninsula, EventKind::Island}) {
    std::cout << ' ' << to_string(k) << '=' << a.round_counts[static_cast<std::size_t>(k)];
  }
  std::cout << " no_data=" << a.round_counts[6] << "\n";
  std::cout << "events " << events.size() << ":";
  for (const auto& [k, n] : by_kind) std::cout << ' ' << k << '=' << n;
  std::cout << "\nislands " << islands.size() << " (" << a.islands.demoted << " demoted)\n";
  return 0;
}

// ------------------------------------------------------------------ island

struct IslandArgs {
  std::string input;
  std::optional<std::size_t> targets;
  bool strict = false;
  std::string window = "24h";
};

int cmd_island(const IslandArgs& args, const Options& o) {
  const auto min_d = o.min_duration_s();
  const auto dir = output_dir(o);
  if (args.targets) {
    auto window = parse_duration(args.window);
    if (!window || *window <= 0) throw InputError("bad --window '" + args.window + "'");
    auto in = csv::open_input(args.input);
    auto probes = read_target_probes(in);
    auto res = k_target_islands(probes, *args.targets, args.strict, *window, o.epoch, o.island());
    std::erase_if(res.events, [&](const IslandEvent& e) { return e.duration_s < min_d; });
    write_file(dir / "islands.csv", [&](std::ostream& out) { write_islands_csv(out, res.events, res.vps); });
    std::cout << "islands " << res.events.size() << " over " << res.vps.size() << " vantage points\n";
    return 0;
  }
  if (args.strict) throw InputError("--strict applies to k-target mode only (add --targets K)");
  auto obs = load_observations(args.input, o, "");
  if (obs.matrix.blocks().empty()) throw InputError("no blocks in input: the core block set is empty");
  auto cfg = o.island();
  auto verdicts = chiloe_scan(obs.matrix, cfg, o.round_width, std::nullopt, o.jobs);
  auto islands = island_events(verdicts, cfg, o.round_width);
  auto kept = long_islands(islands, min_d);
  write_file(dir / "islands.csv", [&](std::ostream& out) { write_islands_csv(out, kept, obs.matrix.vps()); });
  std::cout << "islands " << kept.size() << " (" << islands.demoted << " demoted)\n";
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string events;
  std::string obs;
  std::string traces;
  std::string prefixes;
  std::string comparisons;
  std::string industries;
  std::vector<std::string> vps;
  std::string policy = "both";
  std::string bin = "1h";
  bool gnuplot = false;
};

int cmd_report(const ReportArgs& args, const Options& o) {
  if (args.policy != "strict" && args.policy != "loose" && args.policy != "both") {
    throw InputError("--policy must be strict, loose or both");
  }
  std::optional<ObservationIngest> obs;
  if (!args.obs.empty()) obs = load_observations(args.obs, o, "");
  std::vector<VantagePoint> vps;
  if (obs) {
    vps = obs->matrix.vps();
  } else if (!args.vps.empty()) {
    for (const auto& id : args.vps) vps.push_back(VantagePoint{id, std::string(kUnknownCountry)});
  } else {
    auto in = csv::open_input(args.events);
    vps = vps_from_events_csv(in);
  }
  RoundConfig rc{o.epoch.value_or(obs ? obs->rounds.epoch : 0), o.round_width};
  std::vector<Event> events;
  {
    auto in = csv::open_input(args.events);
    events = filter_long_events(read_events_csv(in, vps), o.min_duration_s());
  }
  const auto dir = output_dir(o);

  std::vector<NamedCdf> cdfs;
  for (auto kind : {EventKind::Peninsula, EventKind::Outage, EventKind::CountryPeninsula, EventKind::Island}) {
    auto of_kind = events_of_kind(events, kind);
    if (of_kind.empty()) continue;
    for (auto w : {CdfWeight::Count, CdfWeight::TotalDuration}) {
      cdfs.push_back({std::string(to_string(kind)), w, duration_cdf(std::span<const Event>(of_kind), w)});
    }
  }
  write_file(dir / "cdf.csv", [&](std::ostream& out) { write_cdf_csv(out, cdfs); });

  if (obs) {
    ConvergenceConfig cc;
    cc.seed = o.seed;
    cc.jobs = o.jobs;
    auto curve = convergence_curve(obs->matrix, cc);
    write_file(dir / "fractions.csv", [&](std::ostream& out) { write_fractions_csv(out, curve, vps); });
    if (obs->matrix.vp_count() >= 3) {
      auto sims = similarity_matrix(obs->matrix, o.jobs);
      write_file(dir / "similarity.csv", [&](std::ostream& out) { write_similarity_csv(out, sims, vps); });
    }
  }

  std::optional<PrefixTable> table;
  if (!args.prefixes.empty()) {
    auto in = csv::open_input(args.prefixes);
    table = read_prefix_table(in).table;
  }
  std::vector<TracerouteRecord> traces;
  if (!args.traces.empty()) {
    auto in = csv::open_input(args.traces);
    traces = read_traceroutes(in).records;
  }

  if (table && !args.traces.empty()) {
    auto halts = halt_table(traces, events, *table, rc, vps.size());
    write_file(dir / "halt_table.csv", [&](std::ostream& out) { write_halt_table_csv(out, halts); });
  }
  if (table) {
    auto bin = parse_duration(args.bin);
    if (!bin || *bin <= 0) throw InputError("bad --bin '" + args.bin + "'");
    std::vector<BlockId> measurable;
    if (obs) {
      measurable = obs->matrix.blocks();
    } else {
      for (const auto& e : events) measurable.push_back(e.block);
      std::sort(measurable.begin(), measurable.end());
      measurable.erase(std::unique(measurable.begin(), measurable.end()), measurable.end());
    }
    auto fractions = peninsula_prefix_fractions(events, *table, measurable, rc, *bin);
    write_file(dir / "prefix_fractions.csv", [&](std::ostream& out) { write_prefix_fractions_csv(out, fractions, vps); });
    std::vector<std::pair<std::string, Heatmap>> maps{
        {"count", fraction_heatmap(fractions, HeatmapBins::standard(), HeatmapWeight::Count)},
        {"duration", fraction_heatmap(fractions, HeatmapBins::standard(), HeatmapWeight::Duration)}};
    write_file(dir / "heatmap.csv", [&](std::ostream& out) { write_heatmap_csv(out, maps); });
    if (!args.industries.empty()) {
      auto in = csv::open_input(args.industries);
      auto labels = read_asn_industries(in);
      std::vector<BlockId> blocks;
      for (const auto& e : events) {
        if (e.kind == EventKind::Peninsula) blocks.push_back(e.block);
      }
      write_file(dir / "industry.csv", [&](std::ostream& out) { write_industry_csv(out, industry_table(blocks, *table, labels)); });
    }
  }

  std::optional<std::vector<Comparison>> comparisons;
  if (!args.comparisons.empty()) {
    auto in = csv::open_input(args.comparisons);
    comparisons = read_comparisons(in);
  } else if (!args.traces.empty()) {
    comparisons = label_comparisons(events, traces, rc, static_cast<std::uint32_t>(vps.size()));
  }
  if (comparisons) {
    std::vector<std::pair<std::string, ConfusionMatrix>> rows;
    if (args.policy != "loose") rows.emplace_back("strict", confusion_matrix(*comparisons, {LabelPolicy::Strict}));
    if (args.policy != "strict") rows.emplace_back("loose", confusion_matrix(*comparisons, {LabelPolicy::Loose}));
    write_file(dir / "confusion.csv", [&](std::ostream& out) { write_confusion_csv(out, rows); });
    for (const auto& [name, cm] : rows) {
      std::cout << name << ": precision " << format_optional(cm.precision()) << " recall "
                << format_optional(cm.recall()) << " f1 " << format_optional(cm.f1()) << "\n";
    }
  }

  if (args.gnuplot) {
    write_file(dir / "cdf.gp", [](std::ostream& out) { write_cdf_gnuplot(out, "cdf.csv"); });
    if (obs) write_file(dir / "fractions.gp", [](std::ostream& out) { write_fractions_gnuplot(out, "fractions.csv"); });
    if (table) write_file(dir / "heatmap.gp", [](std::ostream& out) { write_heatmap_gnuplot(out, "heatmap.csv"); });
  }
  std::cout << "report written to " << dir.string() << "\n";
  return 0;
}

// --------------------------------------------------------------------- sim

struct SimArgs {
  std::string scenario;
  std::string fixture;
  std::optional<double> noise;
};

int cmd_sim(const SimArgs& args, const Options& o) {
  sim::Scenario sc;
  if (!args.scenario.empty() && !args.fixture.empty()) throw InputError("give either --scenario or --fixture");
  if (!args.scenario.empty()) {
    sc = sim::parse_scenario(args.scenario);
  } else if (args.fixture == "polish") {
    sc = sim::fixture_polish();
  } else if (args.fixture == "random") {
    sc = sim::random_scenario(o.seed);
  } else {
    throw InputError("need --scenario FILE or --fixture polish|random");
  }
  if (args.noise) sc.p_fd = sc.p_fu = *args.noise;
  auto g = sim::generate(sc, o.seed, o.jobs);

  PipelineConfig cfg;
  cfg.island = o.island();
  cfg.events = EventBuildConfig{sc.round_width, o.bridge_nodata};
  cfg.block_countries = g.block_countries;
  cfg.jobs = o.jobs;
  auto a = analyze(g.observations, cfg);
  auto scores = sim::score(a.block_events, a.islands.events, g.truth, g.observations.vp_count(), sc.round_width);

  const auto dir = output_dir(o);
  const auto& vps = g.observations.vps();
  write_file(dir / "scenario.ini", [&](std::ostream& out) { sim::write_scenario(out, sc); });
  write_file(dir / "observations.jsonl", [&](std::ostream& out) { write_observations(out, g.observations, g.round_config); });
  write_file(dir / "traceroutes.jsonl", [&](std::ostream& out) { write_traceroutes(out, g.traces); });
  write_file(dir / "prefixes.csv", [&](std::ostream& out) { write_prefix_table(out, g.prefixes); });
  write_file(dir / "vp_countries.csv", [&](std::ostream& out) {
    out << "vp,country\n";
    for (const auto& v : vps) out << v.id << ',' << v.country << "\n";
  });
  write_file(dir / "block_countries.csv", [&](std::ostream& out) {
    out << "block,country\n";
    for (const auto& [b, c] : g.block_countries) out << b.to_string() << ',' << c << "\n";
  });
  auto truth = sim::truth_events(g.truth, sc.round_width);
  auto truth_islands = sim::truth_vp_islands(g.truth, vps.size(), sc.round_width);
  write_file(dir / "truth_events.csv", [&](std::ostream& out) { write_events_csv(out, truth, vps); });
  write_file(dir / "truth_islands.csv", [&](std::ostream& out) { write_islands_csv(out, truth_islands, vps); });
  auto events = merged_events(a, o.min_duration_s());
  write_file(dir / "events.csv", [&](std::ostream& out) { write_events_csv(out, events, vps); });
  write_file(dir / "islands.csv", [&](std::ostream& out) { write_islands_csv(out, a.islands.events, vps); });
  std::ostringstream table;
  table << "kind,tp,fp,fn,precision,recall\n";
  for (const auto& s : scores) {
    table << s.kind << ',' << s.cm.tp << ',' << s.cm.fp << ',' << s.cm.fn << ',' << format_optional(s.cm.precision())
          << ',' << format_optional(s.cm.recall()) << "\n";
  }
  write_file(dir / "score.csv", [&](std::ostream& out) { out << table.str(); });
  std::cout << "scenario " << sc.name << " seed " << o.seed << ": " << g.observations.blocks().size() << " blocks, "
            << sc.rounds << " rounds, " << vps.size() << " vantage points\n"
            << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect peninsulas, islands and outages from multi-vantage-point reachability data"};
  app.require_subcommand(1);
  Options o;

  DetectArgs d;
  auto* detect = app.add_subcommand("detect", "Classify every (block, round) and assemble events");
  detect->add_option("observations", d.obs, "Observation JSONL")->required()->check(CLI::ExistingFile);
  detect->add_option("--vp-countries", d.vp_countries, "CSV vp,country")->check(CLI::ExistingFile);
  detect->add_option("--block-countries", d.block_countries, "CSV block,country")->check(CLI::ExistingFile);
  detect->add_flag("--no-islands", d.no_islands, "Skip island detection and masking");
  add_shared(detect, o);
  add_detection(detect, o);

  IslandArgs is;
  auto* island = app.add_subcommand("island", "Find observers inside islands");
  island->add_option("input", is.input, "Observation JSONL, or target probes with --targets")
      ->required()
      ->check(CLI::ExistingFile);
  auto* targets = island->add_option("--targets", is.targets, "k-target mode: number of fixed targets");
  island->add_flag("--strict", is.strict, "k-target mode: island only with zero successes")->needs(targets);
  island->add_option("--window", is.window, "k-target window")->capture_default_str();
  add_shared(island, o);
  add_detection(island, o);

  ReportArgs r;
  auto* report = app.add_subcommand("report", "Tables for plots and validation");
  report->add_option("--events", r.events, "events.csv from detect")->required()->check(CLI::ExistingFile);
  report->add_option("--obs", r.obs, "Observation JSONL (fractions, similarity)")->check(CLI::ExistingFile);
  report->add_option("--traces", r.traces, "Traceroute JSONL")->check(CLI::ExistingFile);
  report->add_option("--prefixes", r.prefixes, "CSV prefix,asn")->check(CLI::ExistingFile);
  report->add_option("--comparisons", r.comparisons, "Tabulated comparisons CSV")->check(CLI::ExistingFile);
  report->add_option("--industries", r.industries, "CSV asn,industry")->check(CLI::ExistingFile);
  report->add_option("--vps", r.vps, "Vantage point ids when no observations are given")->delimiter(',');
  report->add_option("--policy", r.policy, "strict, loose or both")->capture_default_str();
  report->add_option("--bin", r.bin, "Bin for matching events across a prefix")->capture_default_str();
  report->add_option("--seed", o.seed, "Seed for subset sampling")->capture_default_str();
  report->add_flag("--gnuplot", r.gnuplot, "Also write gnuplot scripts");
  add_shared(report, o);
  report->add_option("--min-duration", o.min_duration, "Drop events shorter than this")->capture_default_str();

  SimArgs s;
  auto* simulate = app.add_subcommand("sim", "Generate a scenario, detect, and score against the truth");
  simulate->add_option("--scenario", s.scenario, "Scenario file")->check(CLI::ExistingFile);
  simulate->add_option("--fixture", s.fixture, "Built-in scenario: polish or random");
  simulate->add_option("--noise", s.noise, "Override p_fd and p_fu");
  simulate->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--jobs,-j", o.jobs, "Worker threads")->capture_default_str();
  simulate->add_option("--out,-o", o.out, "Output directory (default: $PENINSULA_OUT or .)");
  add_detection(simulate, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*detect) return cmd_detect(d, o);
    if (*island) return cmd_island(is, o);
    if (*report) return cmd_report(r, o);
    if (*simulate) return cmd_sim(s, o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include "idla/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "idla/aggregate.hpp"
#include "idla/artifacts.hpp"
#include "idla/environment.hpp"
#include "idla/experiments.hpp"
#include "idla/metric.hpp"

namespace idla {

namespace {

namespace fs = std::filesystem;

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string join(const std::vector<double>& values) {
  std::vector<std::string> parts;
  for (double v : values) parts.push_back(format_double(v));
  return join(parts, ",");
}

std::uint64_t root_seed(const RunConfig& config) {
  if (!config.seed) throw UsageError("--seed is required; runs never seed from entropy");
  return *config.seed;
}

Environment load_environment(const RunConfig& config) {
  EnvironmentParams params;
  if (config.manifest) {
    std::ifstream in(*config.manifest);
    if (!in) throw std::runtime_error("cannot read manifest " + *config.manifest);
    std::stringstream text;
    text << in.rdbuf();
    params = RunManifest::parse(text.str()).params();
  } else {
    params.dim = config.dim;
    params.half_extent = config.extent;
    params.p = config.p;
    params.seed = root_seed(config);
    params.max_attempts = config.max_attempts;
  }
  return Environment::generate(params);
}

class Outputs {
 public:
  explicit Outputs(const RunConfig& config) : dir_(config.out) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written_.push_back(path.string());
    return out;
  }

  void close(std::ofstream& out) {
    out.close();
    if (!out) throw std::runtime_error("failed writing " + written_.back());
  }

  std::vector<std::string> written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

void write_manifest(Outputs& outputs, const Environment& env, const RunConfig& config) {
  RunManifest manifest = RunManifest::describe(env);
  manifest.config = config.describe();
  auto out = outputs.open("manifest.json");
  out << manifest.serialize();
  outputs.close(out);
}

void write_raster(Outputs& outputs, const std::string& name, const Environment& env,
                  const Aggregate* aggregate, std::uint64_t seed) {
  auto out = outputs.open(name, true);
  write_ppm(out, render_raster(env, aggregate, seed));
  outputs.close(out);
}

std::optional<std::string> stamp(const RunConfig& config) {
  if (!config.timestamp) return std::nullopt;
  return utc_timestamp();
}

bool all_hold(const std::vector<Conservation>& counts) {
  return std::all_of(counts.begin(), counts.end(), [](const Conservation& c) { return c.holds(); });
}

Record conservation_record(const std::string& suite, const std::vector<Conservation>& counts) {
  std::size_t broken = 0;
  for (const auto& c : counts) broken += c.holds() ? 0 : 1;
  Record r;
  r["kind"] = "conservation";
  r["suite"] = suite;
  r["replicas"] = counts.size();
  r["failures"] = broken;
  return r;
}

using SuiteFn = void (*)(const Environment&, const RunConfig&, std::uint64_t, StatsWriter&,
                         std::ostream&);

double radius_or(const RunConfig& config, double fallback) { return config.radius.value_or(fallback); }

void report(std::ostream& log, const LemmaEstimate& est) {
  log << est.lemma << ": estimate " << format_double(est.estimate) << " (" << est.samples
      << " samples) -> " << (est.verdict ? "pass" : "fail") << "\n";
}

void suite_shape(const Environment& env, const RunConfig& config, std::uint64_t seed,
                 StatsWriter& stats, std::ostream& log) {
  std::vector<double> schedule = config.schedule;
  if (schedule.empty()) schedule.push_back(radius_or(config, 20.0));
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const ShapeStats s = shape_experiment(env, schedule[i], config.replicas,
                                          {derive_seed(seed, i), config.workers});
    stats.write(to_record(s));
    log << "shape n=" << format_double(s.n) << ": median inradius/n "
        << format_double(s.in_ratio_median) << ", median outradius/n "
        << format_double(s.out_ratio_median) << "\n";
  }
}

void suite_hit(const Environment& env, const RunConfig& config, std::uint64_t seed,
               StatsWriter& stats, std::ostream& log) {
  std::size_t failures = 0;
  for (std::size_t i = 0; i < config.configs; ++i) {
    Stream sampler(seed, StreamDomain::kSampling, static_cast<std::uint32_t>(i), 0, 9);
    const HitConfiguration hc = random_hit_configuration(env, sampler);
    const LemmaEstimate est =
        hit_probability_check(env, hc, config.samples, {derive_seed(seed, i), config.workers});
    stats.write(to_record(est));
    failures += est.verdict ? 0 : 1;
  }
  log << "hit_probability: " << config.configs - failures << "/" << config.configs
      << " configurations pass\n";
}

void suite_annulus(const Environment& env, const RunConfig& config, std::uint64_t seed,
                   StatsWriter& stats, std::ostream& log) {
  const double n = radius_or(config, 10.0);
  const std::uint64_t k = config.particles.value_or(std::max<std::uint64_t>(1, n / 2));
  const std::vector<Site> starts(k, env.origin());
  const auto initial = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), n});
  const AnnulusResult r = annulus_absorption_check(env, n, starts, initial, config.samples,
                                                   {0.05, 0.1, 0.2}, {seed, config.workers});
  stats.write(to_record(r.estimate));
  stats.write(conservation_record("annulus", r.conservation));
  report(log, r.estimate);
}

void suite_wlb(const Environment& env, const RunConfig& config, std::uint64_t seed,
               StatsWriter& stats, std::ostream& log) {
  WlbSpec spec;
  spec.n = radius_or(config, 10.0);
  spec.alphas = config.alphas;
  spec.replicas = config.replicas;
  const LemmaEstimate est = wlb_check(env, spec, {seed, config.workers});
  stats.write(to_record(est));
  report(log, est);
}

void suite_lb(const Environment& env, const RunConfig& config, std::uint64_t seed,
              StatsWriter& stats, std::ostream& log) {
  std::vector<double> schedule = config.schedule;
  if (schedule.empty()) schedule = {5.0, 10.0};
  const LbResult r = lb_check(env, schedule, config.replicas, {seed, config.workers});
  stats.write(to_record(r.estimate));
  stats.write(conservation_record("lb", r.conservation));
  report(log, r.estimate);
}

void suite_distance(const Environment& env, const RunConfig& config, std::uint64_t seed,
                    StatsWriter& stats, std::ostream& log) {
  const double n = radius_or(config, std::min(100.0, static_cast<double>(env.half_extent())));
  const DistanceResult r = distance_comparison_check(env, n, config.samples, {seed, config.workers});
  stats.write(to_record(r.estimate));
  report(log, r.estimate);
}

void suite_continuity(const Environment& env, const RunConfig& config, std::uint64_t seed,
                      StatsWriter& stats, std::ostream& log) {
  ContinuitySpec spec;
  spec.pairs = config.samples;
  spec.max_radius = radius_or(config, 20.0);
  spec.seed = seed;
  const ConditionReport r = check_continuity(env, spec);
  stats.write(to_record(r));
  log << "C: fitted c " << format_double(r.fitted_c) << " -> " << (r.pass ? "pass" : "fail") << "\n";
}

void suite_volume(const Environment& env, const RunConfig& config, std::uint64_t seed,
                  StatsWriter& stats, std::ostream& log) {
  VolumeGrowthSpec spec;
  spec.n = radius_or(config, std::min(100.0, static_cast<double>(env.half_extent())));
  spec.seed = seed;
  const ConditionReport r = check_volume_growth(env, spec);
  stats.write(to_record(r));
  log << "VG: fitted c " << format_double(r.fitted_c) << " -> " << (r.pass ? "pass" : "fail") << "\n";
}

void suite_abelian(const Environment& env, const RunConfig& config, std::uint64_t,
                   StatsWriter& stats, std::ostream& log) {
  const std::uint64_t k = config.particles.value_or(3);
  if (k > 8) throw UsageError("abelian suite is exact; use at most 8 particles");
  const std::vector<Site> starts(k, env.origin());
  const Region pause = Region::ball(env, env.origin(), radius_or(config, 1.5));
  const LemmaEstimate est = abelian_check(env, {}, starts, pause);
  stats.write(to_record(est));
  report(log, est);
}

void suite_exit(const Environment& env, const RunConfig& config, std::uint64_t seed,
                StatsWriter& stats, std::ostream& log) {
  const auto set = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), radius_or(config, 3.0)});
  const ExitLawResult r =
      exit_law_check(env, env.origin(), set, config.samples, 0.01, {seed, config.workers});
  stats.write(to_record(r.estimate));
  report(log, r.estimate);
}

void suite_staged(const Environment& env, const RunConfig& config, std::uint64_t seed,
                  StatsWriter& stats, std::ostream& log) {
  const OccupationResult r = staged_direct_comparison(env, radius_or(config, 10.0),
                                                      config.replicas, 0.02, {seed, config.workers});
  stats.write(to_record(r.estimate));
  stats.write(conservation_record("staged", r.conservation));
  report(log, r.estimate);
  if (!all_hold(r.conservation)) log << "staged: conservation violated\n";
}

const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> table = {
      {"shape", suite_shape},         {"hit", suite_hit},
      {"annulus", suite_annulus},     {"wlb", suite_wlb},
      {"lb", suite_lb},               {"distance", suite_distance},
      {"continuity", suite_continuity}, {"volume", suite_volume},
      {"abelian", suite_abelian},     {"exit", suite_exit},
      {"staged", suite_staged},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> RunConfig::describe() const {
  std::map<std::string, std::string> m;
  m["command"] = command;
  m["dim"] = std::to_string(dim);
  m["extent"] = std::to_string(extent);
  m["p"] = format_double(p);
  m["seed"] = seed ? std::to_string(*seed) : "";
  m["max_attempts"] = std::to_string(max_attempts);
  m["manifest"] = manifest.value_or("");
  m["particles"] = particles ? std::to_string(*particles) : "";
  m["radius"] = radius ? format_double(*radius) : "";
  m["staged"] = staged ? "true" : "false";
  m["replicas"] = std::to_string(replicas);
  m["samples"] = std::to_string(samples);
  m["configs"] = std::to_string(configs);
  m["suite"] = join(suites, ",");
  m["alphas"] = join(alphas);
  m["schedule"] = join(schedule);
  m["workers"] = std::to_string(workers);
  m["raster"] = raster ? "true" : "false";
  return m;
}

std::vector<std::string> available_suites() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : suites()) names.push_back(name);
  return names;
}

std::vector<std::string> cmd_percolate(const RunConfig& config) {
  const std::uint64_t seed = root_seed(config);
  const Environment env = load_environment(config);
  Outputs outputs(config);
  write_manifest(outputs, env, config);
  if (config.raster) write_raster(outputs, "cluster.ppm", env, nullptr, seed);
  return outputs.written();
}

std::vector<std::string> cmd_simulate(const RunConfig& config) {
  const std::uint64_t seed = root_seed(config);
  if (config.staged && !config.radius) throw UsageError("--staged needs --radius n");
  if (!config.staged && !config.particles) throw UsageError("simulate needs --particles");
  const Environment env = load_environment(config);
  Outputs outputs(config);
  write_manifest(outputs, env, config);

  ParticleStreams streams(seed, 0);
  std::optional<Aggregate> aggregate;
  std::optional<StageTrace> trace;
  Conservation counts;
  if (config.staged) {
    StagedResult r = staged_construction(env, *config.radius, streams);
    counts = {r.trace.released, r.aggregate.particles_settled(),
              r.trace.stages.empty() ? 0 : r.trace.stages.back().paused};
    aggregate.emplace(std::move(r.aggregate));
    trace.emplace(std::move(r.trace));
  } else {
    Growth g = grow(env, env.origin(), *config.particles, config.radius, streams);
    counts = {g.released, g.aggregate.particles_settled(), g.ledger.size()};
    aggregate.emplace(std::move(g.aggregate));
  }

  {
    auto out = outputs.open("aggregate.txt");
    write_coordinates(out, env, *aggregate, seed);
    outputs.close(out);
  }
  if (config.raster) write_raster(outputs, "aggregate.ppm", env, &*aggregate, seed);
  {
    auto out = outputs.open("stats.jsonl");
    StatsWriter stats(out, seed, "simulate", stamp(config));
    Record r;
    r["kind"] = "simulation";
    r["mode"] = config.staged ? "staged" : "direct";
    r["released"] = counts.released;
    r["settled"] = counts.settled;
    r["paused"] = counts.paused;
    r["aggregate_size"] = aggregate->size();
    r["inradius"] = inradius(env, *aggregate);
    r["outradius"] = outradius(env, *aggregate);
    r["touched_box_boundary"] = aggregate->touched_box_boundary();
    stats.write(r);
    if (trace) {
      for (const Record& row : stage_records(*trace)) stats.write(row);
    }
    outputs.close(out);
  }
  if (trace) {
    auto out = outputs.open("trace.csv");
    write_trace_csv(out, *trace, seed);
    outputs.close(out);
  }
  return outputs.written();
}

std::vector<std::string> cmd_experiment(const RunConfig& config) {
  const std::uint64_t seed = root_seed(config);
  std::vector<SuiteFn> selected;
  for (const std::string& name : config.suites) {
    const auto it = std::find_if(suites().begin(), suites().end(),
                                 [&](const auto& entry) { return entry.first == name; });
    if (it == suites().end()) {
      throw UsageError("unknown suite '" + name + "'; available: " + join(available_suites(), ", "));
    }
    selected.push_back(it->second);
  }
  if (selected.empty()) {
    throw UsageError("no suite selected; available: " + join(available_suites(), ", "));
  }
  const Environment env = load_environment(config);
  Outputs outputs(config);
  write_manifest(outputs, env, config);
  auto out = outputs.open("stats.jsonl");
  StatsWriter stats(out, seed, "experiment", stamp(config));
  for (std::size_t i = 0; i < selected.size(); ++i) {
    selected[i](env, config, derive_seed(seed, 1000 + i), stats, std::cerr);
  }
  outputs.close(out);
  return outputs.written();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"IDLA on lattices and percolation clusters"};
  app.set_version_flag("--version", software_version());
  app.require_subcommand(1);

  RunConfig config;
  std::uint64_t seed = 0;
  std::string manifest;
  bool no_raster = false, no_timestamp = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--dim", config.dim, "lattice dimension")->check(CLI::Range(1, kMaxDim));
    sub->add_option("--extent", config.extent, "box half-width L")->check(CLI::Range(1, 100000));
    sub->add_option("--p", config.p, "edge retention probability")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--seed", seed, "root seed (required)");
    sub->add_option("--max-attempts", config.max_attempts, "environment retry budget")
        ->check(CLI::PositiveNumber);
    sub->add_option("--manifest", manifest, "load the environment from a manifest");
    sub->add_option("--workers", config.workers, "replica worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", config.out, "output directory");
    sub->add_flag("--no-raster", no_raster, "skip P6 output");
  };

  auto* percolate = app.add_subcommand("percolate", "generate an environment");
  common(percolate);

  auto* simulate = app.add_subcommand("simulate", "grow an aggregate");
  common(simulate);
  simulate->add_option("--particles", config.particles, "particles released");
  simulate->add_option("--radius", config.radius, "pause radius, or n with --staged")
      ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--staged", config.staged, "staged-radius construction");
  simulate->add_flag("--no-timestamp", no_timestamp, "omit the stats header timestamp");

  auto* experiment = app.add_subcommand("experiment", "run checker suites");
  common(experiment);
  experiment->add_option("--suite", config.suites, "comma-separated suites")->delimiter(',');
  experiment->add_option("--particles", config.particles, "particle count where used");
  experiment->add_option("--radius", config.radius, "n or r where used")->check(CLI::NonNegativeNumber);
  experiment->add_option("--replicas", config.replicas, "replicas")->check(CLI::PositiveNumber);
  experiment->add_option("--samples", config.samples, "samples or pairs")->check(CLI::PositiveNumber);
  experiment->add_option("--configs", config.configs, "random configurations")->check(CLI::PositiveNumber);
  experiment->add_option("--alphas", config.alphas, "candidate alphas")->delimiter(',');
  experiment->add_option("--schedule", config.schedule, "increasing n values")->delimiter(',');
  experiment->add_flag("--no-timestamp", no_timestamp, "omit the stats header timestamp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  config.command = chosen->get_name();
  if (chosen->count("--seed")) config.seed = seed;
  if (chosen->count("--manifest")) config.manifest = manifest;
  config.raster = !no_raster;
  config.timestamp = !no_timestamp;

  try {
    std::vector<std::string> written;
    if (config.command == "percolate") {
      written = cmd_percolate(config);
    } else if (config.command == "simulate") {
      written = cmd_simulate(config);
    } else {
      written = cmd_experiment(config);
    }
    for (const auto& path : written) out << path << "\n";
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace idla

#include "idla/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "idla/walk.hpp"

namespace idla {

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double spread = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - spread), std::min(1.0, centre + spread)};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

Interval bootstrap_quantile_interval(const std::vector<double>& values, double q,
                                     std::uint64_t seed, std::uint32_t lane, int resamples,
                                     double confidence) {
  const double point = quantile(values, q);
  Stream rng(seed, StreamDomain::kBootstrap, 0, 0, lane);
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<double> resample(values.size());
  const auto m = static_cast<std::uint32_t>(values.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& v : resample) v = values[rng.below(m)];
    stats.push_back(quantile(resample, q));
  }
  const double tail = (1.0 - confidence) / 2.0;
  const double q_lo = quantile(stats, tail);
  const double q_hi = quantile(stats, 1.0 - tail);
  return {2.0 * point - q_hi, 2.0 * point - q_lo};
}

double half_width_of(double point, const Interval& iv) {
  return std::max(point - iv.lower, iv.upper - point);
}

std::string key(const std::string& name, double value) {
  std::ostringstream out;
  out << name << "=" << value;
  return out.str();
}

void require_in_cluster(const Environment& env, Site s, const char* what) {
  if (s >= env.site_count() || !env.in_cluster(s)) {
    throw std::invalid_argument(std::string(what) + " must lie in the cluster");
  }
}

}  // namespace

Interval bootstrap_median_interval(const std::vector<double>& values, std::uint64_t seed,
                                   std::uint32_t lane, int resamples, double confidence) {
  return bootstrap_quantile_interval(values, 0.5, seed, lane, resamples, confidence);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double LemmaEstimate::detail(const std::string& name) const {
  for (const auto& [k, v] : details) {
    if (k == name) return v;
  }
  throw std::out_of_range("no detail named " + name);
}

bool derive_verdict(double estimate, double half_width, double bound, Relation relation) {
  switch (relation) {
    case Relation::kAtLeast: return estimate + half_width >= bound;
    case Relation::kAbove: return estimate + half_width > bound;
    case Relation::kAtMost: return estimate - half_width <= bound;
    case Relation::kBelow: return estimate - half_width < bound;
  }
  return false;
}

// ---------------------------------------------------------------------------

double inradius(const Environment& env, const Aggregate& aggregate) {
  const Site o = env.origin();
  std::int64_t first_missing = std::numeric_limits<std::int64_t>::max();
  for (Site s : env.cluster_sites()) {
    if (!aggregate.contains(s)) first_missing = std::min(first_missing, env.dist2(o, s));
  }
  std::int64_t covered = -1;
  for (Site s : env.cluster_sites()) {
    const auto d2 = env.dist2(o, s);
    if (d2 < first_missing) covered = std::max(covered, d2);
  }
  return covered < 0 ? 0.0 : std::sqrt(static_cast<double>(covered));
}

double outradius(const Environment& env, const Aggregate& aggregate) {
  std::int64_t far = 0;
  for (Site s : aggregate.history()) far = std::max(far, env.dist2(env.origin(), s));
  return std::sqrt(static_cast<double>(far));
}

ShapeStats shape_experiment(const Environment& env, double n, std::size_t replicas,
                            const ExperimentOptions& options) {
  if (replicas == 0) throw std::invalid_argument("shape experiment needs at least one replica");
  ShapeStats stats;
  stats.n = n;
  stats.replicas = replicas;
  stats.particles = cluster_ball_count(env, env.origin(), n);

  struct Outcome {
    double in, out;
    bool boundary;
    Conservation counts;
  };
  const auto outcomes = run_replicas<Outcome>(replicas, options.workers, [&](std::size_t i) {
    ParticleStreams streams(options.seed, static_cast<std::uint32_t>(i));
    Growth g = grow(env, env.origin(), stats.particles, std::nullopt, streams);
    return Outcome{inradius(env, g.aggregate), outradius(env, g.aggregate),
                   g.aggregate.touched_box_boundary(),
                   {g.released, g.aggregate.particles_settled(), g.ledger.size()}};
  });

  std::vector<double> in_ratio, out_ratio;
  for (const auto& o : outcomes) {
    stats.inradius.push_back(o.in);
    stats.outradius.push_back(o.out);
    in_ratio.push_back(o.in / n);
    out_ratio.push_back(o.out / n);
    stats.boundary_contacts += o.boundary ? 1 : 0;
    stats.conservation.push_back(o.counts);
  }
  stats.in_ratio_median = quantile(in_ratio, 0.5);
  stats.in_ratio_q05 = quantile(in_ratio, 0.05);
  stats.in_ratio_q95 = quantile(in_ratio, 0.95);
  stats.out_ratio_median = quantile(out_ratio, 0.5);
  stats.out_ratio_q05 = quantile(out_ratio, 0.05);
  stats.out_ratio_q95 = quantile(out_ratio, 0.95);
  return stats;
}

// ---------------------------------------------------------------------------

FillTrial fill_trial(const Environment& env, Site source, std::uint64_t particles,
                     const Region& region, std::size_t region_cluster_size,
                     ParticleStreams& streams) {
  FillTrial trial;
  trial.counts.released = particles;
  Aggregate aggregate(env, source);
  for (std::uint64_t i = 0; i < particles; ++i) {
    if (aggregate.size() == region_cluster_size) {
      // Every site a walk could settle on is taken; the rest would pause.
      trial.counts.paused += particles - i;
      break;
    }
    Stream rng = streams.next();
    if (add_particle(env, aggregate, source, region, rng)) ++trial.counts.paused;
  }
  trial.counts.settled = aggregate.particles_settled();
  trial.filled = aggregate.size() == region_cluster_size;
  return trial;
}

HitConfiguration random_hit_configuration(const Environment& env, Stream& rng) {
  const double near = std::max(1.0, env.half_extent() / 3.0);
  const auto centres = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), near});
  const Site centre = centres[rng.below(static_cast<std::uint32_t>(centres.size()))];
  const double max_radius = std::min(5.5, env.half_extent() / 2.0 + 0.5);
  const double radius = 1.5 + (max_radius - 1.5) * rng.uniform();

  HitConfiguration config;
  config.ball = Ball{env.vertex_of(centre), radius};
  const auto ball = cluster_ball_sites(env, config.ball);
  config.start = ball[rng.below(static_cast<std::uint32_t>(ball.size()))];

  switch (rng.below(4)) {
    case 0:
      config.target = {ball[rng.below(static_cast<std::uint32_t>(ball.size()))]};
      break;
    case 1:
      for (Site s : ball) {
        if (env.coord(s, 0) >= env.coord(centre, 0)) config.target.push_back(s);
      }
      break;
    case 2:
      for (Site s : ball) {
        if (rng.bits(1)) config.target.push_back(s);
      }
      if (config.target.empty()) config.target.push_back(ball.back());
      break;
    default:
      config.target = ball;
      break;
  }
  const auto size = static_cast<std::uint32_t>(ball.size());
  config.particles = size + rng.below(2 * size + 1);
  return config;
}

LemmaEstimate hit_probability_check(const Environment& env, const HitConfiguration& config,
                                    std::size_t samples, const ExperimentOptions& options) {
  if (samples == 0) throw std::invalid_argument("hit check needs samples");
  if (config.particles == 0) throw std::invalid_argument("hit check needs t > 0");
  const auto ball = cluster_ball_sites(env, config.ball);
  if (!std::binary_search(ball.begin(), ball.end(), config.start)) {
    throw std::invalid_argument("hit check: x must lie in B");
  }
  std::vector<Site> target = config.target;
  std::sort(target.begin(), target.end());
  target.erase(std::unique(target.begin(), target.end()), target.end());
  if (target.empty()) throw std::invalid_argument("hit check: Q must be nonempty");
  for (Site q : target) {
    if (!std::binary_search(ball.begin(), ball.end(), q)) {
      throw std::invalid_argument("hit check: Q must be a subset of B");
    }
  }

  // Left side: a walk stopped on leaving B visits Q iff it first leaves B \ Q
  // through Q.
  std::vector<Site> rest;
  std::set_difference(ball.begin(), ball.end(), target.begin(), target.end(),
                      std::back_inserter(rest));
  const auto in_rest = membership(env, rest);
  const auto in_target = membership(env, target);
  const bool starts_in_target = in_target[config.start] != 0;
  const auto hits = run_replicas<std::uint8_t>(samples, options.workers, [&](std::size_t i) {
    if (starts_in_target) return std::uint8_t{1};
    Stream rng(options.seed, StreamDomain::kParticle, static_cast<std::uint32_t>(i), 0, 1);
    const WalkOutcome out = walk_until(env, config.start, in_rest, Region::everywhere(), rng);
    return static_cast<std::uint8_t>(in_target[out.position] != 0);
  });
  const std::uint64_t hit_count = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});

  // Right side: fill events of A_t(x -> B).
  const Region region = Region::of_sites(env, ball);
  const auto fills = run_replicas<FillTrial>(samples, options.workers, [&](std::size_t i) {
    ParticleStreams streams(options.seed, static_cast<std::uint32_t>(i), 2);
    return fill_trial(env, config.start, config.particles, region, ball.size(), streams);
  });
  std::uint64_t fill_count = 0, conservation_failures = 0;
  for (const auto& f : fills) {
    fill_count += f.filled ? 1 : 0;
    conservation_failures += f.counts.holds() ? 0 : 1;
  }

  const double n = static_cast<double>(samples);
  const double scale = static_cast<double>(target.size()) / static_cast<double>(config.particles);
  const double left = hit_count / n;
  const Interval left_iv = wilson_interval(hit_count, samples);
  const double fill = fill_count / n;
  const Interval fill_iv = wilson_interval(fill_count, samples);
  const double right = fill * scale;

  LemmaEstimate est;
  est.lemma = "hit_probability";
  est.parameters = {{"radius", config.ball.radius},
                    {"ball_size", static_cast<double>(ball.size())},
                    {"target_size", static_cast<double>(target.size())},
                    {"t", static_cast<double>(config.particles)},
                    {"samples", n}};
  est.estimate = left;
  est.half_width = left_iv.upper - left;
  est.samples = samples;
  est.bound = fill_iv.lower * scale;
  est.relation = Relation::kAtLeast;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  const double spread = std::max({left - left_iv.lower, left_iv.upper - left,
                                  (fill_iv.upper - fill) * scale, (fill - fill_iv.lower) * scale,
                                  1e-300});
  est.details = {{"left", left},
                 {"left_lower", left_iv.lower},
                 {"left_upper", left_iv.upper},
                 {"fill", fill},
                 {"fill_lower", fill_iv.lower},
                 {"fill_upper", fill_iv.upper},
                 {"right", right},
                 {"right_lower", fill_iv.lower * scale},
                 {"right_upper", fill_iv.upper * scale},
                 {"margin_in_half_widths", (left - right) / spread},
                 {"conservation_failures", static_cast<double>(conservation_failures)}};
  return est;
}

// ---------------------------------------------------------------------------

AnnulusResult annulus_absorption_check(const Environment& env, double n,
                                       const std::vector<Site>& starts,
                                       const std::vector<Site>& initial, std::size_t samples,
                                       const std::vector<double>& deltas,
                                       const ExperimentOptions& options) {
  if (starts.empty()) throw std::invalid_argument("annulus check needs k >= 1 starts");
  if (samples == 0) throw std::invalid_argument("annulus check needs samples");
  const int d = env.dim();
  const auto k = static_cast<std::uint64_t>(starts.size());
  const double outer = n + stage_increment(k, d);
  const Region region = Region::ball(env, env.origin(), outer);
  for (Site s : starts) require_in_cluster(env, s, "annulus start");
  for (Site s : initial) require_in_cluster(env, s, "annulus aggregate site");

  bool in_range = std::pow(n, 1.0 / (d + 1)) < static_cast<double>(k) && static_cast<double>(k) < n;
  for (Site s : starts) in_range = in_range && rho(env, env.origin(), s) < n;
  for (Site s : initial) in_range = in_range && rho(env, env.origin(), s) < n;

  struct Outcome {
    std::uint64_t absorbed;
    Conservation counts;
  };
  const auto outcomes = run_replicas<Outcome>(samples, options.workers, [&](std::size_t i) {
    Aggregate aggregate(env, env.origin());
    for (Site s : initial) {
      if (!aggregate.contains(s)) aggregate.settle(env, s);
    }
    const std::uint64_t before = aggregate.size();
    ParticleStreams streams(options.seed, static_cast<std::uint32_t>(i), 3);
    const PausedLedger ledger = add_batch(env, aggregate, starts, region, streams);
    const std::uint64_t absorbed = aggregate.size() - before;
    return Outcome{absorbed, {k, absorbed, ledger.size()}};
  });

  AnnulusResult result;
  std::vector<double> fraction;
  double mean = 0.0;
  for (const auto& o : outcomes) {
    result.absorbed.push_back(o.absorbed);
    result.conservation.push_back(o.counts);
    fraction.push_back(static_cast<double>(o.absorbed) / static_cast<double>(k));
    mean += static_cast<double>(o.absorbed);
  }
  mean /= static_cast<double>(samples);

  LemmaEstimate& est = result.estimate;
  est.lemma = "annulus_absorption";
  est.parameters = {{"n", n}, {"k", static_cast<double>(k)}, {"outer_radius", outer},
                    {"initial_size", static_cast<double>(initial.size())}};
  est.estimate = quantile(fraction, 0.05);
  const Interval iv = bootstrap_quantile_interval(fraction, 0.05, options.seed, 3, 1000, 0.95);
  est.half_width = half_width_of(est.estimate, iv);
  est.samples = samples;
  est.bound = 0.0;
  est.relation = Relation::kAbove;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  est.details = {{"mean_absorbed", mean}, {"in_lemma_range", in_range ? 1.0 : 0.0}};
  for (double delta : deltas) {
    std::uint64_t tail = 0;
    for (const auto& o : outcomes) {
      tail += static_cast<double>(o.absorbed) <= delta * static_cast<double>(k) ? 1 : 0;
    }
    const Interval tiv = wilson_interval(tail, samples);
    est.details.emplace_back(key("tail_frequency@delta", delta),
                             static_cast<double>(tail) / static_cast<double>(samples));
    est.details.emplace_back(key("tail_upper@delta", delta), tiv.upper);
  }
  return result;
}

// ---------------------------------------------------------------------------

LemmaEstimate wlb_check(const Environment& env, const WlbSpec& spec,
                        const ExperimentOptions& options) {
  if (spec.alphas.empty()) throw std::invalid_argument("wlb check needs candidate alphas");
  for (double a : spec.alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("wlb: alpha must lie in (0, 1]");
  }
  const int d = env.dim();
  const std::vector<double> radii = spec.radii.empty() ? default_growth_radii(spec.n, d) : spec.radii;

  struct Config {
    Site centre;
    double radius;
  };
  std::vector<Config> configs;
  Stream sampler(options.seed, StreamDomain::kSampling, 0, 0, 4);
  for (double r : radii) {
    const auto pool = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), spec.n + r});
    if (pool.empty()) throw std::invalid_argument("wlb: empty centre pool");
    for (std::size_t c = 0; c < spec.centers; ++c) {
      configs.push_back({pool[sampler.below(static_cast<std::uint32_t>(pool.size()))], r});
    }
  }

  LemmaEstimate est;
  est.lemma = "wlb";
  est.parameters = {{"n", spec.n}, {"centers", static_cast<double>(spec.centers)},
                    {"replicas", static_cast<double>(spec.replicas)}};
  std::uint64_t conservation_failures = 0;
  double best = 0.0;
  std::uint32_t lane = 16;
  for (double alpha : spec.alphas) {
    bool passes = true;
    double worst_lower = 1.0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci, ++lane) {
      const auto& cfg = configs[ci];
      const Region region = Region::ball(env, cfg.centre, cfg.radius);
      const std::size_t region_size = cluster_ball_count(env, cfg.centre, cfg.radius);
      const std::uint64_t particles = cluster_ball_count(env, cfg.centre, cfg.radius / alpha);
      const auto trials =
          run_replicas<FillTrial>(spec.replicas, options.workers, [&](std::size_t i) {
            ParticleStreams streams(options.seed, static_cast<std::uint32_t>(i), lane);
            return fill_trial(env, cfg.centre, particles, region, region_size, streams);
          });
      std::uint64_t filled = 0;
      for (const auto& t : trials) {
        filled += t.filled ? 1 : 0;
        conservation_failures += t.counts.holds() ? 0 : 1;
      }
      const Interval iv = wilson_interval(filled, spec.replicas);
      worst_lower = std::min(worst_lower, iv.lower);
      passes = passes && iv.lower >= alpha;
      const std::string tag = key("alpha", alpha) + ";" + key("r", cfg.radius) + ";" +
                              key("centre", static_cast<double>(ci % spec.centers));
      est.details.emplace_back(tag + ":fill",
                               static_cast<double>(filled) / static_cast<double>(spec.replicas));
      est.details.emplace_back(tag + ":fill_lower", iv.lower);
    }
    est.details.emplace_back(key("worst_fill_lower@alpha", alpha), worst_lower);
    if (passes) best = std::max(best, alpha);
  }
  est.details.emplace_back("conservation_failures", static_cast<double>(conservation_failures));
  est.estimate = best;
  est.half_width = 0.0;
  est.samples = spec.replicas * configs.size() * spec.alphas.size();
  est.bound = 0.0;
  est.relation = Relation::kAbove;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  return est;
}

// ---------------------------------------------------------------------------

LbResult lb_check(const Environment& env, const std::vector<double>& n_schedule,
                  std::size_t replicas, const ExperimentOptions& options) {
  if (n_schedule.empty() || replicas == 0) throw std::invalid_argument("lb check: empty schedule");
  if (!std::is_sorted(n_schedule.begin(), n_schedule.end())) {
    throw std::invalid_argument("lb check: schedule must be increasing");
  }
  LbResult result;
  result.n_values = n_schedule;
  std::vector<double> half_widths;
  LemmaEstimate& est = result.estimate;
  est.lemma = "lb";
  for (std::size_t ni = 0; ni < n_schedule.size(); ++ni) {
    const double n = n_schedule[ni];
    const std::uint64_t b = cluster_ball_count(env, env.origin(), n);
    struct Outcome {
      double ratio;
      Conservation counts;
    };
    const auto outcomes = run_replicas<Outcome>(replicas, options.workers, [&](std::size_t i) {
      ParticleStreams streams(options.seed, static_cast<std::uint32_t>(i),
                              32 + static_cast<std::uint32_t>(ni));
      Growth g = grow(env, env.origin(), b, n, streams);
      return Outcome{static_cast<double>(g.aggregate.size()) / static_cast<double>(b),
                     {g.released, g.aggregate.particles_settled(), g.ledger.size()}};
    });
    std::vector<double> ratios;
    for (const auto& o : outcomes) {
      ratios.push_back(o.ratio);
      result.conservation.push_back(o.counts);
    }
    const double med = median(ratios);
    const Interval iv = bootstrap_median_interval(ratios, options.seed, 32 + static_cast<std::uint32_t>(ni));
    result.medians.push_back(med);
    result.ratios.push_back(std::move(ratios));
    half_widths.push_back(half_width_of(med, iv));
    est.parameters.emplace_back("n", n);
    est.details.emplace_back(key("median@n", n), med);
    est.details.emplace_back(key("half_width@n", n), half_widths.back());
  }
  est.samples = replicas * n_schedule.size();
  est.relation = Relation::kAtLeast;
  est.bound = 0.0;
  if (n_schedule.size() == 1) {
    est.estimate = result.medians[0];
    est.half_width = half_widths[0];
  } else {
    est.estimate = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < result.medians.size(); ++i) {
      const double step = result.medians[i + 1] - result.medians[i];
      if (step < est.estimate) {
        est.estimate = step;
        est.half_width = std::hypot(half_widths[i], half_widths[i + 1]);
      }
    }
  }
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  return result;
}

// ---------------------------------------------------------------------------

DistanceResult distance_comparison_check(const Environment& env, double n, std::size_t pairs,
                                         const ExperimentOptions& options,
                                         std::optional<double> min_separation) {
  if (pairs == 0) throw std::invalid_argument("distance check needs pairs");
  const double lo = min_separation.value_or(std::log(n));
  const auto pool = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), n});
  if (pool.size() < 2) throw std::invalid_argument("distance check: too few cluster sites");
  Stream rng(options.seed, StreamDomain::kSampling, 0, 0, 5);
  const auto m = static_cast<std::uint32_t>(pool.size());

  DistanceResult result;
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t accepted = 0, attempts = 0;
  while (accepted < pairs) {
    if (++attempts > 1000 * pairs) {
      throw std::runtime_error("distance check: separation window admits too few pairs");
    }
    const Site x = pool[rng.below(m)];
    const Site y = pool[rng.below(m)];
    const double r = rho(env, x, y);
    if (r < lo || r > n || x == y) continue;
    const auto hops = graph_distance(env, x, y, kUnreached - 1);
    if (!hops) throw std::logic_error("distance check: cluster pair disconnected");
    ++accepted;
    const double dg = static_cast<double>(*hops);
    min_slack = std::min(min_slack, dg - r);
    result.fitted_c1 = std::max(result.fitted_c1, dg / r);
    if (r > dg) ++result.left_violations;
  }

  LemmaEstimate& est = result.estimate;
  est.lemma = "distance_comparison";
  est.parameters = {{"n", n}, {"min_separation", lo}, {"pairs", static_cast<double>(pairs)}};
  est.estimate = min_slack;
  est.half_width = 0.0;
  est.samples = pairs;
  est.bound = 0.0;
  est.relation = Relation::kAtLeast;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  est.details = {{"fitted_c1", result.fitted_c1},
                 {"left_violations", static_cast<double>(result.left_violations)}};
  return result;
}

// ---------------------------------------------------------------------------

ExitLawResult exit_law_check(const Environment& env, Site start, const std::vector<Site>& set,
                             std::size_t samples, double tolerance,
                             const ExperimentOptions& options) {
  if (samples == 0) throw std::invalid_argument("exit law check needs samples");
  const auto in_set = membership(env, set);
  ExitLawResult result;
  result.samples = samples;
  result.exact = exact_exit_distribution(env, start, in_set);
  const auto exits = run_replicas<Site>(samples, options.workers, [&](std::size_t i) {
    Stream rng(options.seed, StreamDomain::kParticle, static_cast<std::uint32_t>(i), 0, 6);
    return walk_until(env, start, in_set, Region::everywhere(), rng).position;
  });
  for (Site s : exits) ++result.counts[env.vertex_of(s)];

  double tv = 0.0;
  for (const auto& [v, p] : result.exact.probability) {
    const auto it = result.counts.find(v);
    const double freq = it == result.counts.end() ? 0.0 : static_cast<double>(it->second) / samples;
    tv += std::abs(freq - p);
  }
  std::uint64_t stray = 0;
  for (const auto& [v, c] : result.counts) {
    if (!result.exact.probability.count(v)) {
      tv += static_cast<double>(c) / samples;
      stray += c;
    }
  }
  tv /= 2.0;

  LemmaEstimate& est = result.estimate;
  est.lemma = "exit_law";
  est.parameters = {{"set_size", static_cast<double>(set.size())},
                    {"samples", static_cast<double>(samples)}};
  est.estimate = tv;
  est.half_width = 0.0;
  est.samples = samples;
  est.bound = tolerance;
  est.relation = Relation::kBelow;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  est.details = {{"exit_sites", static_cast<double>(result.exact.probability.size())},
                 {"exact_mass", result.exact.total()},
                 {"unexpected_exits", static_cast<double>(stray)}};
  return result;
}

LemmaEstimate abelian_check(const Environment& env, const AggregateKey& initial,
                            const std::vector<Site>& starts, const Region& pause,
                            double tolerance) {
  const AggregateLaw direct = exact_direct_law(env, initial, starts);
  const AggregateLaw fifo = exact_pause_restart_law(env, initial, starts, pause,
                                                    Region::everywhere(), RestartOrder::kFifo);
  const AggregateLaw reversed = exact_pause_restart_law(
      env, initial, starts, pause, Region::everywhere(), RestartOrder::kReversed);
  const double diff_fifo = max_abs_difference(direct, fifo);
  const double diff_reversed = max_abs_difference(direct, reversed);

  double mass = 0.0;
  for (const auto& [a, p] : direct) mass += p;

  LemmaEstimate est;
  est.lemma = "abelian";
  est.parameters = {{"initial_size", static_cast<double>(initial.size())},
                    {"particles", static_cast<double>(starts.size())},
                    {"pause_radius", pause.radius()}};
  est.estimate = std::max(diff_fifo, diff_reversed);
  est.half_width = 0.0;
  est.samples = 0;
  est.bound = tolerance;
  est.relation = Relation::kBelow;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  est.details = {{"max_difference_fifo", diff_fifo},
                 {"max_difference_reversed", diff_reversed},
                 {"total_variation_fifo", total_variation(direct, fifo)},
                 {"support_size", static_cast<double>(direct.size())},
                 {"direct_mass", mass}};
  return est;
}

OccupationResult staged_direct_comparison(const Environment& env, double n, std::size_t replicas,
                                          double tolerance, const ExperimentOptions& options) {
  if (replicas == 0) throw std::invalid_argument("occupation comparison needs replicas");
  const std::uint64_t particles = cluster_ball_count(env, env.origin(), n);
  std::vector<std::uint32_t> direct_hits(env.site_count(), 0), staged_hits(env.site_count(), 0);
  OccupationResult result;

  struct Outcome {
    std::vector<Site> direct, staged;
    Conservation direct_counts, staged_counts;
    StageTrace trace;
  };
  // Chunks keep memory flat; results are folded in replica order.
  const std::size_t chunk = 256;
  for (std::size_t base = 0; base < replicas; base += chunk) {
    const std::size_t count = std::min(chunk, replicas - base);
    auto outcomes = run_replicas<Outcome>(count, options.workers, [&](std::size_t j) {
      const auto i = static_cast<std::uint32_t>(base + j);
      ParticleStreams direct_streams(options.seed, i, 7);
      Growth g = grow(env, env.origin(), particles, std::nullopt, direct_streams);
      ParticleStreams staged_streams(options.seed, i, 8);
      StagedResult st = staged_construction(env, n, staged_streams);
      const std::uint64_t left = st.trace.stages.empty() ? 0 : st.trace.stages.back().paused;
      return Outcome{g.aggregate.history(), st.aggregate.history(),
                     {g.released, g.aggregate.particles_settled(), g.ledger.size()},
                     {st.trace.released, st.aggregate.particles_settled(), left},
                     std::move(st.trace)};
    });
    for (auto& o : outcomes) {
      for (Site s : o.direct) ++direct_hits[s];
      for (Site s : o.staged) ++staged_hits[s];
      result.conservation.push_back(o.direct_counts);
      result.conservation.push_back(o.staged_counts);
      result.traces.push_back(std::move(o.trace));
    }
  }

  const double total = static_cast<double>(replicas);
  double worst = 0.0, worst_se = 0.0;
  Site worst_site = env.origin();
  for (Site s = 0; s < env.site_count(); ++s) {
    if (direct_hits[s] == 0 && staged_hits[s] == 0) continue;
    const double a = direct_hits[s] / total, b = staged_hits[s] / total;
    result.sites.push_back(s);
    result.direct.push_back(a);
    result.staged.push_back(b);
    const double pooled = (a + b) / 2.0;
    worst_se = std::max(worst_se, std::sqrt(2.0 * pooled * (1.0 - pooled) / total));
    if (std::abs(a - b) > worst) {
      worst = std::abs(a - b);
      worst_site = s;
    }
  }

  LemmaEstimate& est = result.estimate;
  est.lemma = "staged_occupation";
  est.parameters = {{"n", n}, {"particles", static_cast<double>(particles)},
                    {"replicas", total}};
  est.estimate = worst;
  est.half_width = 0.0;
  est.samples = replicas;
  est.bound = tolerance;
  est.relation = Relation::kBelow;
  est.verdict = derive_verdict(est.estimate, est.half_width, est.bound, est.relation);
  est.details = {{"sites_compared", static_cast<double>(result.sites.size())},
                 {"largest_standard_error", worst_se},
                 {"worst_site_x0", static_cast<double>(env.coord(worst_site, 0))},
                 {"worst_site_x1", env.dim() > 1 ? static_cast<double>(env.coord(worst_site, 1)) : 0.0}};
  return result;
}

}  // namespace idla

#include "idla/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "idla/rng.hpp"

namespace idla {

double rho(const Vertex& x, const Vertex& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("rho: dimension mismatch");
  std::int64_t sum = 0;
  for (int a = 0; a < x.dim(); ++a) {
    const std::int64_t diff = static_cast<std::int64_t>(x[a]) - y[a];
    sum += diff * diff;
  }
  return std::sqrt(static_cast<double>(sum));
}

double rho(const Environment& env, Site x, Site y) {
  return std::sqrt(static_cast<double>(env.dist2(x, y)));
}

std::vector<Site> cluster_ball_sites(const Environment& env, const Ball& ball) {
  if (ball.center.dim() != env.dim()) throw std::invalid_argument("ball dimension mismatch");
  std::vector<Site> out;
  if (ball.radius <= 0) return out;
  const int d = env.dim();
  const int L = env.half_extent();
  const int reach = static_cast<int>(std::ceil(ball.radius));
  std::array<int, kMaxDim> lo{}, hi{}, cur{};
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max(-L, ball.center[a] - reach);
    hi[a] = std::min(L, ball.center[a] + reach);
    if (lo[a] > hi[a]) return out;
    cur[a] = lo[a];
  }
  Vertex v = Vertex::origin(d);
  for (;;) {
    for (int a = 0; a < d; ++a) v[a] = cur[a];
    if (ball.contains(v)) {
      const Site s = env.site_of(v);
      if (env.in_cluster(s)) out.push_back(s);
    }
    int a = 0;
    while (a < d && cur[a] == hi[a]) {
      cur[a] = lo[a];
      ++a;
    }
    if (a == d) break;
    ++cur[a];
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> graph_distances_from(const Environment& env, Site x,
                                                std::uint32_t cutoff) {
  std::vector<std::uint32_t> dist(env.site_count(), kUnreached);
  std::vector<Site> frontier{x}, next;
  dist[x] = 0;
  for (std::uint32_t level = 0; level < cutoff && !frontier.empty(); ++level) {
    next.clear();
    for (Site s : frontier) {
      for (Site t : env.neighbors(s)) {
        if (dist[t] == kUnreached) {
          dist[t] = level + 1;
          next.push_back(t);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

std::optional<std::uint32_t> graph_distance(const Environment& env, Site x, Site y,
                                            std::uint32_t cutoff) {
  if (x == y) return 0u;
  std::vector<std::uint8_t> seen(env.site_count(), 0);
  std::vector<Site> frontier{x}, next;
  seen[x] = 1;
  for (std::uint32_t level = 0; level < cutoff && !frontier.empty(); ++level) {
    next.clear();
    for (Site s : frontier) {
      for (Site t : env.neighbors(s)) {
        if (seen[t]) continue;
        if (t == y) return level + 1;
        seen[t] = 1;
        next.push_back(t);
      }
    }
    frontier.swap(next);
  }
  return std::nullopt;
}

ConditionReport check_continuity(const Environment& env, const ContinuitySpec& spec) {
  if (spec.min_radius < 0 || spec.max_radius < spec.min_radius) {
    throw std::invalid_argument("continuity check: bad radius range");
  }
  ConditionReport report;
  report.condition = "C";
  report.tolerance = 1.0;
  report.seed = spec.seed;
  Stream rng(spec.seed, StreamDomain::kSampling, 0, 0);
  const auto& cluster = env.cluster_sites();

  std::size_t attempts = 0;
  while (report.samples.size() < spec.pairs) {
    if (++attempts > 100 * spec.pairs + 100) {
      throw std::runtime_error("continuity check: radius range admits too few cluster pairs");
    }
    const Site x = cluster[rng.below(static_cast<std::uint32_t>(cluster.size()))];
    const Vertex vx = env.vertex_of(x);
    std::vector<Site> candidates;
    for (Site y : cluster_ball_sites(env, Ball{vx, std::nextafter(spec.max_radius, 1e300)})) {
      if (rho(env, x, y) >= spec.min_radius) candidates.push_back(y);
    }
    if (candidates.empty()) continue;
    const Site y = candidates[rng.below(static_cast<std::uint32_t>(candidates.size()))];
    const auto hops = graph_distance(env, x, y, kUnreached - 1);
    if (!hops) throw std::logic_error("continuity check: cluster pair is disconnected");
    const double r = rho(env, x, y);
    ConditionSample sample{vx, env.vertex_of(y), r, static_cast<double>(*hops), static_cast<double>(*hops)};
    if (*hops > 0) report.fitted_c = std::max(report.fitted_c, r / *hops);
    if (r > 1.0 * *hops) report.violations.push_back(sample);
    report.samples.push_back(sample);
  }
  report.pass = report.violations.empty();
  return report;
}

std::vector<double> default_growth_radii(double n, int dim) {
  std::vector<double> radii;
  const double start = std::pow(n, 1.0 / (static_cast<double>(dim) * dim * dim));
  for (double r = start; r < n; r *= 2.0) radii.push_back(r);
  radii.push_back(n);
  return radii;
}

ConditionReport check_volume_growth(const Environment& env, const VolumeGrowthSpec& spec) {
  const int d = env.dim();
  const std::vector<double> radii = spec.radii.empty() ? default_growth_radii(spec.n, d) : spec.radii;
  ConditionReport report;
  report.condition = "VG";
  report.exponent = d;
  report.tolerance = spec.tolerance;
  report.seed = spec.seed;

  const auto centres = cluster_ball_sites(env, Ball{env.vertex_of(env.origin()), spec.n});
  if (centres.empty()) throw std::invalid_argument("volume growth check: empty ball B_o(n)");
  Stream rng(spec.seed, StreamDomain::kSampling, 0, 1);
  for (std::size_t i = 0; i < spec.centers; ++i) {
    const Site x = centres[rng.below(static_cast<std::uint32_t>(centres.size()))];
    for (double r : radii) {
      const double volume = std::pow(r, d);
      const auto count = static_cast<double>(cluster_ball_count(env, x, r));
      const double ratio = count > 0 ? std::max(count / volume, volume / count)
                                     : std::numeric_limits<double>::infinity();
      ConditionSample sample{env.vertex_of(x), env.vertex_of(x), r, count, volume};
      report.fitted_c = std::max(report.fitted_c, ratio);
      if (ratio > spec.tolerance) report.violations.push_back(sample);
      report.samples.push_back(sample);
    }
  }
  report.pass = report.violations.empty();
  return report;
}

}  // namespace idla

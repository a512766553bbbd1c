#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "idla/environment.hpp"

namespace idla {

/// Euclidean distance. Throws std::invalid_argument on dimension mismatch.
double rho(const Vertex& x, const Vertex& y);
double rho(const Environment& env, Site x, Site y);

/// Strict Euclidean ball: y is inside iff rho(center, y) < radius.
struct Ball {
  Vertex center;
  double radius = 0.0;

  bool contains(const Vertex& y) const { return rho(center, y) < radius; }
};

/// Sites of the cluster inside the ball, in increasing site order.
std::vector<Site> cluster_ball_sites(const Environment& env, const Ball& ball);

/// Length of a shortest open path from x to y, or nullopt if none exists
/// within `cutoff` steps.
std::optional<std::uint32_t> graph_distance(const Environment& env, Site x, Site y,
                                            std::uint32_t cutoff);

/// All graph distances from x up to `cutoff`; unreached sites hold kUnreached.
inline constexpr std::uint32_t kUnreached = 0xFFFFFFFFu;
std::vector<std::uint32_t> graph_distances_from(const Environment& env, Site x,
                                                std::uint32_t cutoff);

struct ConditionSample {
  Vertex x;
  Vertex y;        // unused by the volume-growth check
  double radius;   // rho(x, y) for continuity, r for volume growth
  double measured; // d_G(x, y) or |B_x(r)|
  double bound;    // the bound the measurement is held against
};

struct ConditionReport {
  std::string condition;  // "C" or "VG"
  double fitted_c = 0.0;
  double exponent = 0.0;  // d for VG
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::vector<ConditionSample> samples;
  std::vector<ConditionSample> violations;
  bool pass = false;
};

struct ContinuitySpec {
  std::size_t pairs = 1000;
  double min_radius = 0.0;
  double max_radius = 20.0;
  std::uint64_t seed = 0;
};

/// Samples cluster pairs with min_radius <= rho <= max_radius and checks
/// rho(x, y) <= c * d_G(x, y) with c = 1. Any pair with rho > d_G is a
/// violation. fitted_c is the largest observed rho / d_G.
ConditionReport check_continuity(const Environment& env, const ContinuitySpec& spec);

struct VolumeGrowthSpec {
  double n = 100.0;
  std::vector<double> radii;  // empty: geometric schedule over [n^(1/d^3), n]
  std::size_t centers = 20;
  double tolerance = 4.0;
  std::uint64_t seed = 0;
};

/// Smallest c with r^d / c <= |B_x(r)| <= c r^d over sampled centres in
/// B_o(n) and the scheduled radii. Passes when c <= tolerance.
ConditionReport check_volume_growth(const Environment& env, const VolumeGrowthSpec& spec);

/// Default radius schedule for (VG): doubling from n^(1/d^3) up to n.
std::vector<double> default_growth_radii(double n, int dim);

}  // namespace idla

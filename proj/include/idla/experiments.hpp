#pragma once

// Monte Carlo estimators that hold simulated IDLA against the inequalities
// and assumptions of the limit-shape argument at desk scale. Constants in
// those statements are existential, so every checker fits or brackets a
// constant rather than asserting a fixed value.

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "idla/aggregate.hpp"
#include "idla/exact_law.hpp"
#include "idla/environment.hpp"
#include "idla/metric.hpp"

namespace idla {

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Type-7 (linear interpolation) sample quantile. Requires a nonempty sample.
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

/// Basic bootstrap interval for the median with `resamples` resamples.
Interval bootstrap_median_interval(const std::vector<double>& values, std::uint64_t seed,
                                   std::uint32_t lane, int resamples = 1000,
                                   double confidence = 0.95);

// ---------------------------------------------------------------------------
// Replica scheduling

/// Runs fn(0..count-1) on `workers` threads. Results are stored by replica
/// index, so the output never depends on scheduling.
template <class Result, class Fn>
std::vector<Result> run_replicas(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<std::optional<Result>> slots(count);
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) slots[i].emplace(fn(i));
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(workers, count);
    for (unsigned w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            slots[i].emplace(fn(i));
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

// ---------------------------------------------------------------------------
// Lemma estimates

/// How an estimate is held against its bound. Checks are falsification
/// tests: the verdict fails only when the estimate, moved by its half-width
/// toward the bound, still lies on the wrong side.
enum class Relation { kAtLeast, kAbove, kAtMost, kBelow };

struct LemmaEstimate {
  std::string lemma;
  std::vector<std::pair<std::string, double>> parameters;
  double estimate = 0.0;
  double half_width = 0.0;
  std::uint64_t samples = 0;
  double bound = 0.0;
  Relation relation = Relation::kAtLeast;
  bool verdict = false;
  std::vector<std::pair<std::string, double>> details;

  double detail(const std::string& key) const;
};

bool derive_verdict(double estimate, double half_width, double bound, Relation relation);

/// Particle bookkeeping for one replica: settled + paused == released.
struct Conservation {
  std::uint64_t released = 0;
  std::uint64_t settled = 0;
  std::uint64_t paused = 0;

  bool holds() const { return settled + paused == released; }
};

/// Root seed for the index-th sub-experiment of a run (splitmix64 of both).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

struct ExperimentOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// ---------------------------------------------------------------------------
// Shape

/// Largest realized distance r = rho(o, y) such that every cluster vertex z
/// with rho(o, z) <= r lies in the aggregate; 0 when only the origin does.
double inradius(const Environment& env, const Aggregate& aggregate);
/// max rho(o, y) over the aggregate.
double outradius(const Environment& env, const Aggregate& aggregate);

struct ShapeStats {
  double n = 0.0;
  std::size_t replicas = 0;
  std::uint64_t particles = 0;  // b_o(n)
  std::vector<double> inradius;
  std::vector<double> outradius;
  double in_ratio_median = 0, in_ratio_q05 = 0, in_ratio_q95 = 0;
  double out_ratio_median = 0, out_ratio_q05 = 0, out_ratio_q95 = 0;
  std::size_t boundary_contacts = 0;
  std::vector<Conservation> conservation;
};

/// Runs A_{b_o(n)}(o) per replica and records cluster-restricted in/out radii.
ShapeStats shape_experiment(const Environment& env, double n, std::size_t replicas,
                            const ExperimentOptions& options);

// ---------------------------------------------------------------------------
// Hitting probability lower bound

struct HitConfiguration {
  Ball ball;
  std::vector<Site> target;  // Q, a subset of the cluster part of the ball
  Site start = 0;            // x, inside the ball
  std::uint64_t particles = 1;  // t
};

/// Estimates P[walk from x stopped on leaving B visits Q] and
/// P[B c A_t(x -> B)] * |Q| / t, and holds the first at least the second.
/// The verdict fails only if the left upper 95% limit lies below the right
/// lower limit.
LemmaEstimate hit_probability_check(const Environment& env, const HitConfiguration& config,
                                    std::size_t samples, const ExperimentOptions& options);

/// A random configuration around a cluster vertex near the origin.
HitConfiguration random_hit_configuration(const Environment& env, Stream& rng);

// ---------------------------------------------------------------------------
// Annulus absorption

struct AnnulusResult {
  LemmaEstimate estimate;
  std::vector<std::uint64_t> absorbed;  // |A \ S| per replica
  std::vector<Conservation> conservation;
};

/// Releases k particles from `starts` on S with pause region B_o(n + k^(1/d))
/// and records how many are absorbed. Reports the 5th percentile of
/// |A \ S| / k as delta-hat and the frequency of |A \ S| <= delta k for each
/// candidate delta.
AnnulusResult annulus_absorption_check(const Environment& env, double n,
                                       const std::vector<Site>& starts,
                                       const std::vector<Site>& initial, std::size_t samples,
                                       const std::vector<double>& deltas,
                                       const ExperimentOptions& options);

// ---------------------------------------------------------------------------
// Weak lower bound

struct WlbSpec {
  double n = 40;
  std::vector<double> alphas{0.5};
  std::vector<double> radii;  // empty: default_growth_radii(n, d)
  std::size_t centers = 4;
  std::size_t replicas = 200;
};

/// Fill probability of B_x(r) by b_x(r / alpha) particles paused on B_x(r),
/// for sampled x in B_o(n + r). An alpha passes when every (x, r) has a
/// Wilson lower limit >= alpha; the estimate is the largest passing alpha.
LemmaEstimate wlb_check(const Environment& env, const WlbSpec& spec,
                        const ExperimentOptions& options);

/// One fill trial: does A_t(x -> region) cover every cluster site of the
/// region? Particles stop being simulated once the region is full; they
/// would all be paused.
struct FillTrial {
  bool filled = false;
  Conservation counts;
};
FillTrial fill_trial(const Environment& env, Site source, std::uint64_t particles,
                     const Region& region, std::size_t region_cluster_size,
                     ParticleStreams& streams);

// ---------------------------------------------------------------------------
// Stopped-aggregate lower bound

struct LbResult {
  LemmaEstimate estimate;
  std::vector<double> n_values;
  std::vector<double> medians;
  std::vector<std::vector<double>> ratios;  // per n, per replica
  std::vector<Conservation> conservation;
};

/// |A_{b_o(n)}(o -> n)| / b_o(n) per replica for each n. The estimate is the
/// smallest step between consecutive medians, held at or above 0.
LbResult lb_check(const Environment& env, const std::vector<double>& n_schedule,
                  std::size_t replicas, const ExperimentOptions& options);

// ---------------------------------------------------------------------------
// Distance comparison

struct DistanceResult {
  LemmaEstimate estimate;
  double fitted_c1 = 0.0;
  std::size_t left_violations = 0;
};

/// Samples cluster pairs in B_o(n) with min_separation <= rho <= n (default
/// min_separation = log n), verifies rho <= d_G exactly and fits the smallest
/// c1 with d_G <= c1 rho.
DistanceResult distance_comparison_check(const Environment& env, double n, std::size_t pairs,
                                         const ExperimentOptions& options,
                                         std::optional<double> min_separation = std::nullopt);

// ---------------------------------------------------------------------------
// Oracle comparisons

struct ExitLawResult {
  LemmaEstimate estimate;
  ExitDistribution exact;
  std::map<Vertex, std::uint64_t> counts;
  std::uint64_t samples = 0;
};

/// Empirical exit law of S seen from `start` against the exact harmonic
/// measure. The estimate is the total-variation distance, held at most
/// `tolerance`.
ExitLawResult exit_law_check(const Environment& env, Site start, const std::vector<Site>& set,
                             std::size_t samples, double tolerance,
                             const ExperimentOptions& options);

/// Exact law of A(S; starts) against pausing on T and restarting the ledger
/// everywhere, in pause order and in reverse. The estimate is the largest
/// entrywise difference, held at most `tolerance`.
LemmaEstimate abelian_check(const Environment& env, const AggregateKey& initial,
                            const std::vector<Site>& starts, const Region& pause,
                            double tolerance = 1e-10);

struct OccupationResult {
  LemmaEstimate estimate;
  std::vector<Site> sites;        // every site occupied in some replica, increasing
  std::vector<double> direct;     // occupation frequency per site
  std::vector<double> staged;
  std::vector<Conservation> conservation;
  std::vector<StageTrace> traces;
};

/// Per-site occupation frequencies of A_{b_o(n)}(o) grown directly and by the
/// staged construction, from independent streams. The estimate is the largest
/// per-site difference, held at most `tolerance`.
OccupationResult staged_direct_comparison(const Environment& env, double n, std::size_t replicas,
                                          double tolerance, const ExperimentOptions& options);

}  // namespace idla

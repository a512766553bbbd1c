#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "idla/environment.hpp"
#include "idla/rng.hpp"

namespace idla {

/// Membership of the box sites in a pause region T. A region is either the
/// whole graph (pausing disabled) or an explicit site set.
class Region {
 public:
  static Region everywhere() { return Region(); }
  /// Strict Euclidean ball around `center`.
  static Region ball(const Environment& env, Site center, double radius);
  static Region of_sites(const Environment& env, std::span<const Site> sites);

  bool is_everywhere() const { return everywhere_; }
  bool contains(Site s) const { return everywhere_ || member_[s] != 0; }
  const std::uint8_t* data() const { return member_.data(); }
  /// Ball radius when built by ball(), +infinity for everywhere().
  double radius() const { return radius_; }

 private:
  Region() = default;

  bool everywhere_ = true;
  double radius_ = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> member_;
};

class StepCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultStepCap = 1'000'000'000ull;

enum class WalkStatus { kAbsorbed, kPaused };

/// A paused walk: the last site it held inside T, and the step it had
/// already drawn out of T. Resuming takes that step first, so pausing and
/// resuming is the same walk as never pausing.
struct PausedWalker {
  Site position;
  Site pending;

  auto operator<=>(const PausedWalker&) const = default;
};

struct WalkOutcome {
  WalkStatus status;
  Site position;
  Site pending;  // paused walks only
  std::uint64_t steps;

  PausedWalker paused() const { return {position, pending}; }
};

/// Simple random walk from `start` (which must lie in S and T). Each step
/// moves to a uniform open neighbour. If the chosen neighbour lies outside
/// T the walk is paused where it stands, keeping the drawn step; this takes
/// precedence when the neighbour also lies outside S. Otherwise a neighbour
/// outside S absorbs the walk there.
///
/// `in_set` is indexed by Site; nonzero means the site belongs to S.
WalkOutcome walk_until(const Environment& env, Site start, std::span<const std::uint8_t> in_set,
                       const Region& pause, Stream& rng,
                       std::uint64_t step_cap = kDefaultStepCap);

/// Continues a paused walk under a new S and T, beginning with its pending
/// step. The pending step counts toward `steps`.
WalkOutcome resume_walk(const Environment& env, const PausedWalker& walker,
                        std::span<const std::uint8_t> in_set, const Region& pause, Stream& rng,
                        std::uint64_t step_cap = kDefaultStepCap);

/// Exact law of the outcome of walk_until, from one sparse linear solve on
/// the absorbing chain over S n T. Keys are sites.
struct OutcomeLaw {
  std::map<Site, double> absorbed;
  std::map<PausedWalker, double> paused;

  double total() const;
  /// Paused mass at a position, summed over pending steps.
  double paused_at(Site s) const;
};

/// `laziness` in [0, 1) holds the walk in place with that probability; the
/// outcome law does not depend on it.
OutcomeLaw exact_outcome_law(const Environment& env, Site start,
                             std::span<const std::uint8_t> in_set, const Region& pause,
                             double laziness = 0.0);

/// Exact law of resume_walk.
OutcomeLaw exact_resume_law(const Environment& env, const PausedWalker& walker,
                            std::span<const std::uint8_t> in_set, const Region& pause);

/// Harmonic measure of S seen from `start`: where the unpaused walk first
/// leaves S.
struct ExitDistribution {
  std::map<Vertex, double> probability;

  double total() const;
  double at(const Vertex& v) const;
};

ExitDistribution exact_exit_distribution(const Environment& env, Site start,
                                         std::span<const std::uint8_t> in_set);

/// Membership vector for a list of sites.
std::vector<std::uint8_t> membership(const Environment& env, std::span<const Site> sites);

}  // namespace idla

#include "idla/walk.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace idla {

Region Region::ball(const Environment& env, Site center, double radius) {
  Region region;
  region.everywhere_ = false;
  region.radius_ = radius;
  region.member_.assign(env.site_count(), 0);
  for (Site s = 0; s < env.site_count(); ++s) {
    if (std::sqrt(static_cast<double>(env.dist2(center, s))) < radius) region.member_[s] = 1;
  }
  return region;
}

Region Region::of_sites(const Environment& env, std::span<const Site> sites) {
  Region region;
  region.everywhere_ = false;
  region.member_ = membership(env, sites);
  return region;
}

std::vector<std::uint8_t> membership(const Environment& env, std::span<const Site> sites) {
  std::vector<std::uint8_t> member(env.site_count(), 0);
  for (Site s : sites) member.at(s) = 1;
  return member;
}

namespace {

bool adjacent(const Environment& env, Site a, Site b) {
  const auto nb = env.neighbors(a);
  return std::find(nb.begin(), nb.end(), b) != nb.end();
}

// Position of the k-th set bit of a 6-bit mask.
constexpr auto kSetBitTable = [] {
  std::array<std::array<std::uint8_t, 6>, 64> table{};
  for (std::uint32_t mask = 0; mask < 64; ++mask) {
    int k = 0;
    for (std::uint8_t bit = 0; bit < 6; ++bit) {
      if (mask >> bit & 1u) table[mask][k++] = bit;
    }
  }
  return table;
}();

std::uint32_t nth_set_bit(std::uint32_t mask, std::uint32_t k) {
  if (mask < 64) return kSetBitTable[mask][k];
  for (; k > 0; --k) mask &= mask - 1;
  return static_cast<std::uint32_t>(std::countr_zero(mask));
}

template <bool kPausing>
WalkOutcome run_walk(const Environment& env, Site start, const std::uint8_t* in_set,
                     const std::uint8_t* pause, Stream& rng, std::uint64_t step_cap) {
  // Direction masks replace the adjacency lists in the hot loop; the k-th
  // set bit is the k-th entry of neighbors().
  const std::uint16_t* masks = env.open_masks();
  const auto& deltas = env.slot_deltas();
  const auto slots = static_cast<std::uint32_t>(2 * env.dim());
  const std::uint32_t all_open = (slots << 12) | ((1u << slots) - 1);
  Site current = start;
  std::uint64_t steps = 0;
  for (;;) {
    const std::uint32_t mask = masks[current];
    if (mask == 0) {
      throw std::runtime_error("walk trapped at isolated vertex " +
                               env.vertex_of(current).to_string());
    }
    if (steps == step_cap) {
      throw StepCapExceeded("walk from " + env.vertex_of(start).to_string() + " exceeded " +
                            std::to_string(step_cap) + " steps; last position " +
                            env.vertex_of(current).to_string());
    }
    const std::uint32_t slot =
        mask == all_open ? rng.below(slots) : nth_set_bit(mask & 0xfffu, rng.below(mask >> 12));
    const auto next = static_cast<Site>(static_cast<std::int64_t>(current) + deltas[slot]);
    ++steps;
    if constexpr (kPausing) {
      if (!pause[next]) return {WalkStatus::kPaused, current, next, steps};
    }
    if (!in_set[next]) return {WalkStatus::kAbsorbed, next, next, steps};
    current = next;
  }
}

}  // namespace

WalkOutcome walk_until(const Environment& env, Site start, std::span<const std::uint8_t> in_set,
                       const Region& pause, Stream& rng, std::uint64_t step_cap) {
  if (in_set.size() != env.site_count()) throw std::invalid_argument("walk: set size mismatch");
  if (start >= env.site_count() || !in_set[start]) {
    throw std::invalid_argument("walk: start must lie in S");
  }
  if (!pause.contains(start)) throw std::invalid_argument("walk: start must lie in the pause region");
  if (pause.is_everywhere()) {
    return run_walk<false>(env, start, in_set.data(), nullptr, rng, step_cap);
  }
  return run_walk<true>(env, start, in_set.data(), pause.data(), rng, step_cap);
}

WalkOutcome resume_walk(const Environment& env, const PausedWalker& walker,
                        std::span<const std::uint8_t> in_set, const Region& pause, Stream& rng,
                        std::uint64_t step_cap) {
  if (in_set.size() != env.site_count()) throw std::invalid_argument("walk: set size mismatch");
  const Site next = walker.pending;
  if (next >= env.site_count() || !adjacent(env, walker.position, next)) {
    throw std::invalid_argument("resume: pending step is not an open edge");
  }
  if (!pause.contains(next)) return {WalkStatus::kPaused, walker.position, next, 0};
  if (!in_set[next]) return {WalkStatus::kAbsorbed, next, next, 1};
  if (step_cap == 0) throw StepCapExceeded("resumed walk exceeded 0 steps");
  WalkOutcome out = walk_until(env, next, in_set, pause, rng, step_cap - 1);
  ++out.steps;
  return out;
}

double OutcomeLaw::total() const {
  double sum = 0;
  for (const auto& [site, prob] : absorbed) sum += prob;
  for (const auto& [walker, prob] : paused) sum += prob;
  return sum;
}

double OutcomeLaw::paused_at(Site s) const {
  double sum = 0;
  for (const auto& [walker, prob] : paused) {
    if (walker.position == s) sum += prob;
  }
  return sum;
}

OutcomeLaw exact_outcome_law(const Environment& env, Site start,
                             std::span<const std::uint8_t> in_set, const Region& pause,
                             double laziness) {
  if (in_set.size() != env.site_count()) throw std::invalid_argument("oracle: set size mismatch");
  if (!(laziness >= 0.0 && laziness < 1.0)) throw std::invalid_argument("oracle: laziness in [0,1)");
  if (!pause.contains(start)) throw std::invalid_argument("oracle: start must lie in the pause region");

  OutcomeLaw law;
  if (!in_set[start]) {
    law.absorbed[start] = 1.0;
    return law;
  }

  // Transient states: S n T reachable from start without leaving S n T.
  std::unordered_map<Site, int> index;
  std::vector<Site> states;
  std::deque<Site> queue{start};
  index[start] = 0;
  states.push_back(start);
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    for (Site t : env.neighbors(s)) {
      if (in_set[t] && pause.contains(t) && !index.contains(t)) {
        index[t] = static_cast<int>(states.size());
        states.push_back(t);
        queue.push_back(t);
      }
    }
  }
  if (states.size() > 200000) throw std::invalid_argument("oracle: state space too large");

  // Outcome columns: absorbed-at-site and paused-at-site.
  struct Exit {
    bool paused;
    Site site;
    double prob;
  };
  std::vector<std::vector<Exit>> exits(states.size());
  std::vector<Eigen::Triplet<double>> transposed;
  const auto n = static_cast<int>(states.size());
  bool any_exit = false;
  for (int i = 0; i < n; ++i) {
    const auto options = env.neighbors(states[i]);
    if (options.empty()) throw std::runtime_error("oracle: isolated vertex");
    const double step = (1.0 - laziness) / static_cast<double>(options.size());
    transposed.emplace_back(i, i, 1.0 - laziness);
    for (Site t : options) {
      if (!pause.contains(t)) {
        exits[i].push_back({true, t, step});
      } else if (!in_set[t]) {
        exits[i].push_back({false, t, step});
      } else {
        // (I - Q)^T has -Q(i, j) at (j, i).
        transposed.emplace_back(index.at(t), i, -step);
      }
    }
    any_exit = any_exit || !exits[i].empty();
  }
  if (!any_exit) throw std::runtime_error("oracle: S n T has no exit from the start component");

  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(transposed.begin(), transposed.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(system);
  if (solver.info() != Eigen::Success) throw std::runtime_error("oracle: factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  const Eigen::VectorXd green = solver.solve(rhs);
  if (solver.info() != Eigen::Success) throw std::runtime_error("oracle: solve failed");

  for (int i = 0; i < n; ++i) {
    for (const Exit& e : exits[i]) {
      if (e.paused) {
        law.paused[{states[i], e.site}] += green[i] * e.prob;
      } else {
        law.absorbed[e.site] += green[i] * e.prob;
      }
    }
  }
  return law;
}

OutcomeLaw exact_resume_law(const Environment& env, const PausedWalker& walker,
                            std::span<const std::uint8_t> in_set, const Region& pause) {
  if (in_set.size() != env.site_count()) throw std::invalid_argument("oracle: set size mismatch");
  const Site next = walker.pending;
  if (next >= env.site_count() || !adjacent(env, walker.position, next)) {
    throw std::invalid_argument("oracle: pending step is not an open edge");
  }
  OutcomeLaw law;
  if (!pause.contains(next)) {
    law.paused[walker] = 1.0;
    return law;
  }
  return exact_outcome_law(env, next, in_set, pause);
}

double ExitDistribution::total() const {
  double sum = 0;
  for (const auto& [v, prob] : probability) sum += prob;
  return sum;
}

double ExitDistribution::at(const Vertex& v) const {
  const auto it = probability.find(v);
  return it == probability.end() ? 0.0 : it->second;
}

ExitDistribution exact_exit_distribution(const Environment& env, Site start,
                                         std::span<const std::uint8_t> in_set) {
  if (start >= env.site_count() || !in_set[start]) {
    throw std::invalid_argument("exit distribution: start must lie in S");
  }
  const OutcomeLaw law = exact_outcome_law(env, start, in_set, Region::everywhere());
  ExitDistribution out;
  for (const auto& [site, prob] : law.absorbed) out.probability[env.vertex_of(site)] = prob;
  return out;
}

}  // namespace idla

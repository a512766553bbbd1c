#include "idla/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace idla {

Aggregate::Aggregate(const Environment& env, Site origin)
    : origin_(origin), occupied_(env.site_count(), 0) {}

std::vector<Site> Aggregate::sorted_sites() const {
  std::vector<Site> out = history_;
  std::sort(out.begin(), out.end());
  return out;
}

void Aggregate::settle(const Environment& env, Site s) {
  if (occupied_[s]) throw std::logic_error("settle: site already occupied");
  occupied_[s] = 1;
  history_.push_back(s);
  ++settled_;
  if (env.on_box_boundary(s)) touched_box_boundary_ = true;
}

std::vector<Site> PausedLedger::positions() const {
  std::vector<Site> out;
  out.reserve(walkers.size());
  for (const auto& w : walkers) out.push_back(w.position);
  return out;
}

std::optional<PausedWalker> add_particle(const Environment& env, Aggregate& aggregate, Site start,
                                         const Region& pause, Stream& rng,
                                         const AddOptions& options) {
  if (!env.in_cluster(start)) throw std::invalid_argument("add_particle: start outside the cluster");
  if (!pause.contains(start)) throw std::invalid_argument("add_particle: start outside the pause region");
  if (!aggregate.contains(start)) {
    // t_S = 0.
    aggregate.settle(env, start);
    return std::nullopt;
  }
  const WalkOutcome out =
      walk_until(env, start, aggregate.membership(), pause, rng, options.step_cap);
  if (out.status == WalkStatus::kPaused) return out.paused();
  aggregate.settle(env, out.position);
  return std::nullopt;
}

std::optional<PausedWalker> resume_particle(const Environment& env, Aggregate& aggregate,
                                            const PausedWalker& walker, const Region& pause,
                                            Stream& rng, const AddOptions& options) {
  if (!aggregate.contains(walker.position)) {
    throw std::invalid_argument("resume_particle: paused position outside the aggregate");
  }
  const WalkOutcome out =
      resume_walk(env, walker, aggregate.membership(), pause, rng, options.step_cap);
  if (out.status == WalkStatus::kPaused) return out.paused();
  aggregate.settle(env, out.position);
  return std::nullopt;
}

PausedLedger add_batch(const Environment& env, Aggregate& aggregate, std::span<const Site> starts,
                       const Region& pause, ParticleStreams& streams, const AddOptions& options) {
  PausedLedger ledger;
  for (Site start : starts) {
    Stream rng = streams.next();
    if (auto paused = add_particle(env, aggregate, start, pause, rng, options)) {
      ledger.walkers.push_back(*paused);
    }
  }
  return ledger;
}

Growth grow(const Environment& env, Site source, std::uint64_t particles,
            std::optional<double> pause_radius, ParticleStreams& streams,
            const AddOptions& options) {
  const Region pause =
      pause_radius ? Region::ball(env, source, *pause_radius) : Region::everywhere();
  return grow_in(env, source, particles, pause, streams, options);
}

Growth grow_in(const Environment& env, Site source, std::uint64_t particles, const Region& pause,
               ParticleStreams& streams, const AddOptions& options) {
  Growth growth{Aggregate(env, source), {}, particles};
  for (std::uint64_t i = 0; i < particles; ++i) {
    Stream rng = streams.next();
    if (auto paused = add_particle(env, growth.aggregate, source, pause, rng, options)) {
      growth.ledger.walkers.push_back(*paused);
    }
  }
  return growth;
}

PausedLedger abelian_restart(const Environment& env, Aggregate& aggregate,
                             const PausedLedger& ledger, const Region& next_pause,
                             ParticleStreams& streams, const AddOptions& options) {
  for (const auto& w : ledger.walkers) {
    if (!aggregate.contains(w.position)) {
      throw std::invalid_argument("abelian_restart: ledger position outside the aggregate");
    }
  }
  PausedLedger next;
  for (const auto& w : ledger.walkers) {
    Stream rng = streams.next();
    if (auto paused = resume_particle(env, aggregate, w, next_pause, rng, options)) {
      next.walkers.push_back(*paused);
    }
  }
  return next;
}

double stage_increment(std::uint64_t paused, int dim) {
  return std::pow(static_cast<double>(paused), 1.0 / dim);
}

StagedResult staged_construction(const Environment& env, double n, ParticleStreams& streams,
                                 const StagedOptions& options) {
  if (!(n > 0)) throw std::invalid_argument("staged_construction: n must be positive");
  const int d = env.dim();
  const AddOptions add{options.step_cap};
  StageTrace trace;
  trace.small_count_bound = std::pow(n, 1.0 / (d + 1));
  trace.released = cluster_ball_count(env, env.origin(), n);

  Growth start = grow(env, env.origin(), trace.released, n, streams, add);
  Aggregate aggregate = std::move(start.aggregate);
  PausedLedger ledger = std::move(start.ledger);
  trace.stages.push_back({0, n, ledger.size(), aggregate.size()});

  double radius = n;
  for (int j = 0;; ++j) {
    const auto k = static_cast<double>(ledger.size());
    if (k <= trace.small_count_bound) {
      trace.terminal = j;
      trace.final_radius = radius;
      ledger = abelian_restart(env, aggregate, ledger, Region::everywhere(), streams, add);
      trace.stages.push_back({j + 1, std::numeric_limits<double>::infinity(), ledger.size(),
                              aggregate.size()});
      break;
    }
    if (j + 1 >= options.stage_cap) {
      throw StageCapExceeded("staged construction exceeded " + std::to_string(options.stage_cap) +
                             " stages at radius " + std::to_string(radius) + " with " +
                             std::to_string(ledger.size()) + " paused particles");
    }
    radius = radius + stage_increment(ledger.size(), d);
    ledger = abelian_restart(env, aggregate, ledger, Region::ball(env, env.origin(), radius),
                             streams, add);
    trace.stages.push_back({j + 1, radius, ledger.size(), aggregate.size()});
  }
  return {std::move(aggregate), std::move(trace)};
}

}  // namespace idla

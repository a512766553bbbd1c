#pragma once

// Exact laws of small IDLA batches, by dynamic programming over
// (aggregate, ledger) states with one absorbing-chain solve per distinct
// (aggregate, start, pause region). Ground truth for the Monte Carlo paths.

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "idla/environment.hpp"
#include "idla/walk.hpp"

namespace idla {

/// Sorted occupied sites.
using AggregateKey = std::vector<Site>;
/// Paused walkers in pause order.
using LedgerKey = std::vector<PausedWalker>;

using AggregateLaw = std::map<AggregateKey, double>;
using BatchLaw = std::map<std::pair<AggregateKey, LedgerKey>, double>;

enum class RestartOrder { kFifo, kReversed };

/// Joint law of (A(S; starts -> T), P(S; starts -> T)).
BatchLaw exact_batch_law(const Environment& env, const AggregateKey& initial,
                         std::span<const Site> starts, const Region& pause);

/// Joint law after restarting a ledger, in order, on S under T.
BatchLaw exact_restart_law(const Environment& env, const AggregateKey& initial,
                           const LedgerKey& ledger, const Region& pause);

/// Law of A(S; starts).
AggregateLaw exact_direct_law(const Environment& env, const AggregateKey& initial,
                              std::span<const Site> starts);

/// Law of A(A(S; starts -> T); P(S; starts -> T) -> T2): pause on T, then
/// restart the ledger on T2 (everywhere in the Abelian identity).
AggregateLaw exact_pause_restart_law(const Environment& env, const AggregateKey& initial,
                                     std::span<const Site> starts, const Region& pause,
                                     const Region& restart_pause,
                                     RestartOrder order = RestartOrder::kFifo);

/// Largest entrywise |a - b| over the union of supports.
double max_abs_difference(const AggregateLaw& a, const AggregateLaw& b);

/// Total variation distance between two laws.
double total_variation(const AggregateLaw& a, const AggregateLaw& b);

}  // namespace idla

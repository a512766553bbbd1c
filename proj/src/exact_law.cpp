#include "idla/exact_law.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace idla {

namespace {

AggregateKey with_site(AggregateKey key, Site s) {
  key.insert(std::lower_bound(key.begin(), key.end(), s), s);
  return key;
}

// Memoizes one outcome law per (aggregate, start) under a fixed region.
class OutcomeCache {
 public:
  OutcomeCache(const Environment& env, const Region& pause) : env_(env), pause_(pause) {}

  const OutcomeLaw& get(const AggregateKey& aggregate, Site start) {
    auto key = std::make_pair(aggregate, start);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const auto member = membership(env_, aggregate);
    return cache_.emplace(std::move(key), exact_outcome_law(env_, start, member, pause_))
        .first->second;
  }

 private:
  const Environment& env_;
  const Region& pause_;
  std::map<std::pair<AggregateKey, Site>, OutcomeLaw> cache_;
};

void check_initial(const Environment& env, const AggregateKey& initial) {
  if (!std::is_sorted(initial.begin(), initial.end()) ||
      std::adjacent_find(initial.begin(), initial.end()) != initial.end()) {
    throw std::invalid_argument("exact law: initial aggregate must be sorted and distinct");
  }
  for (Site s : initial) {
    if (!env.in_cluster(s)) throw std::invalid_argument("exact law: aggregate outside cluster");
  }
}

}  // namespace

BatchLaw exact_batch_law(const Environment& env, const AggregateKey& initial,
                         std::span<const Site> starts, const Region& pause) {
  check_initial(env, initial);
  OutcomeCache cache(env, pause);
  BatchLaw law{{{initial, {}}, 1.0}};
  for (Site start : starts) {
    BatchLaw next;
    for (const auto& [state, prob] : law) {
      const auto& [aggregate, ledger] = state;
      const OutcomeLaw& outcome = cache.get(aggregate, start);
      for (const auto& [site, q] : outcome.absorbed) {
        next[{with_site(aggregate, site), ledger}] += prob * q;
      }
      for (const auto& [walker, q] : outcome.paused) {
        LedgerKey extended = ledger;
        extended.push_back(walker);
        next[{aggregate, std::move(extended)}] += prob * q;
      }
    }
    law = std::move(next);
  }
  return law;
}

BatchLaw exact_restart_law(const Environment& env, const AggregateKey& initial,
                           const LedgerKey& restart, const Region& pause) {
  check_initial(env, initial);
  BatchLaw law{{{initial, {}}, 1.0}};
  for (const PausedWalker& walker : restart) {
    BatchLaw next;
    for (const auto& [state, prob] : law) {
      const auto& [aggregate, ledger] = state;
      if (!std::binary_search(aggregate.begin(), aggregate.end(), walker.position)) {
        throw std::invalid_argument("exact law: paused position outside the aggregate");
      }
      const OutcomeLaw outcome = exact_resume_law(env, walker, membership(env, aggregate), pause);
      for (const auto& [site, q] : outcome.absorbed) {
        next[{with_site(aggregate, site), ledger}] += prob * q;
      }
      for (const auto& [w, q] : outcome.paused) {
        LedgerKey extended = ledger;
        extended.push_back(w);
        next[{aggregate, std::move(extended)}] += prob * q;
      }
    }
    law = std::move(next);
  }
  return law;
}

AggregateLaw exact_direct_law(const Environment& env, const AggregateKey& initial,
                              std::span<const Site> starts) {
  AggregateLaw out;
  for (const auto& [state, prob] : exact_batch_law(env, initial, starts, Region::everywhere())) {
    out[state.first] += prob;
  }
  return out;
}

AggregateLaw exact_pause_restart_law(const Environment& env, const AggregateKey& initial,
                                     std::span<const Site> starts, const Region& pause,
                                     const Region& restart_pause, RestartOrder order) {
  AggregateLaw out;
  for (const auto& [state, prob] : exact_batch_law(env, initial, starts, pause)) {
    LedgerKey restart = state.second;
    if (order == RestartOrder::kReversed) std::reverse(restart.begin(), restart.end());
    for (const auto& [inner, q] : exact_restart_law(env, state.first, restart, restart_pause)) {
      out[inner.first] += prob * q;
    }
  }
  return out;
}

double max_abs_difference(const AggregateLaw& a, const AggregateLaw& b) {
  std::set<AggregateKey> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  double worst = 0.0;
  for (const auto& k : keys) {
    const double pa = a.contains(k) ? a.at(k) : 0.0;
    const double pb = b.contains(k) ? b.at(k) : 0.0;
    worst = std::max(worst, std::abs(pa - pb));
  }
  return worst;
}

double total_variation(const AggregateLaw& a, const AggregateLaw& b) {
  std::set<AggregateKey> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  double sum = 0.0;
  for (const auto& k : keys) {
    const double pa = a.contains(k) ? a.at(k) : 0.0;
    const double pb = b.contains(k) ? b.at(k) : 0.0;
    sum += std::abs(pa - pb);
  }
  return 0.5 * sum;
}

}  // namespace idla

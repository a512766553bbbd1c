#include <gtest/gtest.h>

#include <cmath>

#include "idla/exact_law.hpp"
#include "idla/metric.hpp"
#include "support.hpp"

using namespace idla;
using idla::testing::at;
using idla::testing::lattice;
using idla::testing::percolation;

namespace {

double mass(const AggregateLaw& law) {
  double sum = 0.0;
  for (const auto& [k, p] : law) sum += p;
  return sum;
}

AggregateKey sorted(std::vector<Site> sites) {
  std::sort(sites.begin(), sites.end());
  return sites;
}

}  // namespace

TEST(ExactLaw, LineThreeParticles) {
  const auto env = lattice(1, 6);
  const std::vector<Site> starts(3, env.origin());
  const AggregateLaw law = exact_direct_law(env, {}, starts);
  ASSERT_EQ(law.size(), 3u);
  EXPECT_NEAR(law.at(sorted({at(env, {-1}), at(env, {0}), at(env, {1})})), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(law.at(sorted({at(env, {0}), at(env, {1}), at(env, {2})})), 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(law.at(sorted({at(env, {-2}), at(env, {-1}), at(env, {0})})), 1.0 / 6.0, 1e-14);
}

TEST(ExactLaw, PlaneTwoParticlesUniformOverNeighbours) {
  const auto env = lattice(2, 4);
  const std::vector<Site> starts(2, env.origin());
  const AggregateLaw law = exact_direct_law(env, {}, starts);
  ASSERT_EQ(law.size(), 4u);
  for (const auto& [k, p] : law) EXPECT_NEAR(p, 0.25, 1e-14);
}

TEST(ExactLaw, BatchLawTracksLedger) {
  const auto env = lattice(1, 6);
  const std::vector<Site> starts(3, env.origin());
  const Region pause = Region::ball(env, env.origin(), 1.5);
  const BatchLaw law = exact_batch_law(env, {}, starts, pause);
  double total = 0.0;
  for (const auto& [state, p] : law) {
    total += p;
    EXPECT_EQ(state.first.size() + state.second.size(), 3u);
    for (const auto& w : state.second) {
      EXPECT_TRUE(std::binary_search(state.first.begin(), state.first.end(), w.position));
      EXPECT_TRUE(pause.contains(w.position));
      EXPECT_FALSE(pause.contains(w.pending));
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  // After {0, 1}, the third particle pauses at 1 stepping to 2 with
  // probability 1/3, otherwise it fills -1.
  const AggregateKey full = sorted({at(env, {-1}), at(env, {0}), at(env, {1})});
  const AggregateKey right = sorted({at(env, {0}), at(env, {1})});
  const LedgerKey pending{{at(env, {1}), at(env, {2})}};
  EXPECT_NEAR(law.at({full, {}}), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(law.at({right, pending}), 1.0 / 6.0, 1e-14);
  EXPECT_EQ(law.size(), 3u);
}

// The Abelian identity, exactly, on small graphs in both restart orders.
TEST(ExactLaw, AbelianIdentityLine) {
  const auto env = lattice(1, 8);
  const std::vector<Site> starts(3, env.origin());
  const AggregateLaw direct = exact_direct_law(env, {}, starts);
  for (double radius : {0.5, 1.5, 2.5}) {
    const Region pause = Region::ball(env, env.origin(), radius);
    for (auto order : {RestartOrder::kFifo, RestartOrder::kReversed}) {
      const AggregateLaw restarted =
          exact_pause_restart_law(env, {}, starts, pause, Region::everywhere(), order);
      EXPECT_LT(max_abs_difference(direct, restarted), 1e-10) << radius;
    }
  }
}

TEST(ExactLaw, AbelianIdentityBox) {
  const auto env = lattice(2, 2);
  const std::vector<Site> starts(4, env.origin());
  const AggregateLaw direct = exact_direct_law(env, {}, starts);
  EXPECT_NEAR(mass(direct), 1.0, 1e-12);
  const Region pause = Region::ball(env, env.origin(), 1.5);
  const AggregateLaw fifo = exact_pause_restart_law(env, {}, starts, pause, Region::everywhere());
  const AggregateLaw rev = exact_pause_restart_law(env, {}, starts, pause, Region::everywhere(),
                                                   RestartOrder::kReversed);
  EXPECT_LT(max_abs_difference(direct, fifo), 1e-10);
  EXPECT_LT(max_abs_difference(direct, rev), 1e-10);
}

// Property: mixed starts, a nonempty initial aggregate and two pause levels.
TEST(ExactLaw, AbelianIdentityRandomised) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto env = percolation(2, 3, 0.75, seed);
    Stream rng(seed, StreamDomain::kSampling, 0, 0);
    const auto near = cluster_ball_sites(env, Ball{Vertex{0, 0}, 2.0});
    std::vector<Site> starts;
    for (int i = 0; i < 3; ++i) starts.push_back(near[rng.below(static_cast<std::uint32_t>(near.size()))]);
    const AggregateKey initial{env.origin()};
    const Region pause = Region::ball(env, env.origin(), 2.0 + 0.6 * rng.uniform());
    const Region wider = Region::ball(env, env.origin(), 3.0);
    const AggregateLaw direct = exact_direct_law(env, initial, starts);
    const AggregateLaw restarted =
        exact_pause_restart_law(env, initial, starts, pause, Region::everywhere());
    EXPECT_LT(max_abs_difference(direct, restarted), 1e-10) << seed;
    // Pausing twice and restarting the remainder agrees with pausing once on
    // the wider region.
    const BatchLaw once = exact_batch_law(env, initial, starts, wider);
    BatchLaw twice;
    for (const auto& [state, p] : exact_batch_law(env, initial, starts, pause)) {
      for (const auto& [inner, q] : exact_restart_law(env, state.first, state.second, wider)) {
        twice[inner] += p * q;
      }
    }
    AggregateLaw a, b;
    for (const auto& [s, p] : once) a[s.first] += p;
    for (const auto& [s, p] : twice) b[s.first] += p;
    EXPECT_LT(max_abs_difference(a, b), 1e-10) << seed;
  }
}

TEST(ExactLaw, DistanceHelpers) {
  const AggregateLaw a{{{1, 2}, 0.5}, {{1, 3}, 0.5}};
  const AggregateLaw b{{{1, 2}, 0.25}, {{2, 3}, 0.75}};
  EXPECT_DOUBLE_EQ(max_abs_difference(a, b), 0.75);
  EXPECT_DOUBLE_EQ(total_variation(a, b), 0.75);
  EXPECT_DOUBLE_EQ(total_variation(a, a), 0.0);
}

TEST(ExactLaw, RejectsUnsortedInitial) {
  const auto env = lattice(1, 3);
  const std::vector<Site> starts{env.origin()};
  EXPECT_THROW(exact_direct_law(env, {3, 2}, starts), std::invalid_argument);
}

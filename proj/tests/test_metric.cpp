#include <gtest/gtest.h>

#include <cmath>

#include "idla/metric.hpp"
#include "idla/rng.hpp"
#include "support.hpp"

using namespace idla;
using idla::testing::at;
using idla::testing::bfs_by_edges;
using idla::testing::lattice;
using idla::testing::percolation;

TEST(Rho, EuclideanExamples) {
  EXPECT_DOUBLE_EQ(rho(Vertex{0, 0}, Vertex{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(rho(Vertex{-2}, Vertex{5}), 7.0);
  EXPECT_DOUBLE_EQ(rho(Vertex{1, 1, 1}, Vertex{1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(rho(Vertex{0, 0, 0}, Vertex{1, 1, 1}), std::sqrt(3.0));
  EXPECT_THROW(rho(Vertex{0, 0}, Vertex{0, 0, 0}), std::invalid_argument);
}

TEST(Rho, SymmetricAndTriangle) {
  const auto env = lattice(3, 3);
  Stream rng(1, StreamDomain::kSampling, 0, 0);
  const auto n = static_cast<std::uint32_t>(env.site_count());
  for (int i = 0; i < 2000; ++i) {
    const Site x = rng.below(n), y = rng.below(n), z = rng.below(n);
    ASSERT_DOUBLE_EQ(rho(env, x, y), rho(env, y, x));
    ASSERT_LE(rho(env, x, z), rho(env, x, y) + rho(env, y, z) + 1e-12);
  }
}

TEST(BallSites, StrictAndInCluster) {
  const auto env = percolation(2, 10, 0.6, 3);
  const Ball ball{Vertex{1, 1}, 3.0};
  const auto sites = cluster_ball_sites(env, ball);
  EXPECT_TRUE(std::is_sorted(sites.begin(), sites.end()));
  std::size_t brute = 0;
  for (Site s : env.cluster_sites()) brute += ball.contains(env.vertex_of(s)) ? 1 : 0;
  EXPECT_EQ(sites.size(), brute);
  for (Site s : sites) EXPECT_TRUE(env.in_cluster(s));
  EXPECT_FALSE(ball.contains(Vertex{4, 1}));
  EXPECT_TRUE(ball.contains(Vertex{3, 3}));
}

TEST(GraphDistance, FullLatticeIsManhattan) {
  const auto env = lattice(2, 6);
  EXPECT_EQ(graph_distance(env, at(env, {0, 0}), at(env, {3, -4}), 100), 7u);
  EXPECT_EQ(graph_distance(env, at(env, {2, 2}), at(env, {2, 2}), 0), 0u);
  EXPECT_FALSE(graph_distance(env, at(env, {0, 0}), at(env, {3, -4}), 6).has_value());
}

TEST(GraphDistance, MatchesEdgeBfsOnPercolation) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto env = percolation(2, 12, 0.6, seed);
    Stream rng(seed, StreamDomain::kSampling, 0, 0);
    const auto& cluster = env.cluster_sites();
    for (int i = 0; i < 10; ++i) {
      const Site x = cluster[rng.below(static_cast<std::uint32_t>(cluster.size()))];
      const auto oracle = bfs_by_edges(env, x);
      const auto all = graph_distances_from(env, x, kUnreached - 1);
      for (Site y = 0; y < env.site_count(); ++y) {
        if (oracle[y] < 0) {
          ASSERT_EQ(all[y], kUnreached);
        } else {
          ASSERT_EQ(all[y], static_cast<std::uint32_t>(oracle[y]));
        }
      }
      for (int j = 0; j < 10; ++j) {
        const Site y = cluster[rng.below(static_cast<std::uint32_t>(cluster.size()))];
        ASSERT_EQ(graph_distance(env, x, y, kUnreached - 1), static_cast<std::uint32_t>(oracle[y]));
      }
    }
  }
}

TEST(Continuity, HoldsWithConstantOne) {
  for (double p : {1.0, 0.6}) {
    const auto env = percolation(2, 20, p, 5);
    const ConditionReport r = check_continuity(env, {300, 0.0, 15.0, 7});
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.samples.size(), 300u);
    EXPECT_LE(r.fitted_c, 1.0);
    EXPECT_GT(r.fitted_c, 0.0);
  }
}

TEST(Continuity, StraightLinePairsAttainOne) {
  const auto env = lattice(1, 20);
  const ConditionReport r = check_continuity(env, {50, 1.0, 10.0, 3});
  EXPECT_DOUBLE_EQ(r.fitted_c, 1.0);
}

TEST(VolumeGrowth, FullPlaneWithinFour) {
  const auto env = lattice(2, 160);
  VolumeGrowthSpec spec;
  spec.n = 100;
  spec.centers = 10;
  spec.seed = 2;
  const ConditionReport r = check_volume_growth(env, spec);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.fitted_c, 4.0);
  EXPECT_GE(r.fitted_c, 1.0);
  EXPECT_EQ(r.exponent, 2.0);
}

TEST(VolumeGrowth, LineCountsAreOddIntervals) {
  const auto env = lattice(1, 60);
  VolumeGrowthSpec spec;
  spec.n = 20;
  spec.radii = {1.0, 2.0, 5.0, 10.0};
  spec.centers = 3;
  const ConditionReport r = check_volume_growth(env, spec);
  for (const auto& s : r.samples) {
    EXPECT_EQ(s.measured, 2.0 * std::ceil(s.radius) - 1.0);
  }
}

TEST(VolumeGrowth, DefaultRadiiDoubleUpToN) {
  const auto radii = default_growth_radii(100, 2);
  EXPECT_NEAR(radii.front(), std::pow(100.0, 1.0 / 8.0), 1e-12);
  EXPECT_EQ(radii.back(), 100.0);
  for (std::size_t i = 1; i + 1 < radii.size(); ++i) EXPECT_NEAR(radii[i], 2 * radii[i - 1], 1e-9);
}

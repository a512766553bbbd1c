#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "idla/environment.hpp"
#include "support.hpp"

using namespace idla;
using idla::testing::at;
using idla::testing::bfs_by_edges;
using idla::testing::lattice;
using idla::testing::percolation;

TEST(Environment, FullLatticeIsWholeBox) {
  const auto env = lattice(2, 5);
  EXPECT_EQ(env.site_count(), 121u);
  EXPECT_EQ(env.cluster_size(), 121u);
  EXPECT_EQ(env.kind(), EnvironmentKind::kFullLattice);
  EXPECT_EQ(env.edge_count(), 2u * 10u * 11u);
  EXPECT_EQ(env.open_edge_count(), env.edge_count());
}

TEST(Environment, OneDimensionalBox) {
  const auto env = lattice(1, 3);
  EXPECT_EQ(env.cluster_size(), 7u);
  EXPECT_EQ(env.degree(at(env, {-3})), 1u);
  EXPECT_EQ(env.degree(at(env, {0})), 2u);
}

TEST(Environment, SiteVertexRoundTrip) {
  const auto env = lattice(3, 2);
  for (Site s = 0; s < env.site_count(); ++s) ASSERT_EQ(env.site_of(env.vertex_of(s)), s);
  EXPECT_EQ(env.vertex_of(env.origin()), Vertex::origin(3));
  EXPECT_EQ(env.site_of(Vertex{1, 0, 0}), env.origin() + 1);
  EXPECT_THROW(env.site_of(Vertex{3, 0, 0}), std::out_of_range);
}

TEST(Environment, SameSeedSameCluster) {
  const auto a = percolation(2, 20, 0.6, 17);
  const auto b = percolation(2, 20, 0.6, 17);
  EXPECT_EQ(a.cluster_sites(), b.cluster_sites());
  EXPECT_EQ(a.accepted_seed(), b.accepted_seed());
  for (Site s = 0; s < a.site_count(); ++s) {
    for (int ax = 0; ax < 2; ++ax) ASSERT_EQ(a.edge_open(s, ax), b.edge_open(s, ax));
  }
}

TEST(Environment, AcceptedSeedFollowsAdvance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto env = percolation(2, 8, 0.55, seed);
    EXPECT_EQ(env.accepted_seed(), seed + (env.attempts() - 1) * kSeedAdvance);
    EXPECT_TRUE(env.cluster_touches_all_faces());
  }
}

TEST(Environment, SubcriticalExhaustsRetryBudget) {
  EXPECT_THROW(Environment::generate({2, 10, 0.05, 1, 8}), RetryBudgetExhausted);
}

// Property: the adjacency lists agree with the edge table, are ordered by
// lexicographic offset, and the cluster is exactly the set BFS reaches.
TEST(Environment, AdjacencyMatchesEdgesAndCluster) {
  for (int dim = 1; dim <= 3; ++dim) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto env = percolation(dim, dim == 3 ? 4 : 9, dim == 1 ? 0.97 : 0.65, seed);
      for (Site s = 0; s < env.site_count(); ++s) {
        const Vertex v = env.vertex_of(s);
        std::vector<Vertex> expected;
        for (int a = 0; a < dim; ++a) {
          for (int sign : {-1, 1}) {
            Vertex w = v;
            w[a] += sign;
            if (!env.in_box(w)) continue;
            const bool open = sign > 0 ? env.edge_open(s, a) : env.edge_open(env.site_of(w), a);
            if (open) expected.push_back(w);
          }
        }
        std::sort(expected.begin(), expected.end(), [&](const Vertex& x, const Vertex& y) {
          for (int a = 0; a < dim; ++a) {
            if (x[a] != y[a]) return x[a] < y[a];
          }
          return false;
        });
        std::vector<Vertex> got;
        for (Site t : env.neighbors(s)) got.push_back(env.vertex_of(t));
        ASSERT_EQ(got, expected) << v.to_string();
        ASSERT_EQ(env.open_neighbors(v), expected);
      }
      const auto dist = bfs_by_edges(env, env.origin());
      std::vector<Site> reached;
      for (Site s = 0; s < env.site_count(); ++s) {
        if (dist[s] >= 0) reached.push_back(s);
      }
      EXPECT_EQ(reached, env.cluster_sites());
    }
  }
}

TEST(Environment, OpenEdgeFractionNearP) {
  const auto env = percolation(2, 30, 0.6, 4);
  const double n = static_cast<double>(env.edge_count());
  const double frac = env.open_edge_count() / n;
  EXPECT_NEAR(frac, 0.6, 3.0 * std::sqrt(0.6 * 0.4 / n));
}

TEST(ClusterBallCount, StrictRadius) {
  const auto env = lattice(2, 5);
  EXPECT_EQ(cluster_ball_count(env, env.origin(), 2.0), 9u);
  EXPECT_EQ(cluster_ball_count(env, env.origin(), 0.0), 0u);
  EXPECT_EQ(cluster_ball_count(env, env.origin(), 1.0), 1u);
  EXPECT_EQ(cluster_ball_count(env, env.origin(), 1.0000001), 5u);
  const auto line = lattice(1, 10);
  for (int r = 1; r <= 8; ++r) EXPECT_EQ(cluster_ball_count(line, line.origin(), r), 2u * r - 1);
}

TEST(ClusterBallCount, MatchesEnumerationAndIsMonotone) {
  const auto env = percolation(2, 15, 0.6, 9);
  const Site centre = at(env, {3, -2});
  std::size_t previous = 0;
  for (double r = 0.0; r <= 25.0; r += 0.25) {
    std::size_t brute = 0;
    for (Site s : env.cluster_sites()) {
      if (std::sqrt(static_cast<double>(env.dist2(centre, s))) < r) ++brute;
    }
    const std::size_t count = cluster_ball_count(env, centre, r);
    ASSERT_EQ(count, brute) << "r=" << r;
    ASSERT_GE(count, previous);
    previous = count;
  }
}

TEST(RadiusForCount, InvertsBallCount) {
  const auto env = lattice(2, 10);
  EXPECT_DOUBLE_EQ(radius_for_count(env, 1), 0.0);
  EXPECT_DOUBLE_EQ(radius_for_count(env, 5), 1.0);
  const auto perc = percolation(2, 20, 0.6, 2);
  for (std::size_t count : {1u, 10u, 100u, 500u}) {
    const double r = radius_for_count(perc, count);
    EXPECT_LT(cluster_ball_count(perc, perc.origin(), r), count);
    EXPECT_GE(cluster_ball_count(perc, perc.origin(), std::nextafter(r, 1e9)), count);
  }
}

TEST(Manifest, RoundTripAndRegenerate) {
  const auto env = percolation(2, 12, 0.6, 31);
  RunManifest m = RunManifest::describe(env);
  m.config["note"] = "x";
  const RunManifest back = RunManifest::parse(m.serialize());
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.version, software_version());
  const auto again = Environment::generate(back.params());
  EXPECT_EQ(again.cluster_sites(), env.cluster_sites());
  EXPECT_EQ(again.accepted_seed(), env.accepted_seed());
}

TEST(Manifest, RejectsForeignText) {
  EXPECT_THROW(RunManifest::parse("{\"format\":\"other\"}"), std::runtime_error);
  EXPECT_THROW(RunManifest::parse("not json"), std::runtime_error);
}

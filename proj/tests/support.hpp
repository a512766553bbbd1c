#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "idla/environment.hpp"

namespace idla::testing {

inline Environment lattice(int dim, int half_extent) {
  return Environment::generate({dim, half_extent, 1.0, 0, 1});
}

inline Environment percolation(int dim, int half_extent, double p, std::uint64_t seed) {
  return Environment::generate({dim, half_extent, p, seed, 64});
}

inline Site at(const Environment& env, std::initializer_list<std::int32_t> coords) {
  return env.site_of(Vertex(coords));
}

// Breadth-first search written against edge_open only, so it shares nothing
// with the adjacency lists it is used to check.
inline std::vector<std::int64_t> bfs_by_edges(const Environment& env, Site from) {
  std::vector<std::int64_t> dist(env.site_count(), -1);
  std::deque<Site> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    const Vertex v = env.vertex_of(s);
    for (int a = 0; a < env.dim(); ++a) {
      for (int sign : {-1, 1}) {
        Vertex w = v;
        w[a] += sign;
        if (!env.in_box(w)) continue;
        const Site t = env.site_of(w);
        const bool open = sign > 0 ? env.edge_open(s, a) : env.edge_open(t, a);
        if (open && dist[t] < 0) {
          dist[t] = dist[s] + 1;
          queue.push_back(t);
        }
      }
    }
  }
  return dist;
}

}  // namespace idla::testing

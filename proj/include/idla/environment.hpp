#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace idla {

/// Dense index of a lattice site inside the box. Axis 0 varies fastest.
using Site = std::uint32_t;

inline constexpr int kMaxDim = 6;

/// A point of Z^d, d <= kMaxDim.
class Vertex {
 public:
  Vertex() = default;
  Vertex(std::initializer_list<std::int32_t> coords);
  static Vertex origin(int dim);

  int dim() const { return dim_; }
  std::int32_t operator[](int axis) const { return coords_[axis]; }
  std::int32_t& operator[](int axis) { return coords_[axis]; }

  std::string to_string() const;

  friend auto operator<=>(const Vertex&, const Vertex&) = default;

 private:
  explicit Vertex(int dim) : dim_(static_cast<std::uint8_t>(dim)) {}

  std::uint8_t dim_ = 0;
  std::array<std::int32_t, kMaxDim> coords_{};
};

class RetryBudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvironmentKind { kFullLattice, kPercolation };

struct EnvironmentParams {
  int dim = 2;
  int half_extent = 10;
  double p = 1.0;
  std::uint64_t seed = 0;
  int max_attempts = 64;
};

/// Seed increment applied after a rejected sample.
inline constexpr std::uint64_t kSeedAdvance = 0x9E3779B97F4A7C15ull;

/// A realized box [-L, L]^d with bond-percolation edges and the open cluster
/// of the origin. Immutable after generation.
class Environment {
 public:
  /// Samples edges in canonical order (site index, then axis) and keeps the
  /// realization only if the origin's open cluster meets every face of the
  /// box. Rejected samples advance the seed by kSeedAdvance.
  static Environment generate(const EnvironmentParams& params);

  int dim() const { return dim_; }
  int half_extent() const { return half_extent_; }
  int side() const { return side_; }
  double p() const { return p_; }
  EnvironmentKind kind() const {
    return p_ >= 1.0 ? EnvironmentKind::kFullLattice : EnvironmentKind::kPercolation;
  }
  std::uint64_t requested_seed() const { return requested_seed_; }
  std::uint64_t accepted_seed() const { return accepted_seed_; }
  int attempts() const { return attempts_; }

  std::size_t site_count() const { return site_count_; }
  Site origin() const { return origin_; }

  bool in_box(const Vertex& v) const;
  Site site_of(const Vertex& v) const;  // throws std::out_of_range
  Vertex vertex_of(Site s) const;
  std::int32_t coord(Site s, int axis) const;
  std::int64_t dist2(Site a, Site b) const;
  bool on_box_boundary(Site s) const;

  bool in_cluster(Site s) const { return cluster_flag_[s] != 0; }
  const std::vector<Site>& cluster_sites() const { return cluster_; }
  std::size_t cluster_size() const { return cluster_.size(); }

  /// Open neighbours of s, ordered lexicographically by coordinate offset.
  std::span<const Site> neighbors(Site s) const {
    return {adjacency_.data() + offsets_[s], adjacency_.data() + offsets_[s + 1]};
  }
  std::uint32_t degree(Site s) const { return offsets_[s + 1] - offsets_[s]; }

  /// Open directions of s as bits over the same order as neighbors():
  /// slot a < d is -e_a, slot 2d-1-a is +e_a. Bits 12..15 hold the degree.
  const std::uint16_t* open_masks() const { return masks_.data(); }
  /// Site index offset of each direction slot.
  const std::array<std::int64_t, 2 * kMaxDim>& slot_deltas() const { return deltas_; }

  std::vector<Vertex> open_neighbors(const Vertex& v) const;

  /// Edge from s to s + e_axis; false when that edge leaves the box.
  bool edge_open(Site s, int axis) const;
  std::size_t edge_count() const { return edge_count_; }
  std::size_t open_edge_count() const { return open_edge_count_; }

  /// True when the cluster contains a vertex on every one of the 2d faces.
  bool cluster_touches_all_faces() const;
  bool cluster_touches_boundary() const;

 private:
  Environment() = default;
  bool sample(std::uint64_t seed);

  int dim_ = 0;
  int half_extent_ = 0;
  int side_ = 0;
  double p_ = 1.0;
  std::uint64_t requested_seed_ = 0;
  std::uint64_t accepted_seed_ = 0;
  int attempts_ = 0;
  std::size_t site_count_ = 0;
  Site origin_ = 0;
  std::array<std::size_t, kMaxDim> stride_{};
  std::vector<std::uint8_t> open_;  // site * dim + axis
  std::size_t edge_count_ = 0;
  std::size_t open_edge_count_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<Site> adjacency_;
  std::vector<std::uint16_t> masks_;
  std::array<std::int64_t, 2 * kMaxDim> deltas_{};
  std::vector<std::uint8_t> cluster_flag_;
  std::vector<Site> cluster_;
};

/// Number of cluster vertices y with rho(x, y) < r.
std::size_t cluster_ball_count(const Environment& env, Site x, double r);
std::size_t cluster_ball_count(const Environment& env, const Vertex& x, double r);

/// Smallest radius R such that every ball of radius r > R around the origin
/// holds at least `count` cluster vertices: the distance of the count-th
/// closest cluster vertex.
double radius_for_count(const Environment& env, std::size_t count);

/// On-disk description of a generated environment. Edges are never stored;
/// they are regenerated from (dim, half_extent, p, seed).
struct RunManifest {
  int dim = 0;
  int half_extent = 0;
  double p = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t accepted_seed = 0;
  int attempts = 0;
  std::string version;
  std::size_t cluster_size = 0;
  bool touches_boundary = false;
  std::map<std::string, std::string> config;

  static RunManifest describe(const Environment& env);
  EnvironmentParams params() const;

  std::string serialize() const;
  static RunManifest parse(const std::string& text);

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

std::string software_version();

}  // namespace idla

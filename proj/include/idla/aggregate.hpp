#pragma once

// IDLA process algebra: single-particle addition with pausing, batches with
// a ledger of paused particles, restart of the ledger, n-particle aggregates
// and the staged-radius construction that restarts paused particles on
// growing balls.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "idla/environment.hpp"
#include "idla/rng.hpp"
#include "idla/walk.hpp"

namespace idla {

/// Occupied vertex set with insertion history.
class Aggregate {
 public:
  Aggregate(const Environment& env, Site origin);

  Site origin() const { return origin_; }
  bool contains(Site s) const { return occupied_[s] != 0; }
  std::size_t size() const { return history_.size(); }
  bool empty() const { return history_.empty(); }
  const std::vector<Site>& history() const { return history_; }
  std::span<const std::uint8_t> membership() const { return occupied_; }
  /// Occupied sites in increasing order.
  std::vector<Site> sorted_sites() const;

  std::uint64_t particles_settled() const { return settled_; }
  /// Set once any occupied site lies on the box boundary, where the box
  /// stops being a faithful stand-in for the infinite graph.
  bool touched_box_boundary() const { return touched_box_boundary_; }

  /// Records a settled particle; the site must be unoccupied.
  void settle(const Environment& env, Site s);

 private:
  Site origin_;
  std::vector<std::uint8_t> occupied_;
  std::vector<Site> history_;
  std::uint64_t settled_ = 0;
  bool touched_box_boundary_ = false;
};

/// Paused particles in the order they were paused, each with its pending
/// step out of the pause region.
struct PausedLedger {
  std::vector<PausedWalker> walkers;

  std::size_t size() const { return walkers.size(); }
  bool empty() const { return walkers.empty(); }
  std::vector<Site> positions() const;
};

/// Hands out one independent stream per released walk, indexed by
/// (replica, release ordinal).
class ParticleStreams {
 public:
  ParticleStreams(std::uint64_t root_seed, std::uint32_t replica, std::uint32_t lane = 0)
      : root_seed_(root_seed), replica_(replica), lane_(lane) {}

  Stream next() {
    return Stream(root_seed_, StreamDomain::kParticle, replica_, ordinal_++, lane_);
  }
  std::uint32_t issued() const { return ordinal_; }
  std::uint32_t replica() const { return replica_; }

 private:
  std::uint64_t root_seed_;
  std::uint32_t replica_;
  std::uint32_t lane_;
  std::uint32_t ordinal_ = 0;
};

struct AddOptions {
  std::uint64_t step_cap = kDefaultStepCap;
};

/// A(S; x -> T). A start outside S settles where it stands. Returns the
/// paused walker, if the particle was paused.
std::optional<PausedWalker> add_particle(const Environment& env, Aggregate& aggregate, Site start,
                                         const Region& pause, Stream& rng,
                                         const AddOptions& options = {});

/// Restarts one paused particle under T, continuing its walk.
std::optional<PausedWalker> resume_particle(const Environment& env, Aggregate& aggregate,
                                            const PausedWalker& walker, const Region& pause,
                                            Stream& rng, const AddOptions& options = {});

/// A(S; x_1..x_k -> T) as a left fold of add_particle. Returns P(S; x_1..x_k -> T).
PausedLedger add_batch(const Environment& env, Aggregate& aggregate, std::span<const Site> starts,
                       const Region& pause, ParticleStreams& streams, const AddOptions& options = {});

struct Growth {
  Aggregate aggregate;
  PausedLedger ledger;
  std::uint64_t released = 0;
};

/// A_n(x) when pause_radius is empty, otherwise A_n(x -> r) with pause
/// region B_x(r).
Growth grow(const Environment& env, Site source, std::uint64_t particles,
            std::optional<double> pause_radius, ParticleStreams& streams,
            const AddOptions& options = {});

/// A(empty; x, ..., x -> T) for an arbitrary region T.
Growth grow_in(const Environment& env, Site source, std::uint64_t particles, const Region& pause,
               ParticleStreams& streams, const AddOptions& options = {});

/// Restarts the ledger, in order, on the aggregate under the next pause
/// region. Returns the new ledger.
PausedLedger abelian_restart(const Environment& env, Aggregate& aggregate,
                             const PausedLedger& ledger, const Region& next_pause,
                             ParticleStreams& streams, const AddOptions& options = {});

struct Stage {
  int index = 0;
  double radius = 0.0;          // n_j; +inf for the unpaused stage
  std::uint64_t paused = 0;     // k_j
  std::uint64_t settled = 0;    // |A_j|
};

struct StageTrace {
  std::vector<Stage> stages;    // j = 0..J+1
  int terminal = 0;             // J
  double final_radius = 0.0;    // n_J
  double small_count_bound = 0; // n^(1/(d+1))
  std::uint64_t released = 0;   // b_o(n)
};

class StageCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StagedOptions {
  int stage_cap = 100000;
  std::uint64_t step_cap = kDefaultStepCap;
};

struct StagedResult {
  Aggregate aggregate;
  StageTrace trace;
};

/// Releases b_o(n) particles at the origin paused on B_o(n), then restarts
/// the paused particles on B_o(n_{j+1}) with n_{j+1} = n_j + k_j^(1/d) while
/// k_j > n^(1/(d+1)), and finally restarts the remainder unpaused. The final
/// aggregate has the law of A_{b_o(n)}(o).
StagedResult staged_construction(const Environment& env, double n, ParticleStreams& streams,
                                 const StagedOptions& options = {});

/// Radius increment k^(1/d) used between stages.
double stage_increment(std::uint64_t paused, int dim);

}  // namespace idla

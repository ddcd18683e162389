#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lmb/adaptive_birth.hpp"
#include "lmb/models.hpp"
#include "lmb/types.hpp"

// Particle LMB filtering loop: prediction with survival and birth, sequential
// per-sensor updates with marginal data association, belief pruning, and
// state extraction. The per-measurement association probabilities it produces
// feed the adaptive birth step.

namespace lmb {

struct FilterConfig {
  double survival_prob = 0.99;
  int track_particles = 1000;
  int assoc_samples = 500;  // Gibbs sweeps when exact enumeration is infeasible
  double belief_prune = 1e-3;
  int belief_cap = 100;
  double extract_threshold = 0.5;
};

// Association event weights for one sensor scan: row i holds track i's miss
// weight (column 0) followed by one weight per measurement.
struct AssociationTable {
  int n = 0;
  int m = 0;
  std::vector<double> beta;  // n rows, m+1 columns

  double at(int i, int j) const { return beta[static_cast<std::size_t>(i) * (m + 1) + j]; }
  double& at(int i, int j) { return beta[static_cast<std::size_t>(i) * (m + 1) + j]; }
};

// Posterior marginal P(track i generated measurement j), column 0 = miss.
struct AssociationMarginals {
  int n = 0;
  int m = 0;
  std::vector<double> p;

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * (m + 1) + j]; }
  double& at(int i, int j) { return p[static_cast<std::size_t>(i) * (m + 1) + j]; }
};

// Exhaustive enumeration over injective association events (tracks to
// measurements or miss). Feasible for small n, m; the oracle for the sampler.
AssociationMarginals association_marginals_exact(const AssociationTable& table);

// Collects unique events visited by a systematic-sweep Gibbs sampler over the
// same event space and weights them exactly; deterministic given seed.
AssociationMarginals association_marginals_gibbs(const AssociationTable& table, int sweeps,
                                                 std::uint64_t seed);

// Dispatches to exact enumeration when n <= 6 and m <= 6.
AssociationMarginals association_marginals(const AssociationTable& table, int sweeps,
                                           std::uint64_t seed);

struct SensorUpdateResult {
  LmbDensity posterior;
  std::vector<double> assoc_prob;  // per measurement, in [0,1]
};

SensorUpdateResult update_sensor(const LmbDensity& belief, const BearingRangeSensor& sensor,
                                 const std::vector<Measurement>& measurements,
                                 const FilterConfig& cfg, int timestep, int sensor_index,
                                 std::uint64_t base_seed);

// Iterated corrector: sensors applied sequentially in index order.
std::pair<LmbDensity, AssociationInput> update_all_sensors(
    const LmbDensity& belief, const std::vector<BearingRangeSensor>& sensors,
    const std::vector<std::vector<Measurement>>& measurements, const FilterConfig& cfg,
    int timestep, std::uint64_t base_seed);

// Survival-discounted, motion-advanced belief unioned with the (already
// advanced) birth density. Throws on any label collision.
LmbDensity predict(const LmbDensity& posterior, const LmbDensity& birth, const NcvModel& model,
                   double survival_prob, int timestep, std::uint64_t base_seed);

LmbDensity prune_cap_belief(const LmbDensity& belief, const FilterConfig& cfg);

struct LabeledEstimate {
  Label label;
  KinematicState state;
  double existence = 0.0;
};

// One estimate per component with existence strictly above the threshold.
std::vector<LabeledEstimate> extract_estimates(const LmbDensity& belief, double threshold);

}  // namespace lmb

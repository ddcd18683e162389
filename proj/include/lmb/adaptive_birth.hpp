#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lmb/birth_likelihood.hpp"
#include "lmb/models.hpp"
#include "lmb/types.hpp"

// Measurement-adaptive birth: Gibbs sampling over measurement tuples driven
// by average pseudolikelihoods and non-association probabilities, followed by
// birth-component construction. Hosts the five efficiency mechanisms:
// pre-pruning, gating, memoization (via EstimatingSource), prune-and-cap,
// and missed-detection skipping.

namespace lmb {

// Per-sensor association probability of each measurement, taken from the
// filter update that consumed the scan. The miss index has no entry; its
// non-association factor is 1 by definition.
struct AssociationInput {
  std::vector<std::vector<double>> assoc_prob;
};

enum class GateMode { off, pseudo, euclidean, mahalanobis };

struct GateConfig {
  GateMode mode = GateMode::off;
  // pseudo: minimum pairwise average pseudolikelihood (pass when >=);
  // euclidean: meters, strict <; mahalanobis: gate probability in (0,1],
  // converted to the 2-dof chi-squared quantile internally.
  double threshold = 0.0;
};

struct BirthConfig {
  int num_chains = 20;
  int chain_length = 5;
  double r_b_max = 1.0;
  double lambda_b = 0.5;
  double tau_assoc = 1.0;  // 1.0 keeps every index
  GateConfig gate;
  bool memoize = false;
  int max_missed = -1;          // negative = unlimited
  double prune_threshold = 0.0;
  int cap = -1;                 // negative = uncapped
  int spatial_particles = 1000;
};

// Pairwise measurement feasibility, stored once per sensor pair a < b.
// Any pair involving the miss index passes by definition.
class GateMatrix {
 public:
  GateMatrix() = default;
  explicit GateMatrix(std::vector<int> measurements_per_sensor);

  void set(int a, MeasurementIndex ja, int b, MeasurementIndex jb, bool pass);
  bool pass(int a, MeasurementIndex ja, int b, MeasurementIndex jb) const;
  int num_sensors() const { return static_cast<int>(counts_.size()); }

 private:
  std::size_t block_index(int a, int b) const;
  std::vector<int> counts_;
  std::vector<std::size_t> offsets_;  // per (a,b) pair, a < b
  std::vector<std::uint8_t> bits_;
};

// Surviving measurement indices per sensor, miss index first, ascending.
using SurvivorSets = std::vector<std::vector<MeasurementIndex>>;

// Index j survives iff its association probability <= tau_assoc; the miss
// index always survives. Counting of avoided evaluations happens where the
// survivors are consumed, in gibbs_conditional.
SurvivorSets preprune(const AssociationInput& assoc, double tau_assoc);

// Builds the pairwise gate. Pseudo mode estimates the two-sensor average
// pseudolikelihood of every measurement pair and charges each estimate to
// stats.computed; the geometric modes are pure measurement arithmetic.
GateMatrix build_gate_matrix(const BirthContext& ctx, const BirthConfig& cfg, EvalStats& stats);

// True iff candidate j on sensor s passes the gate against every non-miss
// entry of the other slots of J.
bool gate_check(const GateMatrix& gate, int s, MeasurementIndex j, const MeasurementTuple& J);

// Unnormalized conditional weights over the surviving candidates of slot s,
// holding the other slots of J fixed: (1 - r_assoc(j)) * avg pseudolikelihood
// of the modified tuple. Gated-out candidates get weight zero without an
// evaluation. All-zero weights fall back to unit mass on the miss index.
struct ConditionalWeights {
  const std::vector<MeasurementIndex>* support = nullptr;
  std::vector<double> weight;
  double total = 0.0;
  bool fallback = false;
};

ConditionalWeights gibbs_conditional(PseudolikelihoodSource& source, const AssociationInput& assoc,
                                     const GateMatrix* gate, const SurvivorSets& survivors, int s,
                                     const MeasurementTuple& J, EvalStats& stats);

// Runs num_chains independent chains from the all-miss tuple, chain_length
// full sweeps each, and returns the deduplicated union of every visited
// state (initial state included), in lexicographic order. on_sweep, when
// set, observes the state after each full sweep (used by distribution tests).
std::vector<MeasurementTuple> run_birth_gibbs(
    PseudolikelihoodSource& source, const AssociationInput& assoc, const GateMatrix* gate,
    const SurvivorSets& survivors, const BirthConfig& cfg, int num_sensors, std::uint64_t seed,
    EvalStats& stats, const std::function<void(const MeasurementTuple&)>& on_sweep = nullptr);

// True iff the tuple has more missed detections than cfg.max_missed allows;
// increments stats.component_skips when skipping.
bool should_skip(const MeasurementTuple& J, const BirthConfig& cfg, EvalStats& stats);

// Builds the birth LMB for timestep+1 from the sampled tuples: normalized
// birth weights r_U * avg-pseudolikelihood over the post-skip set, existence
// capped at r_b_max, spatial posterior resampled and advanced one step.
LmbDensity construct_birth_lmb(const BirthContext& ctx, PseudolikelihoodSource& source,
                               const AssociationInput& assoc,
                               const std::vector<MeasurementTuple>& tuples, const BirthConfig& cfg,
                               const NcvModel& model, EvalStats& stats);

// Drops components below the existence threshold, then keeps the cap highest
// existences (ties broken by label order), preserving input order.
LmbDensity prune_cap(const LmbDensity& density, double prune_threshold, int cap);

// Wall-clock split of one birth step: tuple sampling (preprune, gating, the
// Gibbs sweeps) versus component construction (skip filter, weights, spatial
// posteriors).
struct BirthTimings {
  double sampling_seconds = 0.0;
  double construction_seconds = 0.0;
};

// Full pipeline: preprune, optional gate, Gibbs sampling, skip filter,
// construction, prune and cap.
std::pair<LmbDensity, EvalStats> adaptive_birth_step(const BirthContext& ctx,
                                                     const AssociationInput& assoc,
                                                     const BirthConfig& cfg,
                                                     const NcvModel& model,
                                                     BirthTimings* timings = nullptr);

}  // namespace lmb

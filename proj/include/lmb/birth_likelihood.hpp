#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "lmb/models.hpp"
#include "lmb/rng.hpp"
#include "lmb/types.hpp"

// Measurement-driven birth weights: per-sensor and joint pseudolikelihoods,
// their birth-prior average estimated by importance sampling, and the
// per-timestep memoization cache with the evaluation counters every benchmark
// claim rests on.

namespace lmb {

// Inputs fixed for one timestep of birth processing.
struct BirthContext {
  const std::vector<BearingRangeSensor>* sensors = nullptr;
  const std::vector<std::vector<Measurement>>* measurements = nullptr;  // per sensor
  BirthPrior prior;
  int timestep = 0;
  std::uint64_t base_seed = 0;
  int num_particles = 1000;

  int num_sensors() const { return static_cast<int>(sensors->size()); }
  int num_measurements(int s) const {
    return static_cast<int>((*measurements)[static_cast<std::size_t>(s)].size());
  }
};

// Detection-to-clutter ratio p_D g(z_j|x) / kappa(z_j) for j >= 1, or the
// miss factor 1 - p_D for j = 0.
double sensor_pseudolikelihood(const BirthContext& ctx, int s, MeasurementIndex j,
                               const KinematicState& x);

// Product over sensors, accumulated in log domain.
double joint_pseudolikelihood(const BirthContext& ctx, const MeasurementTuple& J,
                              const KinematicState& x);

// Importance-sampling estimate of the birth-prior average of the joint
// pseudolikelihood, with the weighted sample set that backs the spatial
// posterior of a birth component.
struct AvgPseudolikelihood {
  double value = 0.0;
  ParticleSet samples;  // unnormalized importance weights
  bool degenerate = false;
};

// Deterministic given (base_seed, timestep, J): the random stream is derived
// from exactly those, so repeated calls are bitwise identical and caching is
// output-preserving.
AvgPseudolikelihood estimate_avg_pseudolikelihood(const BirthContext& ctx,
                                                  const MeasurementTuple& J);

// Counters behind the efficiency comparisons, accumulated per timestep.
struct EvalStats {
  std::int64_t computed = 0;
  std::int64_t memo_hits = 0;
  std::int64_t gated_skips = 0;
  std::int64_t preprune_removed = 0;
  std::int64_t component_skips = 0;

  EvalStats& operator+=(const EvalStats& o) {
    computed += o.computed;
    memo_hits += o.memo_hits;
    gated_skips += o.gated_skips;
    preprune_removed += o.preprune_removed;
    component_skips += o.component_skips;
    return *this;
  }
};

// Hash map keyed on the measurement tuple; lives for one timestep. lookup()
// is the zero-synchronization single-threaded path; lookup_locked() serializes
// concurrent requesters so each key is still computed at most once.
class PseudolikelihoodCache {
 public:
  const AvgPseudolikelihood& lookup(const BirthContext& ctx, const MeasurementTuple& J,
                                    bool* was_hit = nullptr);
  const AvgPseudolikelihood& lookup_locked(const BirthContext& ctx, const MeasurementTuple& J,
                                           bool* was_hit = nullptr);

  std::int64_t hits() const { return hits_; }
  std::int64_t misses() const { return misses_; }
  std::size_t size() const { return entries_.size(); }
  void clear();

 private:
  std::unordered_map<MeasurementTuple, AvgPseudolikelihood, TupleHash> entries_;
  std::int64_t hits_ = 0;
  std::int64_t misses_ = 0;
  std::mutex mutex_;
};

// Where the sampler gets tuple weights from. The production source estimates
// (optionally through the cache); tests substitute fixed tables.
class PseudolikelihoodSource {
 public:
  virtual ~PseudolikelihoodSource() = default;
  virtual double value(const MeasurementTuple& J) = 0;
  virtual AvgPseudolikelihood full(const MeasurementTuple& J) = 0;
};

class EstimatingSource final : public PseudolikelihoodSource {
 public:
  EstimatingSource(const BirthContext& ctx, bool memoize, EvalStats& stats)
      : ctx_(ctx), memoize_(memoize), stats_(stats) {}

  double value(const MeasurementTuple& J) override;
  AvgPseudolikelihood full(const MeasurementTuple& J) override;

  const PseudolikelihoodCache& cache() const { return cache_; }

 private:
  const BirthContext& ctx_;
  bool memoize_;
  EvalStats& stats_;
  PseudolikelihoodCache cache_;
};

// Normalizes importance weights and systematically resamples to n_out equally
// weighted particles. Throws when the estimate cannot be normalized.
ParticleSet spatial_posterior(const AvgPseudolikelihood& result, int n_out, RandomStream& rng);

// One motion step applied to every particle; weights unchanged.
ParticleSet predict_birth_spatial(const NcvModel& model, const ParticleSet& set,
                                  std::uint64_t seed);

}  // namespace lmb

#include "lmb/birth_likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lmb/kernels.hpp"
#include "lmb/resample.hpp"

namespace lmb {

namespace {

// Stream identity for one tuple evaluation: (base_seed, timestep, J) and
// nothing else, which is what makes estimates repeatable and cachable.
std::uint64_t tuple_stream_seed(const BirthContext& ctx, const MeasurementTuple& J) {
  std::uint64_t s = derive_seed(
      ctx.base_seed, {stream_tag::birth_weight, static_cast<std::uint64_t>(ctx.timestep)});
  s = mix_key(s, J.size());
  for (MeasurementIndex j : J) s = mix_key(s, static_cast<std::uint32_t>(j));
  return s;
}

const Measurement& measurement_at(const BirthContext& ctx, int s, MeasurementIndex j) {
  const auto& zs = (*ctx.measurements)[static_cast<std::size_t>(s)];
  if (j < 1 || static_cast<std::size_t>(j) > zs.size()) {
    throw std::out_of_range("measurement index out of range for sensor");
  }
  return zs[static_cast<std::size_t>(j - 1)];
}

double checked_log_kappa(const BearingRangeSensor& sensor, const Measurement& z) {
  const double kappa = clutter_intensity(sensor, z);
  if (!(kappa > 0.0)) {
    throw std::runtime_error(
        "clutter intensity is zero at a supplied measurement; "
        "check range_max and clutter_rate configuration");
  }
  return std::log(kappa);
}

DetectionFactor make_factor(const BearingRangeSensor& sensor, const Measurement& z) {
  DetectionFactor f;
  f.sx = sensor.px;
  f.sy = sensor.py;
  f.zb = z.bearing;
  f.zr = z.range;
  f.inv_2b2 = 1.0 / (2.0 * sensor.bearing_std * sensor.bearing_std);
  f.inv_2r2 = 1.0 / (2.0 * sensor.range_std * sensor.range_std);
  f.log_gain = std::log(sensor.detect_prob) - checked_log_kappa(sensor, z) -
               std::log(2.0 * std::numbers::pi * sensor.bearing_std * sensor.range_std);
  return f;
}

}  // namespace

double sensor_pseudolikelihood(const BirthContext& ctx, int s, MeasurementIndex j,
                               const KinematicState& x) {
  const BearingRangeSensor& sensor = (*ctx.sensors)[static_cast<std::size_t>(s)];
  if (j == 0) return 1.0 - sensor.detect_prob_at(x);
  const Measurement& z = measurement_at(ctx, s, j);
  const double log_kappa = checked_log_kappa(sensor, z);
  const double pd = sensor.detect_prob_at(x);
  if (pd <= 0.0) return 0.0;
  return std::exp(std::log(pd) + log_likelihood(sensor, z, x) - log_kappa);
}

double joint_pseudolikelihood(const BirthContext& ctx, const MeasurementTuple& J,
                              const KinematicState& x) {
  if (static_cast<int>(J.size()) != ctx.num_sensors()) {
    throw std::invalid_argument("tuple length does not match sensor count");
  }
  double log_acc = 0.0;
  for (int s = 0; s < ctx.num_sensors(); ++s) {
    const BearingRangeSensor& sensor = (*ctx.sensors)[static_cast<std::size_t>(s)];
    const MeasurementIndex j = J[static_cast<std::size_t>(s)];
    const double pd = sensor.detect_prob_at(x);
    if (j == 0) {
      log_acc += std::log1p(-pd);
    } else {
      const Measurement& z = measurement_at(ctx, s, j);
      const double log_kappa = checked_log_kappa(sensor, z);
      if (pd <= 0.0) return 0.0;
      log_acc += std::log(pd) + log_likelihood(sensor, z, x) - log_kappa;
    }
  }
  return std::exp(log_acc);
}

AvgPseudolikelihood estimate_avg_pseudolikelihood(const BirthContext& ctx,
                                                  const MeasurementTuple& J) {
  if (static_cast<int>(J.size()) != ctx.num_sensors()) {
    throw std::invalid_argument("tuple length does not match sensor count");
  }
  if (ctx.num_particles <= 0) throw std::invalid_argument("num_particles must be positive");

  std::vector<DetectionFactor> factors;
  factors.reserve(J.size());
  BirthWeightProblem problem;
  problem.miss_log_sum = 0.0;
  int first_detection = -1;
  for (int s = 0; s < ctx.num_sensors(); ++s) {
    const BearingRangeSensor& sensor = (*ctx.sensors)[static_cast<std::size_t>(s)];
    const MeasurementIndex j = J[static_cast<std::size_t>(s)];
    if (j == 0) {
      problem.miss_log_sum += std::log1p(-sensor.detect_prob);
    } else {
      const Measurement& z = measurement_at(ctx, s, j);
      factors.push_back(make_factor(sensor, z));
      if (first_detection < 0) {
        first_detection = s;
        problem.proposal.all_miss = false;
        problem.proposal.sx = sensor.px;
        problem.proposal.sy = sensor.py;
        problem.proposal.zb = z.bearing;
        problem.proposal.zr = z.range;
        problem.proposal.bearing_std = sensor.bearing_std;
        problem.proposal.range_std = sensor.range_std;
        problem.proposal.log_norm =
            -std::log(2.0 * std::numbers::pi * sensor.bearing_std * sensor.range_std);
      }
    }
  }
  problem.factors = factors.data();
  problem.num_factors = static_cast<int>(factors.size());
  problem.region = ctx.prior.region;
  problem.log_area = std::log(ctx.prior.region.area());
  problem.velocity_std = ctx.prior.velocity_std;
  problem.seed = tuple_stream_seed(ctx, J);
  problem.count = ctx.num_particles;

  AvgPseudolikelihood out;
  out.samples.particles.resize(static_cast<std::size_t>(ctx.num_particles));
  birth_weight_kernel(problem, out.samples.particles.data());

  double sum = 0.0;
  for (const Particle& p : out.samples.particles) sum += p.weight;
  out.value = sum / static_cast<double>(ctx.num_particles);
  out.degenerate = !(sum > 0.0);
  return out;
}

const AvgPseudolikelihood& PseudolikelihoodCache::lookup(const BirthContext& ctx,
                                                         const MeasurementTuple& J,
                                                         bool* was_hit) {
  auto it = entries_.find(J);
  if (it != entries_.end()) {
    ++hits_;
    if (was_hit) *was_hit = true;
    return it->second;
  }
  ++misses_;
  if (was_hit) *was_hit = false;
  auto [ins, ok] = entries_.emplace(J, estimate_avg_pseudolikelihood(ctx, J));
  return ins->second;
}

const AvgPseudolikelihood& PseudolikelihoodCache::lookup_locked(const BirthContext& ctx,
                                                                const MeasurementTuple& J,
                                                                bool* was_hit) {
  std::lock_guard<std::mutex> guard(mutex_);
  return lookup(ctx, J, was_hit);
}

void PseudolikelihoodCache::clear() {
  entries_.clear();
  hits_ = 0;
  misses_ = 0;
}

double EstimatingSource::value(const MeasurementTuple& J) {
  if (!memoize_) {
    ++stats_.computed;
    return estimate_avg_pseudolikelihood(ctx_, J).value;
  }
  bool hit = false;
  const AvgPseudolikelihood& r = cache_.lookup(ctx_, J, &hit);
  if (hit) {
    ++stats_.memo_hits;
  } else {
    ++stats_.computed;
  }
  return r.value;
}

AvgPseudolikelihood EstimatingSource::full(const MeasurementTuple& J) {
  if (!memoize_) {
    ++stats_.computed;
    return estimate_avg_pseudolikelihood(ctx_, J);
  }
  bool hit = false;
  const AvgPseudolikelihood& r = cache_.lookup(ctx_, J, &hit);
  if (hit) {
    ++stats_.memo_hits;
  } else {
    ++stats_.computed;
  }
  return r;
}

ParticleSet spatial_posterior(const AvgPseudolikelihood& result, int n_out, RandomStream& rng) {
  if (n_out <= 0) throw std::invalid_argument("spatial_posterior: n_out must be positive");
  if (!(result.value > 0.0) || result.samples.empty()) {
    throw std::runtime_error("spatial_posterior: cannot normalize a zero-mass estimate");
  }
  const std::vector<Particle>& in = result.samples.particles;
  std::vector<double> w(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) w[i] = in[i].weight;
  const double offset = rng.uniform01();
  std::vector<std::int32_t> idx = systematic_resample_indices(w.data(), w.size(), n_out, offset);
  ParticleSet out;
  out.particles.resize(static_cast<std::size_t>(n_out));
  const double wk = 1.0 / static_cast<double>(n_out);
  for (int k = 0; k < n_out; ++k) {
    out.particles[static_cast<std::size_t>(k)].state =
        in[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])].state;
    out.particles[static_cast<std::size_t>(k)].weight = wk;
  }
  return out;
}

ParticleSet predict_birth_spatial(const NcvModel& model, const ParticleSet& set,
                                  std::uint64_t seed) {
  ParticleSet out = set;
  predict_particles_kernel(model, seed, out);
  return out;
}

}  // namespace lmb

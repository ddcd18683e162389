#pragma once

#include <cstdint>
#include <vector>

#include "lmb/models.hpp"
#include "lmb/types.hpp"

// Data-parallel inner loops. Each kernel has a *_serial reference variant;
// the default entry points dispatch through exec::parallel_for. All kernels
// write element i from inputs keyed only by i (per-element rng substreams),
// so results are identical for any thread count.

namespace lmb {

// Precomputed constants for one detected measurement inside a tuple weight
// evaluation: log(p_D) - log(kappa) - log(2 pi sb sr) folded into log_gain.
struct DetectionFactor {
  double sx = 0.0;
  double sy = 0.0;
  double zb = 0.0;
  double zr = 0.0;
  double inv_2b2 = 0.0;  // 1 / (2 sigma_bearing^2)
  double inv_2r2 = 0.0;  // 1 / (2 sigma_range^2)
  double log_gain = 0.0;
};

// Log of p_D g(z|x) / kappa(z) for a particle at (px, py). Bearing residual
// wrapped to (-pi, pi]; inputs are differences of two wrapped angles, so the
// branch form is exact here.
inline double detection_log_factor(const DetectionFactor& f, double px, double py) {
  const double dx = f.sx - px;
  const double dy = f.sy - py;
  const double pred_range = std::sqrt(dx * dx + dy * dy);
  const double pred_bearing = std::atan2(dx, dy);
  double db = f.zb - pred_bearing;
  if (db > std::numbers::pi) {
    db -= 2.0 * std::numbers::pi;
  } else if (db <= -std::numbers::pi) {
    db += 2.0 * std::numbers::pi;
  }
  const double dr = f.zr - pred_range;
  return f.log_gain - db * db * f.inv_2b2 - dr * dr * f.inv_2r2;
}

// Proposal for one tuple: all-miss samples the birth prior directly;
// otherwise (alpha, r) around the proposing measurement, position by polar
// inversion, velocity from the prior. The 1/r polar-to-Cartesian Jacobian
// belongs to the proposal density.
struct BirthProposal {
  bool all_miss = true;
  double sx = 0.0;
  double sy = 0.0;
  double zb = 0.0;
  double zr = 0.0;
  double bearing_std = 0.0;
  double range_std = 0.0;
  double log_norm = 0.0;  // -log(2 pi sb sr)
};

struct BirthWeightProblem {
  const DetectionFactor* factors = nullptr;
  int num_factors = 0;
  double miss_log_sum = 0.0;  // sum of log(1 - p_D) over missed sensors
  BirthProposal proposal;
  Region region;
  double log_area = 0.0;
  double velocity_std = 0.0;
  std::uint64_t seed = 0;
  int count = 0;
};

// Fills out[0..count) with sampled states and unnormalized importance
// weights p_B * psi / q.
void birth_weight_kernel(const BirthWeightProblem& problem, Particle* out);
void birth_weight_kernel_serial(const BirthWeightProblem& problem, Particle* out);

// Per-track detection mass table for one sensor scan:
//   miss_mass[i]      = sum_k w_ik (1 - p_D)
//   det_mass[i*m + j] = sum_k w_ik p_D g(z_j | x_ik)
// Parallel over tracks; per-track sums accumulate in particle order.
void likelihood_table_kernel(const LmbDensity& density, const BearingRangeSensor& sensor,
                             const std::vector<Measurement>& measurements,
                             std::vector<double>& miss_mass, std::vector<double>& det_mass);
void likelihood_table_kernel_serial(const LmbDensity& density, const BearingRangeSensor& sensor,
                                    const std::vector<Measurement>& measurements,
                                    std::vector<double>& miss_mass, std::vector<double>& det_mass);

// Advances every particle one motion step with per-particle noise substreams.
void predict_particles_kernel(const NcvModel& model, std::uint64_t seed, ParticleSet& set);
void predict_particles_kernel_serial(const NcvModel& model, std::uint64_t seed, ParticleSet& set);

// Pairwise feasibility between the measurements of two sensors.
// Candidates carry the polar-inverted position of each measurement.
struct GateCandidate {
  double x = 0.0;
  double y = 0.0;
};

enum class GatePairMode { euclidean, mahalanobis };

// out[i*nb + k] = 1 iff measurement i of sensor a and k of sensor b pass.
// Euclidean: strict ||xa - xb|| < threshold. Mahalanobis: squared
// measurement-space distance under either sensor's noise below threshold.
void gate_pairs_kernel(const GateCandidate* pa, int na, const BearingRangeSensor& sa,
                       const std::vector<Measurement>& za, const GateCandidate* pb, int nb,
                       const BearingRangeSensor& sb, const std::vector<Measurement>& zb,
                       GatePairMode mode, double threshold, std::uint8_t* out);
void gate_pairs_kernel_serial(const GateCandidate* pa, int na, const BearingRangeSensor& sa,
                              const std::vector<Measurement>& za, const GateCandidate* pb, int nb,
                              const BearingRangeSensor& sb, const std::vector<Measurement>& zb,
                              GatePairMode mode, double threshold, std::uint8_t* out);

// Polar inversion shared by the proposal and the gate builder.
inline void invert_measurement(const BearingRangeSensor& sensor, const Measurement& z, double& px,
                               double& py) {
  px = sensor.px - z.range * std::sin(z.bearing);
  py = sensor.py - z.range * std::cos(z.bearing);
}

}  // namespace lmb

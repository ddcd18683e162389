#pragma once

#include <vector>

#include "lmb/rng.hpp"
#include "lmb/types.hpp"

namespace lmb {

// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

// Near-constant-velocity motion with white acceleration noise per axis.
struct NcvModel {
  double dt = 1.0;
  double accel_std_x = 0.0;
  double accel_std_y = 0.0;
};

// One transition; draws one acceleration per axis from rng.
KinematicState ncv_step(const NcvModel& model, const KinematicState& state, RandomStream& rng);

// Deterministic transition with given accelerations (kernel path).
KinematicState ncv_step_with_noise(const NcvModel& model, const KinematicState& state, double ax,
                                   double ay);

struct BearingRangeSensor {
  int id = 0;
  double px = 0.0;
  double py = 0.0;
  double bearing_std = 0.0;   // radians
  double range_std = 0.0;     // meters
  double detect_prob = 0.0;
  double clutter_rate = 0.0;  // expected clutter points per scan
  double range_max = 0.0;     // meters, edge of the observed volume

  // Detection probability as a function of state. This sensor's is constant;
  // the pseudolikelihood formulas call through here to stay general, while
  // the sampling kernels rely on the constancy for their precomputation.
  double detect_prob_at(const KinematicState&) const { return detect_prob; }
};

// Noise-free measurement. Bearing is atan2(sensor - target) with the x
// difference first, so it is measured from the +y axis. Throws when the
// target sits exactly on the sensor (bearing undefined).
Measurement observe(const BearingRangeSensor& sensor, const KinematicState& state);

// Gaussian measurement density with the bearing residual wrapped to (-pi, pi].
double likelihood(const BearingRangeSensor& sensor, const Measurement& z,
                  const KinematicState& state);
double log_likelihood(const BearingRangeSensor& sensor, const Measurement& z,
                      const KinematicState& state);

// Uniform clutter intensity over the bearing-range volume; zero outside it.
double clutter_intensity(const BearingRangeSensor& sensor, const Measurement& z);

struct Region {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

// Uniform position over the region, independent zero-mean Gaussian velocity.
struct BirthPrior {
  Region region;
  double velocity_std = 0.0;
  int num_particles = 0;
};

// n equally weighted draws from the prior (weights sum to one).
ParticleSet sample_birth_prior(const BirthPrior& prior, int n, RandomStream& rng);

// Prior density at a state: uniform position factor times the Gaussian
// velocity factor; zero outside the region.
double birth_prior_density(const BirthPrior& prior, const KinematicState& state);

}  // namespace lmb

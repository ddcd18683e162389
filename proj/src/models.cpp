#include "lmb/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lmb {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_angle(double angle) {
  double w = std::remainder(angle, kTwoPi);
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

KinematicState ncv_step_with_noise(const NcvModel& model, const KinematicState& state, double ax,
                                   double ay) {
  const double dt = model.dt;
  const double half_dt2 = 0.5 * dt * dt;
  KinematicState out;
  out.px = state.px + dt * state.vx + half_dt2 * ax;
  out.vx = state.vx + dt * ax;
  out.py = state.py + dt * state.vy + half_dt2 * ay;
  out.vy = state.vy + dt * ay;
  return out;
}

KinematicState ncv_step(const NcvModel& model, const KinematicState& state, RandomStream& rng) {
  const double ax = rng.normal(0.0, model.accel_std_x);
  const double ay = rng.normal(0.0, model.accel_std_y);
  return ncv_step_with_noise(model, state, ax, ay);
}

Measurement observe(const BearingRangeSensor& sensor, const KinematicState& state) {
  const double dx = sensor.px - state.px;
  const double dy = sensor.py - state.py;
  if (dx == 0.0 && dy == 0.0) {
    throw std::domain_error("observe: target coincides with sensor, bearing undefined");
  }
  Measurement z;
  z.bearing = std::atan2(dx, dy);
  z.range = std::sqrt(dx * dx + dy * dy);
  return z;
}

double log_likelihood(const BearingRangeSensor& sensor, const Measurement& z,
                      const KinematicState& state) {
  const Measurement pred = observe(sensor, state);
  const double db = wrap_angle(z.bearing - pred.bearing);
  const double dr = z.range - pred.range;
  const double qb = db * db / (2.0 * sensor.bearing_std * sensor.bearing_std);
  const double qr = dr * dr / (2.0 * sensor.range_std * sensor.range_std);
  return -std::log(kTwoPi * sensor.bearing_std * sensor.range_std) - qb - qr;
}

double likelihood(const BearingRangeSensor& sensor, const Measurement& z,
                  const KinematicState& state) {
  return std::exp(log_likelihood(sensor, z, state));
}

double clutter_intensity(const BearingRangeSensor& sensor, const Measurement& z) {
  const bool in_volume = z.range >= 0.0 && z.range <= sensor.range_max &&
                         z.bearing > -std::numbers::pi && z.bearing <= std::numbers::pi;
  if (!in_volume) return 0.0;
  return sensor.clutter_rate / (kTwoPi * sensor.range_max);
}

ParticleSet sample_birth_prior(const BirthPrior& prior, int n, RandomStream& rng) {
  if (n <= 0) throw std::invalid_argument("sample_birth_prior: n must be positive");
  ParticleSet set;
  set.particles.resize(static_cast<std::size_t>(n));
  const double w = 1.0 / static_cast<double>(n);
  for (Particle& p : set.particles) {
    p.state.px = rng.uniform(prior.region.x_min, prior.region.x_max);
    p.state.py = rng.uniform(prior.region.y_min, prior.region.y_max);
    p.state.vx = rng.normal(0.0, prior.velocity_std);
    p.state.vy = rng.normal(0.0, prior.velocity_std);
    p.weight = w;
  }
  return set;
}

double birth_prior_density(const BirthPrior& prior, const KinematicState& state) {
  if (!prior.region.contains(state.px, state.py)) return 0.0;
  const double pos = 1.0 / prior.region.area();
  const double s2 = prior.velocity_std * prior.velocity_std;
  const double qv = (state.vx * state.vx + state.vy * state.vy) / (2.0 * s2);
  const double vel = std::exp(-qv) / (kTwoPi * s2);
  return pos * vel;
}

}  // namespace lmb

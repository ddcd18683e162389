#include "lmb/kernels.hpp"

#include <cmath>

#include "lmb/exec.hpp"
#include "lmb/rng.hpp"

namespace lmb {

namespace {

// Quadratic-form cutoff for the scan likelihood table: exp(-60) ~ 8.8e-27 is
// far below any mass that survives normalization, and the cutoff is applied
// identically in serial and parallel variants.
constexpr double kQuadCutoff = 60.0;

inline void birth_weight_one(const BirthWeightProblem& pr, std::int64_t i, Particle& out) {
  RandomStream rng = substream(pr.seed, {static_cast<std::uint64_t>(i)});
  double px, py, vx, vy;
  bool valid = true;
  double log_w = 0.0;
  if (pr.proposal.all_miss) {
    px = rng.uniform(pr.region.x_min, pr.region.x_max);
    py = rng.uniform(pr.region.y_min, pr.region.y_max);
    vx = rng.normal(0.0, pr.velocity_std);
    vy = rng.normal(0.0, pr.velocity_std);
    log_w = pr.miss_log_sum;
    for (int f = 0; f < pr.num_factors; ++f) {
      log_w += detection_log_factor(pr.factors[f], px, py);
    }
  } else {
    const double n1 = rng.normal();
    const double n2 = rng.normal();
    vx = rng.normal(0.0, pr.velocity_std);
    vy = rng.normal(0.0, pr.velocity_std);
    const double alpha = pr.proposal.zb + pr.proposal.bearing_std * n1;
    const double r = pr.proposal.zr + pr.proposal.range_std * n2;
    if (r > 0.0) {
      px = pr.proposal.sx - r * std::sin(alpha);
      py = pr.proposal.sy - r * std::cos(alpha);
    } else {
      px = pr.proposal.sx;
      py = pr.proposal.sy;
    }
    if (r > 0.0 && pr.region.contains(px, py)) {
      const double log_q = pr.proposal.log_norm - 0.5 * (n1 * n1 + n2 * n2) - std::log(r);
      double log_psi = pr.miss_log_sum;
      for (int f = 0; f < pr.num_factors; ++f) {
        log_psi += detection_log_factor(pr.factors[f], px, py);
      }
      log_w = log_psi - pr.log_area - log_q;
    } else {
      valid = false;  // proposal landed outside the birth prior's support
    }
  }
  out.state.px = px;
  out.state.vx = vx;
  out.state.py = py;
  out.state.vy = vy;
  out.weight = valid ? std::exp(log_w) : 0.0;
}

inline void likelihood_table_row(const LmbDensity& density, const BearingRangeSensor& sensor,
                                 const std::vector<Measurement>& zs, std::int64_t i,
                                 double* miss_mass, double* det_row) {
  const int m = static_cast<int>(zs.size());
  const double pd = sensor.detect_prob;
  const double one_m_pd = 1.0 - pd;
  const double inv_2b2 = 1.0 / (2.0 * sensor.bearing_std * sensor.bearing_std);
  const double inv_2r2 = 1.0 / (2.0 * sensor.range_std * sensor.range_std);
  const double norm = 1.0 / (2.0 * std::numbers::pi * sensor.bearing_std * sensor.range_std);

  double miss = 0.0;
  for (int j = 0; j < m; ++j) det_row[j] = 0.0;
  for (const Particle& p : density.components[static_cast<std::size_t>(i)].spatial.particles) {
    miss += p.weight * one_m_pd;
    const double dx = sensor.px - p.state.px;
    const double dy = sensor.py - p.state.py;
    const double pred_range = std::sqrt(dx * dx + dy * dy);
    const double pred_bearing = std::atan2(dx, dy);
    const double wpd = p.weight * pd;
    for (int j = 0; j < m; ++j) {
      double db = zs[static_cast<std::size_t>(j)].bearing - pred_bearing;
      if (db > std::numbers::pi) {
        db -= 2.0 * std::numbers::pi;
      } else if (db <= -std::numbers::pi) {
        db += 2.0 * std::numbers::pi;
      }
      const double dr = zs[static_cast<std::size_t>(j)].range - pred_range;
      const double quad = db * db * inv_2b2 + dr * dr * inv_2r2;
      if (quad < kQuadCutoff) {
        det_row[j] += wpd * norm * std::exp(-quad);
      }
    }
  }
  *miss_mass = miss;
}

inline void predict_one(const NcvModel& model, std::uint64_t seed, std::int64_t i, Particle& p) {
  RandomStream rng = substream(seed, {static_cast<std::uint64_t>(i)});
  const double ax = rng.normal(0.0, model.accel_std_x);
  const double ay = rng.normal(0.0, model.accel_std_y);
  p.state = ncv_step_with_noise(model, p.state, ax, ay);
}

inline double measurement_space_dist2(const BearingRangeSensor& sensor, const Measurement& z,
                                      double px, double py) {
  const double dx = sensor.px - px;
  const double dy = sensor.py - py;
  const double pred_range = std::sqrt(dx * dx + dy * dy);
  const double pred_bearing = std::atan2(dx, dy);
  double db = z.bearing - pred_bearing;
  if (db > std::numbers::pi) {
    db -= 2.0 * std::numbers::pi;
  } else if (db <= -std::numbers::pi) {
    db += 2.0 * std::numbers::pi;
  }
  const double dr = z.range - pred_range;
  return db * db / (sensor.bearing_std * sensor.bearing_std) +
         dr * dr / (sensor.range_std * sensor.range_std);
}

inline void gate_pair_one(const GateCandidate* pa, const BearingRangeSensor& sa,
                          const std::vector<Measurement>& za, const GateCandidate* pb,
                          const BearingRangeSensor& sb, const std::vector<Measurement>& zb,
                          GatePairMode mode, double threshold, int nb, std::int64_t idx,
                          std::uint8_t* out) {
  const int i = static_cast<int>(idx / nb);
  const int k = static_cast<int>(idx % nb);
  bool pass;
  if (mode == GatePairMode::euclidean) {
    const double dx = pa[i].x - pb[k].x;
    const double dy = pa[i].y - pb[k].y;
    pass = std::sqrt(dx * dx + dy * dy) < threshold;
  } else {
    const double d_ab = measurement_space_dist2(sb, zb[static_cast<std::size_t>(k)], pa[i].x, pa[i].y);
    const double d_ba = measurement_space_dist2(sa, za[static_cast<std::size_t>(i)], pb[k].x, pb[k].y);
    pass = d_ab < threshold || d_ba < threshold;
  }
  out[idx] = pass ? 1 : 0;
}

}  // namespace

void birth_weight_kernel(const BirthWeightProblem& problem, Particle* out) {
  exec::parallel_for(problem.count, [&](std::int64_t i) { birth_weight_one(problem, i, out[i]); });
}

void birth_weight_kernel_serial(const BirthWeightProblem& problem, Particle* out) {
  exec::serial_for(problem.count, [&](std::int64_t i) { birth_weight_one(problem, i, out[i]); });
}

void likelihood_table_kernel(const LmbDensity& density, const BearingRangeSensor& sensor,
                             const std::vector<Measurement>& measurements,
                             std::vector<double>& miss_mass, std::vector<double>& det_mass) {
  const std::int64_t n = static_cast<std::int64_t>(density.size());
  const std::size_t m = measurements.size();
  miss_mass.assign(static_cast<std::size_t>(n), 0.0);
  det_mass.assign(static_cast<std::size_t>(n) * m, 0.0);
  exec::parallel_for(n, [&](std::int64_t i) {
    likelihood_table_row(density, sensor, measurements, i, &miss_mass[static_cast<std::size_t>(i)],
                         det_mass.data() + static_cast<std::size_t>(i) * m);
  });
}

void likelihood_table_kernel_serial(const LmbDensity& density, const BearingRangeSensor& sensor,
                                    const std::vector<Measurement>& measurements,
                                    std::vector<double>& miss_mass, std::vector<double>& det_mass) {
  const std::int64_t n = static_cast<std::int64_t>(density.size());
  const std::size_t m = measurements.size();
  miss_mass.assign(static_cast<std::size_t>(n), 0.0);
  det_mass.assign(static_cast<std::size_t>(n) * m, 0.0);
  exec::serial_for(n, [&](std::int64_t i) {
    likelihood_table_row(density, sensor, measurements, i, &miss_mass[static_cast<std::size_t>(i)],
                         det_mass.data() + static_cast<std::size_t>(i) * m);
  });
}

void predict_particles_kernel(const NcvModel& model, std::uint64_t seed, ParticleSet& set) {
  Particle* p = set.particles.data();
  exec::parallel_for(static_cast<std::int64_t>(set.size()),
                     [&](std::int64_t i) { predict_one(model, seed, i, p[i]); });
}

void predict_particles_kernel_serial(const NcvModel& model, std::uint64_t seed, ParticleSet& set) {
  Particle* p = set.particles.data();
  exec::serial_for(static_cast<std::int64_t>(set.size()),
                   [&](std::int64_t i) { predict_one(model, seed, i, p[i]); });
}

void gate_pairs_kernel(const GateCandidate* pa, int na, const BearingRangeSensor& sa,
                       const std::vector<Measurement>& za, const GateCandidate* pb, int nb,
                       const BearingRangeSensor& sb, const std::vector<Measurement>& zb,
                       GatePairMode mode, double threshold, std::uint8_t* out) {
  exec::parallel_for(static_cast<std::int64_t>(na) * nb, [&](std::int64_t idx) {
    gate_pair_one(pa, sa, za, pb, sb, zb, mode, threshold, nb, idx, out);
  });
}

void gate_pairs_kernel_serial(const GateCandidate* pa, int na, const BearingRangeSensor& sa,
                              const std::vector<Measurement>& za, const GateCandidate* pb, int nb,
                              const BearingRangeSensor& sb, const std::vector<Measurement>& zb,
                              GatePairMode mode, double threshold, std::uint8_t* out) {
  exec::serial_for(static_cast<std::int64_t>(na) * nb, [&](std::int64_t idx) {
    gate_pair_one(pa, sa, za, pb, sb, zb, mode, threshold, nb, idx, out);
  });
}

}  // namespace lmb

#include "lmb/filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "lmb/exec.hpp"
#include "lmb/kernels.hpp"
#include "lmb/resample.hpp"
#include "lmb/rng.hpp"
#include "lmb/seed_keys.hpp"

namespace lmb {

namespace {

void enumerate_events(const AssociationTable& t, int i, std::uint32_t used, double w,
                      std::vector<int>& path, std::vector<double>& num, double& total) {
  if (i == t.n) {
    total += w;
    for (int k = 0; k < t.n; ++k) {
      num[static_cast<std::size_t>(k) * (t.m + 1) + path[static_cast<std::size_t>(k)]] += w;
    }
    return;
  }
  const double w0 = w * t.at(i, 0);
  if (w0 > 0.0) {
    path[static_cast<std::size_t>(i)] = 0;
    enumerate_events(t, i + 1, used, w0, path, num, total);
  }
  for (int j = 1; j <= t.m; ++j) {
    if (used & (1u << j)) continue;
    const double wj = w * t.at(i, j);
    if (wj > 0.0) {
      path[static_cast<std::size_t>(i)] = j;
      enumerate_events(t, i + 1, used | (1u << j), wj, path, num, total);
    }
  }
}

}  // namespace

AssociationMarginals association_marginals_exact(const AssociationTable& table) {
  AssociationMarginals out;
  out.n = table.n;
  out.m = table.m;
  out.p.assign(static_cast<std::size_t>(table.n) * (table.m + 1), 0.0);
  std::vector<int> path(static_cast<std::size_t>(table.n), 0);
  double total = 0.0;
  enumerate_events(table, 0, 0, 1.0, path, out.p, total);
  if (total > 0.0) {
    for (double& v : out.p) v /= total;
  } else {
    // No event carries mass; the only consistent reading is all-miss.
    for (int i = 0; i < table.n; ++i) out.at(i, 0) = 1.0;
  }
  return out;
}

AssociationMarginals association_marginals_gibbs(const AssociationTable& table, int sweeps,
                                                 std::uint64_t seed) {
  const int n = table.n;
  const int m = table.m;
  AssociationMarginals out;
  out.n = n;
  out.m = m;
  out.p.assign(static_cast<std::size_t>(n) * (m + 1), 0.0);
  if (n == 0) return out;

  std::vector<int> alpha(static_cast<std::size_t>(n), 0);
  std::vector<int> holder(static_cast<std::size_t>(m + 1), -1);  // track holding measurement j

  std::map<std::vector<int>, double> event_log_weight;
  auto record = [&](const std::vector<int>& state) {
    if (event_log_weight.count(state)) return;
    double lw = 0.0;
    for (int i = 0; i < n; ++i) {
      const double b = table.at(i, state[static_cast<std::size_t>(i)]);
      lw += b > 0.0 ? std::log(b) : -std::numeric_limits<double>::infinity();
    }
    event_log_weight.emplace(state, lw);
  };
  record(alpha);

  RandomStream rng(seed);
  std::vector<int> candidates;
  std::vector<double> weights;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      candidates.clear();
      weights.clear();
      candidates.push_back(0);
      weights.push_back(table.at(i, 0));
      for (int j = 1; j <= m; ++j) {
        const int h = holder[static_cast<std::size_t>(j)];
        if (h == -1 || h == i) {
          candidates.push_back(j);
          weights.push_back(table.at(i, j));
        }
      }
      double total = 0.0;
      for (double w : weights) total += w;
      int next;
      if (total > 0.0) {
        const double u = rng.uniform01() * total;
        double cum = 0.0;
        std::size_t chosen = weights.size();
        std::size_t last_positive = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
          if (weights[k] > 0.0) last_positive = k;
          cum += weights[k];
          if (chosen == weights.size() && u < cum) chosen = k;
        }
        if (chosen == weights.size() || weights[chosen] <= 0.0) chosen = last_positive;
        next = candidates[chosen];
      } else {
        next = 0;  // miss is always feasible
      }
      const int prev = alpha[static_cast<std::size_t>(i)];
      if (prev != next) {
        if (prev != 0) holder[static_cast<std::size_t>(prev)] = -1;
        if (next != 0) holder[static_cast<std::size_t>(next)] = i;
        alpha[static_cast<std::size_t>(i)] = next;
      }
    }
    record(alpha);
  }

  // Exact weights over the unique visited events.
  double max_lw = -std::numeric_limits<double>::infinity();
  for (const auto& [state, lw] : event_log_weight) max_lw = std::max(max_lw, lw);
  if (!(max_lw > -std::numeric_limits<double>::infinity())) {
    for (int i = 0; i < n; ++i) out.at(i, 0) = 1.0;
    return out;
  }
  double norm = 0.0;
  for (const auto& [state, lw] : event_log_weight) norm += std::exp(lw - max_lw);
  for (const auto& [state, lw] : event_log_weight) {
    const double pe = std::exp(lw - max_lw) / norm;
    for (int i = 0; i < n; ++i) {
      out.at(i, state[static_cast<std::size_t>(i)]) += pe;
    }
  }
  return out;
}

AssociationMarginals association_marginals(const AssociationTable& table, int sweeps,
                                           std::uint64_t seed) {
  if (table.n <= 6 && table.m <= 6) return association_marginals_exact(table);
  return association_marginals_gibbs(table, sweeps, seed);
}

SensorUpdateResult update_sensor(const LmbDensity& belief, const BearingRangeSensor& sensor,
                                 const std::vector<Measurement>& measurements,
                                 const FilterConfig& cfg, int timestep, int sensor_index,
                                 std::uint64_t base_seed) {
  const int n = static_cast<int>(belief.size());
  const int m = static_cast<int>(measurements.size());
  SensorUpdateResult out;
  out.assoc_prob.assign(static_cast<std::size_t>(m), 0.0);
  if (n == 0) return out;

  std::vector<double> miss_mass, det_mass;
  likelihood_table_kernel(belief, sensor, measurements, miss_mass, det_mass);

  std::vector<double> kappa(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    kappa[static_cast<std::size_t>(j)] =
        clutter_intensity(sensor, measurements[static_cast<std::size_t>(j)]);
    if (!(kappa[static_cast<std::size_t>(j)] > 0.0)) {
      throw std::runtime_error(
          "clutter intensity is zero at a received measurement; "
          "check range_max and clutter_rate configuration");
    }
  }

  AssociationTable table;
  table.n = n;
  table.m = m;
  table.beta.assign(static_cast<std::size_t>(n) * (m + 1), 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(n));
  std::vector<double> q(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const BernoulliComponent& c = belief.components[static_cast<std::size_t>(i)];
    wsum[static_cast<std::size_t>(i)] = c.spatial.total_weight();
    if (!(wsum[static_cast<std::size_t>(i)] > 0.0)) {
      throw std::runtime_error("update_sensor: component has zero total spatial weight");
    }
    q[static_cast<std::size_t>(i)] =
        miss_mass[static_cast<std::size_t>(i)] / wsum[static_cast<std::size_t>(i)];
    table.at(i, 0) = 1.0 - c.existence + c.existence * q[static_cast<std::size_t>(i)];
    for (int j = 0; j < m; ++j) {
      const double e = det_mass[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)] /
                       (wsum[static_cast<std::size_t>(i)] * kappa[static_cast<std::size_t>(j)]);
      table.at(i, j + 1) = c.existence * e;
    }
  }

  const std::uint64_t assoc_seed =
      derive_seed(base_seed, {stream_tag::filter_assoc, static_cast<std::uint64_t>(timestep),
                              static_cast<std::uint64_t>(sensor_index)});
  const AssociationMarginals marg = association_marginals(table, cfg.assoc_samples, assoc_seed);

  for (int j = 0; j < m; ++j) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += marg.at(i, j + 1);
    out.assoc_prob[static_cast<std::size_t>(j)] = std::clamp(sum, 0.0, 1.0);
  }

  out.posterior.components.resize(static_cast<std::size_t>(n));
  const std::uint64_t resample_base =
      derive_seed(base_seed, {stream_tag::filter_resample, static_cast<std::uint64_t>(timestep),
                              static_cast<std::uint64_t>(sensor_index)});
  const double pd = sensor.detect_prob;
  const double inv_2b2 = 1.0 / (2.0 * sensor.bearing_std * sensor.bearing_std);
  const double inv_2r2 = 1.0 / (2.0 * sensor.range_std * sensor.range_std);
  const double norm = 1.0 / (2.0 * std::numbers::pi * sensor.bearing_std * sensor.range_std);

  exec::parallel_for(n, [&](std::int64_t i) {
    const BernoulliComponent& c = belief.components[static_cast<std::size_t>(i)];
    BernoulliComponent& pc = out.posterior.components[static_cast<std::size_t>(i)];
    pc.label = c.label;

    const double beta0 = table.at(static_cast<int>(i), 0);
    const double miss_post =
        c.existence * q[static_cast<std::size_t>(i)];  // joint mass: exists and missed
    const double a0 = beta0 > 0.0 ? marg.at(static_cast<int>(i), 0) * miss_post / beta0 : 0.0;
    double r_post = a0;
    for (int j = 1; j <= m; ++j) r_post += marg.at(static_cast<int>(i), j);
    pc.existence = std::clamp(r_post, 0.0, 1.0);

    // Mixture reweighting over the association events with posterior mass.
    const double c0 = q[static_cast<std::size_t>(i)] > 0.0
                          ? a0 / q[static_cast<std::size_t>(i)] * (1.0 - pd)
                          : 0.0;
    std::vector<std::pair<int, double>> active;  // measurement index, coefficient * pd
    for (int j = 0; j < m; ++j) {
      const double pij = marg.at(static_cast<int>(i), j + 1);
      const double dm = det_mass[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)];
      if (pij > 0.0 && dm > 0.0) active.emplace_back(j, pij / dm * pd);
    }

    const std::vector<Particle>& in = c.spatial.particles;
    std::vector<double> new_w(in.size());
    double new_total = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const double dx = sensor.px - in[k].state.px;
      const double dy = sensor.py - in[k].state.py;
      const double pred_range = std::sqrt(dx * dx + dy * dy);
      const double pred_bearing = std::atan2(dx, dy);
      double acc = c0;
      for (const auto& [j, coef] : active) {
        const Measurement& z = measurements[static_cast<std::size_t>(j)];
        double db = z.bearing - pred_bearing;
        if (db > std::numbers::pi) {
          db -= 2.0 * std::numbers::pi;
        } else if (db <= -std::numbers::pi) {
          db += 2.0 * std::numbers::pi;
        }
        const double dr = z.range - pred_range;
        const double quad = db * db * inv_2b2 + dr * dr * inv_2r2;
        if (quad < 60.0) acc += coef * norm * std::exp(-quad);
      }
      new_w[k] = in[k].weight * acc;
      new_total += new_w[k];
    }

    if (new_total > 0.0) {
      RandomStream rng(label_key_seed(resample_base, c.label));
      const double offset = rng.uniform01();
      std::vector<std::int32_t> idx =
          systematic_resample_indices(new_w.data(), new_w.size(), cfg.track_particles, offset);
      pc.spatial.particles.resize(static_cast<std::size_t>(cfg.track_particles));
      const double wk = 1.0 / static_cast<double>(cfg.track_particles);
      for (int k = 0; k < cfg.track_particles; ++k) {
        pc.spatial.particles[static_cast<std::size_t>(k)].state =
            in[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])].state;
        pc.spatial.particles[static_cast<std::size_t>(k)].weight = wk;
      }
    } else {
      // Posterior mass vanished (existence effectively zero); keep the prior
      // particles so the component stays well formed until pruning.
      pc.spatial = c.spatial;
    }
  });

  return out;
}

std::pair<LmbDensity, AssociationInput> update_all_sensors(
    const LmbDensity& belief, const std::vector<BearingRangeSensor>& sensors,
    const std::vector<std::vector<Measurement>>& measurements, const FilterConfig& cfg,
    int timestep, std::uint64_t base_seed) {
  if (sensors.size() != measurements.size()) {
    throw std::invalid_argument("update_all_sensors: measurement sets do not match sensors");
  }
  LmbDensity current = belief;
  AssociationInput assoc;
  assoc.assoc_prob.resize(sensors.size());
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    SensorUpdateResult r = update_sensor(current, sensors[s], measurements[s], cfg, timestep,
                                         static_cast<int>(s), base_seed);
    current = std::move(r.posterior);
    assoc.assoc_prob[s] = std::move(r.assoc_prob);
    if (current.empty()) {
      // Remaining sensors still contribute association input of all zeros.
      for (std::size_t s2 = s + 1; s2 < sensors.size(); ++s2) {
        assoc.assoc_prob[s2].assign(measurements[s2].size(), 0.0);
      }
      break;
    }
  }
  return {std::move(current), std::move(assoc)};
}

LmbDensity predict(const LmbDensity& posterior, const LmbDensity& birth, const NcvModel& model,
                   double survival_prob, int timestep, std::uint64_t base_seed) {
  std::set<std::pair<int, MeasurementTuple>> labels;
  for (const BernoulliComponent& c : posterior.components) {
    labels.emplace(c.label.birth_time, c.label.tuple);
  }
  for (const BernoulliComponent& c : birth.components) {
    if (!labels.emplace(c.label.birth_time, c.label.tuple).second) {
      throw std::runtime_error("predict: birth label collides with an existing track label");
    }
  }

  LmbDensity out;
  out.components.reserve(posterior.size() + birth.size());
  const std::uint64_t predict_base = derive_seed(
      base_seed, {stream_tag::filter_predict, static_cast<std::uint64_t>(timestep)});
  for (const BernoulliComponent& c : posterior.components) {
    BernoulliComponent nc;
    nc.label = c.label;
    nc.existence = c.existence * survival_prob;
    nc.spatial = c.spatial;
    predict_particles_kernel(model, label_key_seed(predict_base, c.label), nc.spatial);
    out.components.push_back(std::move(nc));
  }
  for (const BernoulliComponent& c : birth.components) {
    out.components.push_back(c);
  }
  return out;
}

LmbDensity prune_cap_belief(const LmbDensity& belief, const FilterConfig& cfg) {
  return prune_cap(belief, cfg.belief_prune, cfg.belief_cap);
}

std::vector<LabeledEstimate> extract_estimates(const LmbDensity& belief, double threshold) {
  std::vector<LabeledEstimate> out;
  for (const BernoulliComponent& c : belief.components) {
    if (c.existence > threshold) {
      out.push_back({c.label, c.spatial.mean(), c.existence});
    }
  }
  return out;
}

}  // namespace lmb

#include "lmb/adaptive_birth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include "lmb/kernels.hpp"
#include "lmb/rng.hpp"

namespace lmb {

namespace {

void validate_assoc(const BirthContext& ctx, const AssociationInput& assoc) {
  if (static_cast<int>(assoc.assoc_prob.size()) != ctx.num_sensors()) {
    throw std::invalid_argument("association input does not match sensor count");
  }
  for (int s = 0; s < ctx.num_sensors(); ++s) {
    const auto& probs = assoc.assoc_prob[static_cast<std::size_t>(s)];
    if (static_cast<int>(probs.size()) != ctx.num_measurements(s)) {
      throw std::invalid_argument("association input does not match measurement count");
    }
    for (double r : probs) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("association probability outside [0,1]");
      }
    }
  }
}

double chi2_quantile_2dof(double prob) {
  if (!(prob > 0.0)) throw std::invalid_argument("gate probability must be positive");
  if (prob >= 1.0) return std::numeric_limits<double>::infinity();
  return -2.0 * std::log1p(-prob);
}

std::uint64_t tuple_key_seed(std::uint64_t seed, const MeasurementTuple& J) {
  std::uint64_t s = mix_key(seed, J.size());
  for (MeasurementIndex j : J) s = mix_key(s, static_cast<std::uint32_t>(j));
  return s;
}

}  // namespace

GateMatrix::GateMatrix(std::vector<int> measurements_per_sensor)
    : counts_(std::move(measurements_per_sensor)) {
  const int v = static_cast<int>(counts_.size());
  offsets_.assign(static_cast<std::size_t>(v) * v, 0);
  std::size_t total = 0;
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) {
      offsets_[static_cast<std::size_t>(a) * v + b] = total;
      total += static_cast<std::size_t>(counts_[static_cast<std::size_t>(a)]) *
               static_cast<std::size_t>(counts_[static_cast<std::size_t>(b)]);
    }
  }
  bits_.assign(total, 0);
}

std::size_t GateMatrix::block_index(int a, int b) const {
  return offsets_[static_cast<std::size_t>(a) * counts_.size() + b];
}

void GateMatrix::set(int a, MeasurementIndex ja, int b, MeasurementIndex jb, bool pass) {
  if (a > b) {
    std::swap(a, b);
    std::swap(ja, jb);
  }
  const std::size_t mb = static_cast<std::size_t>(counts_[static_cast<std::size_t>(b)]);
  bits_[block_index(a, b) + static_cast<std::size_t>(ja - 1) * mb +
        static_cast<std::size_t>(jb - 1)] = pass ? 1 : 0;
}

bool GateMatrix::pass(int a, MeasurementIndex ja, int b, MeasurementIndex jb) const {
  if (ja == 0 || jb == 0) return true;
  if (a == b) return true;
  if (a > b) {
    std::swap(a, b);
    std::swap(ja, jb);
  }
  const std::size_t mb = static_cast<std::size_t>(counts_[static_cast<std::size_t>(b)]);
  return bits_[block_index(a, b) + static_cast<std::size_t>(ja - 1) * mb +
               static_cast<std::size_t>(jb - 1)] != 0;
}

SurvivorSets preprune(const AssociationInput& assoc, double tau_assoc) {
  SurvivorSets survivors(assoc.assoc_prob.size());
  for (std::size_t s = 0; s < assoc.assoc_prob.size(); ++s) {
    std::vector<MeasurementIndex>& out = survivors[s];
    out.push_back(0);
    const auto& probs = assoc.assoc_prob[s];
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (probs[j] <= tau_assoc) out.push_back(static_cast<MeasurementIndex>(j + 1));
    }
  }
  return survivors;
}

GateMatrix build_gate_matrix(const BirthContext& ctx, const BirthConfig& cfg, EvalStats& stats) {
  if (cfg.gate.mode == GateMode::off) {
    throw std::logic_error("build_gate_matrix called with gating off");
  }
  const int v = ctx.num_sensors();
  std::vector<int> counts(static_cast<std::size_t>(v));
  for (int s = 0; s < v; ++s) counts[static_cast<std::size_t>(s)] = ctx.num_measurements(s);
  GateMatrix gate(counts);

  if (cfg.gate.mode == GateMode::pseudo) {
    // Pairwise average pseudolikelihood on the two-sensor subproblem; each
    // estimate is a real evaluation and is charged to the computed counter.
    for (int a = 0; a < v; ++a) {
      for (int b = a + 1; b < v; ++b) {
        std::vector<BearingRangeSensor> pair_sensors = {
            (*ctx.sensors)[static_cast<std::size_t>(a)],
            (*ctx.sensors)[static_cast<std::size_t>(b)]};
        std::vector<std::vector<Measurement>> pair_meas = {
            (*ctx.measurements)[static_cast<std::size_t>(a)],
            (*ctx.measurements)[static_cast<std::size_t>(b)]};
        BirthContext pair_ctx;
        pair_ctx.sensors = &pair_sensors;
        pair_ctx.measurements = &pair_meas;
        pair_ctx.prior = ctx.prior;
        pair_ctx.timestep = ctx.timestep;
        pair_ctx.base_seed = derive_seed(ctx.base_seed, {0x6a7eULL, static_cast<std::uint64_t>(a),
                                                         static_cast<std::uint64_t>(b)});
        pair_ctx.num_particles = ctx.num_particles;
        MeasurementTuple pair_tuple(2, 0);
        for (MeasurementIndex ja = 1; ja <= counts[static_cast<std::size_t>(a)]; ++ja) {
          for (MeasurementIndex jb = 1; jb <= counts[static_cast<std::size_t>(b)]; ++jb) {
            pair_tuple[0] = ja;
            pair_tuple[1] = jb;
            const AvgPseudolikelihood est = estimate_avg_pseudolikelihood(pair_ctx, pair_tuple);
            ++stats.computed;
            gate.set(a, ja, b, jb, est.value >= cfg.gate.threshold);
          }
        }
      }
    }
    return gate;
  }

  // Geometric modes work on polar-inverted measurement positions.
  std::vector<std::vector<GateCandidate>> points(static_cast<std::size_t>(v));
  for (int s = 0; s < v; ++s) {
    const auto& zs = (*ctx.measurements)[static_cast<std::size_t>(s)];
    points[static_cast<std::size_t>(s)].resize(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j) {
      invert_measurement((*ctx.sensors)[static_cast<std::size_t>(s)], zs[j],
                         points[static_cast<std::size_t>(s)][j].x,
                         points[static_cast<std::size_t>(s)][j].y);
    }
  }
  const GatePairMode mode = cfg.gate.mode == GateMode::euclidean ? GatePairMode::euclidean
                                                                 : GatePairMode::mahalanobis;
  const double threshold = cfg.gate.mode == GateMode::euclidean
                               ? cfg.gate.threshold
                               : chi2_quantile_2dof(cfg.gate.threshold);
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) {
      const int na = counts[static_cast<std::size_t>(a)];
      const int nb = counts[static_cast<std::size_t>(b)];
      if (na == 0 || nb == 0) continue;
      std::vector<std::uint8_t> block(static_cast<std::size_t>(na) * nb);
      gate_pairs_kernel(points[static_cast<std::size_t>(a)].data(), na,
                        (*ctx.sensors)[static_cast<std::size_t>(a)],
                        (*ctx.measurements)[static_cast<std::size_t>(a)],
                        points[static_cast<std::size_t>(b)].data(), nb,
                        (*ctx.sensors)[static_cast<std::size_t>(b)],
                        (*ctx.measurements)[static_cast<std::size_t>(b)], mode, threshold,
                        block.data());
      for (MeasurementIndex ja = 1; ja <= na; ++ja) {
        for (MeasurementIndex jb = 1; jb <= nb; ++jb) {
          gate.set(a, ja, b, jb,
                   block[static_cast<std::size_t>(ja - 1) * nb + static_cast<std::size_t>(jb - 1)] != 0);
        }
      }
    }
  }
  return gate;
}

bool gate_check(const GateMatrix& gate, int s, MeasurementIndex j, const MeasurementTuple& J) {
  if (j == 0) return true;
  for (int o = 0; o < static_cast<int>(J.size()); ++o) {
    if (o == s) continue;
    const MeasurementIndex jo = J[static_cast<std::size_t>(o)];
    if (jo != 0 && !gate.pass(s, j, o, jo)) return false;
  }
  return true;
}

ConditionalWeights gibbs_conditional(PseudolikelihoodSource& source, const AssociationInput& assoc,
                                     const GateMatrix* gate, const SurvivorSets& survivors, int s,
                                     const MeasurementTuple& J, EvalStats& stats) {
  const std::vector<MeasurementIndex>& support = survivors[static_cast<std::size_t>(s)];
  const auto& probs = assoc.assoc_prob[static_cast<std::size_t>(s)];

  // Every pruned index is an evaluation this conditional no longer performs.
  stats.preprune_removed +=
      static_cast<std::int64_t>(probs.size() + 1 - support.size());

  ConditionalWeights cw;
  cw.support = &support;
  cw.weight.resize(support.size(), 0.0);

  MeasurementTuple work = J;
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    const MeasurementIndex j = support[idx];
    if (j != 0 && gate != nullptr && !gate_check(*gate, s, j, J)) {
      ++stats.gated_skips;
      continue;  // weight stays exactly zero, no evaluation
    }
    const double non_assoc = j == 0 ? 1.0 : 1.0 - probs[static_cast<std::size_t>(j - 1)];
    work[static_cast<std::size_t>(s)] = j;
    cw.weight[idx] = non_assoc * source.value(work);
  }
  work[static_cast<std::size_t>(s)] = J[static_cast<std::size_t>(s)];

  double total = 0.0;
  for (double w : cw.weight) total += w;
  if (!(total > 0.0)) {
    cw.weight.assign(support.size(), 0.0);
    cw.weight[0] = 1.0;  // support always starts with the miss index
    total = 1.0;
    cw.fallback = true;
  }
  cw.total = total;
  return cw;
}

std::vector<MeasurementTuple> run_birth_gibbs(
    PseudolikelihoodSource& source, const AssociationInput& assoc, const GateMatrix* gate,
    const SurvivorSets& survivors, const BirthConfig& cfg, int num_sensors, std::uint64_t seed,
    EvalStats& stats, const std::function<void(const MeasurementTuple&)>& on_sweep) {
  if (cfg.num_chains <= 0 || cfg.chain_length <= 0) {
    throw std::invalid_argument("num_chains and chain_length must be positive");
  }
  std::set<MeasurementTuple> visited;
  for (int chain = 0; chain < cfg.num_chains; ++chain) {
    RandomStream rng = substream(seed, {static_cast<std::uint64_t>(chain)});
    MeasurementTuple state = tuple_all_miss(num_sensors);
    visited.insert(state);
    for (int sweep = 0; sweep < cfg.chain_length; ++sweep) {
      for (int s = 0; s < num_sensors; ++s) {
        const ConditionalWeights cw =
            gibbs_conditional(source, assoc, gate, survivors, s, state, stats);
        const double u = rng.uniform01() * cw.total;
        double cum = 0.0;
        std::size_t chosen = cw.weight.size();
        std::size_t last_positive = 0;
        for (std::size_t idx = 0; idx < cw.weight.size(); ++idx) {
          if (cw.weight[idx] > 0.0) last_positive = idx;
          cum += cw.weight[idx];
          if (chosen == cw.weight.size() && u < cum) chosen = idx;
        }
        // Rounding can leave u at or past the accumulated total; fall back to
        // the last candidate that actually carries mass.
        if (chosen == cw.weight.size() || cw.weight[chosen] <= 0.0) chosen = last_positive;
        state[static_cast<std::size_t>(s)] = (*cw.support)[chosen];
        visited.insert(state);
      }
      if (on_sweep) on_sweep(state);
    }
  }
  return std::vector<MeasurementTuple>(visited.begin(), visited.end());
}

bool should_skip(const MeasurementTuple& J, const BirthConfig& cfg, EvalStats& stats) {
  if (cfg.max_missed < 0) return false;
  if (tuple_missed_count(J) > cfg.max_missed) {
    ++stats.component_skips;
    return true;
  }
  return false;
}

LmbDensity construct_birth_lmb(const BirthContext& ctx, PseudolikelihoodSource& source,
                               const AssociationInput& assoc,
                               const std::vector<MeasurementTuple>& tuples, const BirthConfig& cfg,
                               const NcvModel& model, EvalStats& stats) {
  std::vector<const MeasurementTuple*> surviving;
  surviving.reserve(tuples.size());
  for (const MeasurementTuple& J : tuples) {
    if (!should_skip(J, cfg, stats)) surviving.push_back(&J);
  }
  LmbDensity out;
  if (surviving.empty()) return out;

  // Birth weight r_U * avg pseudolikelihood per tuple, normalized over the
  // post-skip set. The pseudolikelihood is looked up once here and once when
  // the spatial posterior is materialized below.
  std::vector<double> weights(surviving.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < surviving.size(); ++i) {
    const MeasurementTuple& J = *surviving[i];
    double r_u = 1.0;
    for (int s = 0; s < static_cast<int>(J.size()); ++s) {
      const MeasurementIndex j = J[static_cast<std::size_t>(s)];
      if (j != 0) {
        r_u *= 1.0 - assoc.assoc_prob[static_cast<std::size_t>(s)][static_cast<std::size_t>(j - 1)];
      }
    }
    weights[i] = r_u * source.value(J);
    denom += weights[i];
  }
  if (!(denom > 0.0)) {
    std::clog << "construct_birth_lmb: all birth weights are zero at step " << ctx.timestep
              << "; returning empty birth density\n";
    return out;
  }

  for (std::size_t i = 0; i < surviving.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    const MeasurementTuple& J = *surviving[i];
    const AvgPseudolikelihood full = source.full(J);
    if (full.degenerate || !(full.value > 0.0)) continue;

    BernoulliComponent comp;
    comp.label.birth_time = ctx.timestep + 1;
    comp.label.tuple = J;
    const double r_hat = weights[i] / denom;
    comp.existence = std::min(cfg.r_b_max, r_hat * cfg.lambda_b);

    const std::uint64_t resample_seed =
        tuple_key_seed(derive_seed(ctx.base_seed, {stream_tag::birth_resample,
                                                   static_cast<std::uint64_t>(ctx.timestep)}),
                       J);
    RandomStream resample_rng(resample_seed);
    ParticleSet spatial = spatial_posterior(full, cfg.spatial_particles, resample_rng);
    const std::uint64_t predict_seed =
        tuple_key_seed(derive_seed(ctx.base_seed, {stream_tag::birth_predict,
                                                   static_cast<std::uint64_t>(ctx.timestep)}),
                       J);
    comp.spatial = predict_birth_spatial(model, spatial, predict_seed);
    out.components.push_back(std::move(comp));
  }
  return out;
}

LmbDensity prune_cap(const LmbDensity& density, double prune_threshold, int cap) {
  LmbDensity out;
  for (const BernoulliComponent& c : density.components) {
    if (c.existence >= prune_threshold) out.components.push_back(c);
  }
  if (cap >= 0 && static_cast<int>(out.components.size()) > cap) {
    std::vector<std::size_t> order(out.components.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const BernoulliComponent& ca = out.components[a];
      const BernoulliComponent& cb = out.components[b];
      if (ca.existence != cb.existence) return ca.existence > cb.existence;
      return ca.label < cb.label;
    });
    std::vector<bool> keep(out.components.size(), false);
    for (int k = 0; k < cap; ++k) keep[order[static_cast<std::size_t>(k)]] = true;
    LmbDensity capped;
    for (std::size_t i = 0; i < out.components.size(); ++i) {
      if (keep[i]) capped.components.push_back(std::move(out.components[i]));
    }
    return capped;
  }
  return out;
}

std::pair<LmbDensity, EvalStats> adaptive_birth_step(const BirthContext& ctx,
                                                     const AssociationInput& assoc,
                                                     const BirthConfig& cfg,
                                                     const NcvModel& model,
                                                     BirthTimings* timings) {
  using clock = std::chrono::steady_clock;
  validate_assoc(ctx, assoc);
  EvalStats stats;
  EstimatingSource source(ctx, cfg.memoize, stats);

  const clock::time_point sample_start = clock::now();
  const SurvivorSets survivors = preprune(assoc, cfg.tau_assoc);

  std::optional<GateMatrix> gate;
  if (cfg.gate.mode != GateMode::off) {
    gate.emplace(build_gate_matrix(ctx, cfg, stats));
  }

  const std::uint64_t chain_seed = derive_seed(
      ctx.base_seed, {stream_tag::birth_chain, static_cast<std::uint64_t>(ctx.timestep)});
  const std::vector<MeasurementTuple> tuples =
      run_birth_gibbs(source, assoc, gate ? &*gate : nullptr, survivors, cfg, ctx.num_sensors(),
                      chain_seed, stats);
  const clock::time_point construct_start = clock::now();

  LmbDensity birth = construct_birth_lmb(ctx, source, assoc, tuples, cfg, model, stats);
  birth = prune_cap(birth, cfg.prune_threshold, cfg.cap);

  if (timings) {
    timings->sampling_seconds =
        std::chrono::duration<double>(construct_start - sample_start).count();
    timings->construction_seconds =
        std::chrono::duration<double>(clock::now() - construct_start).count();
  }
  return {std::move(birth), stats};
}

}  // namespace lmb

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "lmb/filter.hpp"
#include "lmb/models.hpp"
#include "lmb/rng.hpp"

using namespace lmb;

namespace {

AssociationTable make_table(int n, int m, std::vector<double> beta) {
  AssociationTable t;
  t.n = n;
  t.m = m;
  t.beta = std::move(beta);
  return t;
}

BernoulliComponent delta_component(Label label, double existence, const KinematicState& x,
                                   int n_particles) {
  BernoulliComponent c;
  c.label = std::move(label);
  c.existence = existence;
  const double w = 1.0 / static_cast<double>(n_particles);
  c.spatial.particles.assign(static_cast<std::size_t>(n_particles), Particle{x, w});
  return c;
}

BearingRangeSensor test_sensor() {
  BearingRangeSensor s;
  s.id = 1;
  s.px = 0.0;
  s.py = 0.0;
  s.bearing_std = 0.1;
  s.range_std = 5.0;
  s.detect_prob = 0.9;
  s.clutter_rate = 5.0;
  s.range_max = 1000.0;
  return s;
}

double max_marginal_diff(const AssociationMarginals& a, const AssociationMarginals& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.p.size(); ++k) {
    worst = std::max(worst, std::abs(a.p[k] - b.p[k]));
  }
  return worst;
}

}  // namespace

TEST_CASE("exact marginals: single track, single measurement") {
  const AssociationTable t = make_table(1, 1, {0.4, 0.6});
  const AssociationMarginals m = association_marginals_exact(t);
  CHECK(m.at(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(m.at(0, 1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("exact marginals: two tracks competing for one measurement") {
  // events: both miss (0.4 * 0.5), track0 takes it (0.6 * 0.5),
  // track1 takes it (0.4 * 0.8); the measurement is given to at most one
  const AssociationTable t = make_table(2, 1, {0.4, 0.6, 0.5, 0.8});
  const AssociationMarginals m = association_marginals_exact(t);
  const double total = 0.4 * 0.5 + 0.6 * 0.5 + 0.4 * 0.8;
  CHECK(m.at(0, 1) == doctest::Approx(0.6 * 0.5 / total).epsilon(1e-12));
  CHECK(m.at(1, 1) == doctest::Approx(0.4 * 0.8 / total).epsilon(1e-12));
  CHECK(m.at(0, 0) == doctest::Approx((0.4 * 0.5 + 0.4 * 0.8) / total).epsilon(1e-12));
  CHECK(m.at(1, 0) == doctest::Approx((0.4 * 0.5 + 0.6 * 0.5) / total).epsilon(1e-12));
  // each track's marginal row is a distribution
  CHECK(m.at(0, 0) + m.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.at(1, 0) + m.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact marginals: massless table falls back to all-miss") {
  const AssociationTable t = make_table(2, 1, {0.0, 0.0, 0.5, 0.8});
  const AssociationMarginals m = association_marginals_exact(t);
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(1, 0) == 1.0);
  CHECK(m.at(0, 1) == 0.0);
  CHECK(m.at(1, 1) == 0.0);
}

TEST_CASE("exact marginals: measurement columns never exceed unit mass") {
  RandomStream rng(618);
  for (int trial = 0; trial < 20; ++trial) {
    AssociationTable t;
    t.n = 4;
    t.m = 3;
    t.beta.resize(16);
    for (double& b : t.beta) b = 0.05 + rng.uniform01();
    const AssociationMarginals m = association_marginals_exact(t);
    for (int j = 1; j <= t.m; ++j) {
      double col = 0.0;
      for (int i = 0; i < t.n; ++i) col += m.at(i, j);
      CHECK(col <= 1.0 + 1e-12);
    }
    for (int i = 0; i < t.n; ++i) {
      double row = 0.0;
      for (int j = 0; j <= t.m; ++j) row += m.at(i, j);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampled marginals agree with enumeration") {
  RandomStream rng(271828);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    AssociationTable t;
    t.n = 3;
    t.m = 3;
    t.beta.resize(12);
    for (double& b : t.beta) b = 0.05 + rng.uniform01();
    const AssociationMarginals exact = association_marginals_exact(t);
    const AssociationMarginals sampled =
        association_marginals_gibbs(t, 10000, 1000 + static_cast<std::uint64_t>(trial));
    worst = std::max(worst, max_marginal_diff(exact, sampled));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("sampled marginals are deterministic in the seed") {
  AssociationTable t = make_table(2, 2, {0.3, 0.9, 0.1, 0.7, 0.2, 0.5});
  const AssociationMarginals a = association_marginals_gibbs(t, 200, 42);
  const AssociationMarginals b = association_marginals_gibbs(t, 200, 42);
  CHECK(a.p == b.p);
}

TEST_CASE("marginal dispatch: exact when small, sampled when wide") {
  AssociationTable small = make_table(2, 2, {0.3, 0.9, 0.1, 0.7, 0.2, 0.5});
  CHECK(association_marginals(small, 50, 7).p == association_marginals_exact(small).p);

  AssociationTable wide;
  wide.n = 7;
  wide.m = 1;
  wide.beta.assign(14, 0.0);
  RandomStream rng(5150);
  for (double& b : wide.beta) b = 0.05 + rng.uniform01();
  CHECK(association_marginals(wide, 50, 7).p == association_marginals_gibbs(wide, 50, 7).p);
}

TEST_CASE("update_sensor: empty scan gives the closed-form miss posterior") {
  LmbDensity belief;
  belief.components.push_back(
      delta_component(Label{1, {1}}, 0.9, KinematicState{100.0, 0.0, 200.0, 0.0}, 50));
  const BearingRangeSensor sensor = test_sensor();
  FilterConfig cfg;
  cfg.track_particles = 50;

  const SensorUpdateResult r = update_sensor(belief, sensor, {}, cfg, 0, 0, 99);
  CHECK(r.assoc_prob.empty());
  REQUIRE(r.posterior.size() == 1);
  // r (1 - p_D) / (1 - r p_D) with r = 0.9, p_D = 0.95 evaluates to 0.31034...
  const BearingRangeSensor strong = [] {
    BearingRangeSensor s = test_sensor();
    s.detect_prob = 0.95;
    return s;
  }();
  const SensorUpdateResult r2 = update_sensor(belief, strong, {}, cfg, 0, 0, 99);
  const double expected = 0.9 * (1.0 - 0.95) / (1.0 - 0.9 * 0.95);
  CHECK(r2.posterior.components[0].existence == doctest::Approx(expected).epsilon(1e-9));
  CHECK(r2.posterior.components[0].existence ==
        doctest::Approx(0.3103448275862069).epsilon(1e-9));
  // the generic-sensor variant follows the same law at its own p_D
  const double expected_weak = 0.9 * (1.0 - 0.9) / (1.0 - 0.9 * 0.9);
  CHECK(r.posterior.components[0].existence == doctest::Approx(expected_weak).epsilon(1e-9));
}

TEST_CASE("update_sensor: delta-particle single-track update matches hand algebra") {
  const KinematicState x0{100.0, 0.0, 200.0, 0.0};
  const double r = 0.5;
  LmbDensity belief;
  belief.components.push_back(delta_component(Label{1, {1}}, r, x0, 40));
  const BearingRangeSensor sensor = test_sensor();
  const Measurement z = observe(sensor, x0);  // noiseless: likelihood at its peak
  FilterConfig cfg;
  cfg.track_particles = 40;

  const SensorUpdateResult res = update_sensor(belief, sensor, {z}, cfg, 3, 0, 1234);

  const double pd = sensor.detect_prob;
  const double g_peak = 1.0 / (2.0 * std::numbers::pi * sensor.bearing_std * sensor.range_std);
  const double kappa = clutter_intensity(sensor, z);
  const double beta0 = 1.0 - r * pd;
  const double beta1 = r * pd * g_peak / kappa;
  const double total = beta0 + beta1;

  REQUIRE(res.assoc_prob.size() == 1);
  CHECK(res.assoc_prob[0] == doctest::Approx(beta1 / total).epsilon(1e-12));

  const double p_miss = beta0 / total;
  const double a0 = p_miss * r * (1.0 - pd) / beta0;
  REQUIRE(res.posterior.size() == 1);
  CHECK(res.posterior.components[0].existence ==
        doctest::Approx(a0 + beta1 / total).epsilon(1e-12));
  CHECK(res.posterior.components[0].label == belief.components[0].label);
  // delta particles stay put through resampling
  for (const Particle& p : res.posterior.components[0].spatial.particles) {
    CHECK(p.state.px == x0.px);
    CHECK(p.state.py == x0.py);
    CHECK(p.weight == doctest::Approx(1.0 / 40.0).epsilon(1e-12));
  }
}

TEST_CASE("update_sensor: posterior spatial mass moves toward the detection") {
  // two particle clusters; the measurement sits on cluster A
  const KinematicState a{100.0, 0.0, 200.0, 0.0};
  const KinematicState b{-300.0, 0.0, -250.0, 0.0};
  BernoulliComponent c;
  c.label = Label{1, {1}};
  c.existence = 0.8;
  for (int k = 0; k < 40; ++k) {
    c.spatial.particles.push_back(Particle{k % 2 ? a : b, 1.0 / 80.0});
  }
  LmbDensity belief;
  belief.components.push_back(std::move(c));

  const BearingRangeSensor sensor = test_sensor();
  const Measurement z = observe(sensor, a);
  FilterConfig cfg;
  cfg.track_particles = 200;

  const SensorUpdateResult res = update_sensor(belief, sensor, {z}, cfg, 0, 0, 7);
  REQUIRE(res.posterior.size() == 1);
  int at_a = 0;
  for (const Particle& p : res.posterior.components[0].spatial.particles) {
    if (p.state.px == a.px) ++at_a;
  }
  CHECK(at_a > 190);  // the far cluster keeps only the missed-detection sliver
  CHECK(res.posterior.components[0].existence > 0.9);
}

TEST_CASE("update_sensor: empty belief yields zero association input") {
  const LmbDensity belief;
  const BearingRangeSensor sensor = test_sensor();
  FilterConfig cfg;
  const std::vector<Measurement> scan = {Measurement{0.1, 50.0}, Measurement{-0.4, 90.0}};
  const SensorUpdateResult res = update_sensor(belief, sensor, scan, cfg, 0, 0, 1);
  CHECK(res.posterior.empty());
  CHECK(res.assoc_prob == std::vector<double>{0.0, 0.0});
}

TEST_CASE("update_sensor: association probabilities stay within [0,1]") {
  RandomStream rng(808);
  LmbDensity belief;
  for (int i = 0; i < 3; ++i) {
    const KinematicState x{50.0 + 130.0 * i, 2.0, 80.0 + 90.0 * i, -1.0};
    belief.components.push_back(
        delta_component(Label{1, {static_cast<MeasurementIndex>(i + 1)}}, 0.6, x, 30));
  }
  const BearingRangeSensor sensor = test_sensor();
  std::vector<Measurement> scan;
  for (int j = 0; j < 4; ++j) {
    scan.push_back(Measurement{-0.8 + 0.5 * j + 0.05 * rng.uniform01(),
                               60.0 + 90.0 * j + rng.uniform01()});
  }
  FilterConfig cfg;
  cfg.track_particles = 30;
  const SensorUpdateResult res = update_sensor(belief, sensor, scan, cfg, 2, 1, 55);
  REQUIRE(res.assoc_prob.size() == 4);
  for (double p : res.assoc_prob) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  for (const BernoulliComponent& comp : res.posterior.components) {
    CHECK(comp.existence >= 0.0);
    CHECK(comp.existence <= 1.0);
  }
}

TEST_CASE("update_all_sensors equals manual sequential application") {
  const KinematicState x0{120.0, 1.0, 260.0, -2.0};
  LmbDensity belief;
  belief.components.push_back(delta_component(Label{2, {1, 0}}, 0.7, x0, 30));

  BearingRangeSensor s0 = test_sensor();
  BearingRangeSensor s1 = test_sensor();
  s1.id = 2;
  s1.px = 500.0;
  s1.py = -200.0;
  const std::vector<BearingRangeSensor> sensors = {s0, s1};
  const std::vector<std::vector<Measurement>> scans = {{observe(s0, x0)}, {}};
  FilterConfig cfg;
  cfg.track_particles = 30;

  const auto [joint, assoc] = update_all_sensors(belief, sensors, scans, cfg, 4, 321);

  const SensorUpdateResult first = update_sensor(belief, s0, scans[0], cfg, 4, 0, 321);
  const SensorUpdateResult second = update_sensor(first.posterior, s1, scans[1], cfg, 4, 1, 321);

  REQUIRE(joint.size() == 1);
  CHECK(joint.components[0].existence == second.posterior.components[0].existence);
  REQUIRE(assoc.assoc_prob.size() == 2);
  CHECK(assoc.assoc_prob[0] == first.assoc_prob);
  CHECK(assoc.assoc_prob[1].empty());

  std::vector<std::vector<Measurement>> wrong = {{observe(s0, x0)}};
  CHECK_THROWS_AS(update_all_sensors(belief, sensors, wrong, cfg, 4, 321),
                  std::invalid_argument);
}

TEST_CASE("update_all_sensors: empty belief reports zeros for every scan") {
  const LmbDensity belief;
  const std::vector<BearingRangeSensor> sensors = {test_sensor(), test_sensor()};
  const std::vector<std::vector<Measurement>> scans = {{Measurement{0.0, 10.0}},
                                                       {Measurement{0.2, 20.0}, Measurement{0.3, 30.0}}};
  FilterConfig cfg;
  const auto [post, assoc] = update_all_sensors(belief, sensors, scans, cfg, 0, 5);
  CHECK(post.empty());
  REQUIRE(assoc.assoc_prob.size() == 2);
  CHECK(assoc.assoc_prob[0] == std::vector<double>{0.0});
  CHECK(assoc.assoc_prob[1] == std::vector<double>(2, 0.0));
}

TEST_CASE("predict: survival discount, motion, and birth union") {
  const KinematicState x0{10.0, 3.0, 20.0, -1.5};
  LmbDensity posterior;
  posterior.components.push_back(delta_component(Label{1, {1}}, 0.8, x0, 25));

  LmbDensity birth;
  birth.components.push_back(
      delta_component(Label{3, {0, 2}}, 0.4, KinematicState{500.0, 0.0, 600.0, 0.0}, 25));

  const NcvModel drift{2.0, 0.0, 0.0};  // no acceleration noise: pure shift
  const LmbDensity out = predict(posterior, birth, drift, 0.99, 2, 777);

  REQUIRE(out.size() == 2);
  CHECK(out.components[0].label == Label{1, {1}});
  CHECK(out.components[0].existence == doctest::Approx(0.8 * 0.99).epsilon(1e-12));
  for (const Particle& p : out.components[0].spatial.particles) {
    CHECK(p.state.px == doctest::Approx(10.0 + 3.0 * 2.0).epsilon(1e-12));
    CHECK(p.state.py == doctest::Approx(20.0 - 1.5 * 2.0).epsilon(1e-12));
    CHECK(p.state.vx == doctest::Approx(3.0).epsilon(1e-12));
  }
  // birth components are already advanced; they pass through untouched
  CHECK(out.components[1].label == Label{3, {0, 2}});
  CHECK(out.components[1].existence == 0.4);
  CHECK(out.components[1].spatial.particles[0].state.px == 500.0);

  const LmbDensity repeat = predict(posterior, birth, drift, 0.99, 2, 777);
  CHECK(repeat.components[0].spatial.particles[0].state.px ==
        out.components[0].spatial.particles[0].state.px);
}

TEST_CASE("predict rejects label collisions") {
  LmbDensity posterior;
  posterior.components.push_back(
      delta_component(Label{1, {1}}, 0.8, KinematicState{0.0, 0.0, 10.0, 0.0}, 5));
  LmbDensity birth;
  birth.components.push_back(
      delta_component(Label{1, {1}}, 0.3, KinematicState{5.0, 0.0, 5.0, 0.0}, 5));
  const NcvModel model{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(predict(posterior, birth, model, 0.99, 0, 1), std::runtime_error);
}

TEST_CASE("prune_cap_belief applies the filter thresholds") {
  LmbDensity belief;
  belief.components.push_back(
      delta_component(Label{1, {1}}, 0.5, KinematicState{0.0, 0.0, 0.0, 0.0}, 2));
  belief.components.push_back(
      delta_component(Label{1, {2}}, 1e-4, KinematicState{0.0, 0.0, 0.0, 0.0}, 2));
  FilterConfig cfg;  // belief_prune 1e-3, cap 100
  const LmbDensity out = prune_cap_belief(belief, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out.components[0].label == Label{1, {1}});
}

TEST_CASE("extract_estimates keeps only existence strictly above threshold") {
  const KinematicState x{7.0, 1.0, -3.0, 2.0};
  LmbDensity belief;
  belief.components.push_back(delta_component(Label{1, {1}}, 0.5, x, 4));
  belief.components.push_back(delta_component(Label{1, {2}}, 0.5 + 1e-9, x, 4));
  belief.components.push_back(delta_component(Label{2, {1}}, 0.99, x, 4));

  const std::vector<LabeledEstimate> est = extract_estimates(belief, 0.5);
  REQUIRE(est.size() == 2);
  CHECK(est[0].label == Label{1, {2}});
  CHECK(est[1].label == Label{2, {1}});
  CHECK(est[1].existence == 0.99);
  CHECK(est[0].state.px == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(est[0].state.vy == doctest::Approx(2.0).epsilon(1e-12));

  CHECK(extract_estimates(belief, 0.999).empty());
}

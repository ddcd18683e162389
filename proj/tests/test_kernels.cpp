#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "lmb/exec.hpp"
#include "lmb/kernels.hpp"
#include "lmb/models.hpp"
#include "lmb/rng.hpp"

using namespace lmb;

namespace {

constexpr double kPi = 3.14159265358979323846;

BearingRangeSensor make_sensor(int id, double px, double py) {
  BearingRangeSensor s;
  s.id = id;
  s.px = px;
  s.py = py;
  s.bearing_std = 0.25;
  s.range_std = 10.0;
  s.detect_prob = 0.95;
  s.clutter_rate = 10.0;
  s.range_max = 20000.0;
  return s;
}

DetectionFactor make_factor(const BearingRangeSensor& s, const Measurement& z) {
  DetectionFactor f;
  f.sx = s.px;
  f.sy = s.py;
  f.zb = z.bearing;
  f.zr = z.range;
  f.inv_2b2 = 1.0 / (2.0 * s.bearing_std * s.bearing_std);
  f.inv_2r2 = 1.0 / (2.0 * s.range_std * s.range_std);
  f.log_gain = std::log(s.detect_prob) - std::log(clutter_intensity(s, z)) -
               std::log(2.0 * kPi * s.bearing_std * s.range_std);
  return f;
}

bool identical(const Particle& a, const Particle& b) {
  return std::memcmp(&a, &b, sizeof(Particle)) == 0;
}

BirthWeightProblem make_problem(const std::vector<DetectionFactor>& factors, int count,
                                std::uint64_t seed) {
  BirthWeightProblem p;
  p.factors = factors.data();
  p.num_factors = static_cast<int>(factors.size());
  p.miss_log_sum = 2.0 * std::log(0.05);
  p.proposal.all_miss = factors.empty();
  if (!factors.empty()) {
    p.proposal.sx = factors[0].sx;
    p.proposal.sy = factors[0].sy;
    p.proposal.zb = factors[0].zb;
    p.proposal.zr = factors[0].zr;
    p.proposal.bearing_std = 0.25;
    p.proposal.range_std = 10.0;
    p.proposal.log_norm = -std::log(2.0 * kPi * 0.25 * 10.0);
  }
  p.region = Region{0.0, 10000.0, 0.0, 10000.0};
  p.log_area = std::log(p.region.area());
  p.velocity_std = 35.0;
  p.seed = seed;
  p.count = count;
  return p;
}

}  // namespace

TEST_CASE("detection_log_factor equals the direct likelihood ratio") {
  const BearingRangeSensor s = make_sensor(1, 0.0, 0.0);
  const KinematicState x{3000.0, 0.0, 4000.0, 0.0};
  Measurement z = observe(s, x);
  z.bearing = wrap_angle(z.bearing + 0.1);
  z.range += 12.0;
  const DetectionFactor f = make_factor(s, z);
  const double direct =
      std::log(s.detect_prob) + log_likelihood(s, z, x) - std::log(clutter_intensity(s, z));
  CHECK(detection_log_factor(f, x.px, x.py) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("detection_log_factor wraps the bearing residual") {
  const BearingRangeSensor s = make_sensor(1, 0.0, 0.0);
  // target almost exactly behind: predicted bearing near +pi, measurement
  // near -pi; naive difference is ~2 pi, wrapped residual is tiny
  const KinematicState x{-1.0, 0.0, -5000.0, 0.0};
  Measurement z = observe(s, x);
  const double pred = z.bearing;
  z.bearing = wrap_angle(pred + 0.02);
  const DetectionFactor f = make_factor(s, z);
  const double at_peak = make_factor(s, observe(s, x)).log_gain;
  const double got = detection_log_factor(f, x.px, x.py);
  CHECK(got == doctest::Approx(at_peak - 0.02 * 0.02 * f.inv_2b2).epsilon(1e-9));
}

TEST_CASE("invert_measurement undoes observe") {
  const BearingRangeSensor s = make_sensor(1, 250.0, -700.0);
  const KinematicState x{4200.0, 0.0, 1300.0, 0.0};
  const Measurement z = observe(s, x);
  double px = 0.0, py = 0.0;
  invert_measurement(s, z, px, py);
  CHECK(px == doctest::Approx(x.px).epsilon(1e-9));
  CHECK(py == doctest::Approx(x.py).epsilon(1e-9));
}

TEST_CASE("birth_weight_kernel: serial and parallel agree bitwise") {
  const BearingRangeSensor sa = make_sensor(1, 0.0, 0.0);
  const BearingRangeSensor sb = make_sensor(2, 10000.0, 0.0);
  const KinematicState x{3000.0, 0.0, 4000.0, 0.0};
  const std::vector<DetectionFactor> factors{make_factor(sa, observe(sa, x)),
                                             make_factor(sb, observe(sb, x))};
  const BirthWeightProblem p = make_problem(factors, 5000, 99);

  std::vector<Particle> serial(5000), parallel(5000);
  birth_weight_kernel_serial(p, serial.data());
  for (int threads : {1, 2, 4, 8}) {
    exec::set_max_threads(threads);
    birth_weight_kernel(p, parallel.data());
    for (std::size_t i = 0; i < serial.size(); ++i) REQUIRE(identical(serial[i], parallel[i]));
  }
  exec::set_max_threads(0);

  double total = 0.0;
  for (const Particle& q : serial) total += q.weight;
  CHECK(total > 0.0);
}

TEST_CASE("birth_weight_kernel: all-miss case samples the prior") {
  const BirthWeightProblem p = make_problem({}, 2000, 7);
  std::vector<Particle> out(2000);
  birth_weight_kernel(p, out.data());
  const double expected = std::exp(p.miss_log_sum);
  for (const Particle& q : out) {
    REQUIRE(p.region.contains(q.state.px, q.state.py));
    // psi has no detection factors, proposal equals prior: weight = (1-pd)^miss
    REQUIRE(q.weight == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("likelihood_table_kernel matches a direct evaluation") {
  const BearingRangeSensor s = make_sensor(1, 0.0, 0.0);
  RandomStream rng(31);
  LmbDensity density;
  for (int c = 0; c < 3; ++c) {
    BernoulliComponent comp;
    comp.label = Label{0, {static_cast<MeasurementIndex>(c + 1)}};
    comp.existence = 0.5;
    for (int k = 0; k < 50; ++k) {
      Particle p;
      p.state = {rng.uniform(1000.0, 9000.0), rng.normal(0.0, 10.0),
                 rng.uniform(1000.0, 9000.0), rng.normal(0.0, 10.0)};
      p.weight = 1.0 / 50.0;
      comp.spatial.particles.push_back(p);
    }
    density.components.push_back(comp);
  }
  std::vector<Measurement> zs;
  for (int j = 0; j < 4; ++j) zs.push_back({rng.uniform(-kPi, kPi), rng.uniform(100.0, 12000.0)});

  std::vector<double> miss, det;
  likelihood_table_kernel_serial(density, s, zs, miss, det);

  for (int threads : {1, 2, 4}) {
    exec::set_max_threads(threads);
    std::vector<double> miss_p, det_p;
    likelihood_table_kernel(density, s, zs, miss_p, det_p);
    REQUIRE(miss_p.size() == miss.size());
    REQUIRE(det_p.size() == det.size());
    for (std::size_t i = 0; i < miss.size(); ++i) REQUIRE(miss_p[i] == miss[i]);
    for (std::size_t i = 0; i < det.size(); ++i) REQUIRE(det_p[i] == det[i]);
  }
  exec::set_max_threads(0);

  for (std::size_t i = 0; i < density.components.size(); ++i) {
    double expect_miss = 0.0;
    for (const Particle& p : density.components[i].spatial.particles) {
      expect_miss += p.weight * (1.0 - s.detect_prob);
    }
    CHECK(miss[i] == doctest::Approx(expect_miss).epsilon(1e-12));
    for (std::size_t j = 0; j < zs.size(); ++j) {
      double expect = 0.0;
      for (const Particle& p : density.components[i].spatial.particles) {
        expect += p.weight * s.detect_prob * likelihood(s, zs[j], p.state);
      }
      CHECK(det[i * zs.size() + j] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("predict_particles_kernel: thread-count invariant and mean-preserving") {
  const NcvModel model{1.0, 5.0, 5.0};
  RandomStream rng(41);
  ParticleSet base;
  for (int k = 0; k < 4000; ++k) {
    Particle p;
    p.state = {rng.uniform(0.0, 100.0), 10.0, rng.uniform(0.0, 100.0), -5.0};
    p.weight = 1.0 / 4000.0;
    base.particles.push_back(p);
  }
  ParticleSet serial = base;
  predict_particles_kernel_serial(model, 123, serial);

  for (int threads : {1, 2, 4}) {
    exec::set_max_threads(threads);
    ParticleSet par = base;
    predict_particles_kernel(model, 123, par);
    for (std::size_t i = 0; i < serial.size(); ++i) {
      REQUIRE(identical(serial.particles[i], par.particles[i]));
    }
  }
  exec::set_max_threads(0);

  double mean_px = 0.0;
  for (std::size_t i = 0; i < serial.size(); ++i) mean_px += serial.particles[i].state.px;
  double base_px = 0.0;
  for (const Particle& p : base.particles) base_px += p.state.px;
  // px moves by vx*dt = 10 on average; noise mean is zero
  CHECK(mean_px / 4000.0 == doctest::Approx(base_px / 4000.0 + 10.0).epsilon(0.01));
}

TEST_CASE("gate_pairs_kernel: serial/parallel identity and predicate correctness") {
  const BearingRangeSensor sa = make_sensor(1, 0.0, 0.0);
  const BearingRangeSensor sb = make_sensor(2, 10000.0, 10000.0);
  RandomStream rng(53);
  const int na = 9, nb = 7;
  std::vector<Measurement> za, zb;
  std::vector<GateCandidate> pa, pb;
  for (int i = 0; i < na; ++i) {
    Measurement z{rng.uniform(-kPi, kPi), rng.uniform(500.0, 14000.0)};
    za.push_back(z);
    GateCandidate c;
    invert_measurement(sa, z, c.x, c.y);
    pa.push_back(c);
  }
  for (int k = 0; k < nb; ++k) {
    Measurement z{rng.uniform(-kPi, kPi), rng.uniform(500.0, 14000.0)};
    zb.push_back(z);
    GateCandidate c;
    invert_measurement(sb, z, c.x, c.y);
    pb.push_back(c);
  }

  for (GatePairMode mode : {GatePairMode::euclidean, GatePairMode::mahalanobis}) {
    const double threshold = mode == GatePairMode::euclidean ? 4000.0 : 9.21;
    std::vector<std::uint8_t> serial(static_cast<std::size_t>(na) * nb);
    gate_pairs_kernel_serial(pa.data(), na, sa, za, pb.data(), nb, sb, zb, mode, threshold,
                             serial.data());
    for (int threads : {1, 4}) {
      exec::set_max_threads(threads);
      std::vector<std::uint8_t> par(serial.size());
      gate_pairs_kernel(pa.data(), na, sa, za, pb.data(), nb, sb, zb, mode, threshold, par.data());
      REQUIRE(par == serial);
    }
    exec::set_max_threads(0);

    if (mode == GatePairMode::euclidean) {
      for (int i = 0; i < na; ++i) {
        for (int k = 0; k < nb; ++k) {
          const double dx = pa[static_cast<std::size_t>(i)].x - pb[static_cast<std::size_t>(k)].x;
          const double dy = pa[static_cast<std::size_t>(i)].y - pb[static_cast<std::size_t>(k)].y;
          const bool expect = std::sqrt(dx * dx + dy * dy) < threshold;
          CHECK(static_cast<bool>(serial[static_cast<std::size_t>(i) * nb + k]) == expect);
        }
      }
    }
  }
}

TEST_CASE("euclidean gate boundary is strict") {
  const BearingRangeSensor sa = make_sensor(1, 0.0, 0.0);
  const BearingRangeSensor sb = make_sensor(2, 0.0, 0.0);
  // positions (0,0) and (300,400): distance exactly 500
  const GateCandidate a{0.0, 0.0};
  const GateCandidate b{300.0, 400.0};
  const std::vector<Measurement> za{{0.0, 0.0}}, zb{{0.0, 500.0}};
  std::uint8_t out = 9;
  gate_pairs_kernel_serial(&a, 1, sa, za, &b, 1, sb, zb, GatePairMode::euclidean, 500.0, &out);
  CHECK(out == 0);  // 500 < 500 is false
  gate_pairs_kernel_serial(&a, 1, sa, za, &b, 1, sb, zb, GatePairMode::euclidean, 500.0 + 1e-9,
                           &out);
  CHECK(out == 1);
}

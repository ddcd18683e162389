// Benchmarks the data-parallel kernels, serial reference vs OpenMP dispatch,
// and cross-checks that both produce bitwise-identical output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <vector>

#include "lmb/exec.hpp"
#include "lmb/kernels.hpp"
#include "lmb/models.hpp"
#include "lmb/rng.hpp"

using namespace lmb;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

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

struct BenchRow {
  const char* name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

void print_row(const BenchRow& row) {
  std::printf("%-24s %12.2f %14.2f %10.2fx %10s\n", row.name, row.serial_ms, row.parallel_ms,
              row.serial_ms / row.parallel_ms, row.identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 40;
  if (argc > 1) reps = std::atoi(argv[1]);

  const Region region{0.0, 10000.0, 0.0, 10000.0};
  RandomStream rng(12345);

  std::vector<BearingRangeSensor> sensors;
  for (int s = 0; s < 8; ++s) {
    sensors.push_back(make_sensor(s, (s % 4) * 3333.0, (s / 4) * 10000.0));
  }

  std::printf("threads available: %d\n\n", exec::max_threads());
  std::printf("%-24s %12s %14s %10s %10s\n", "kernel", "serial (ms)", "parallel (ms)", "speedup",
              "outputs");

  // Birth weight kernel: 6-detection tuple, 1000 particles per evaluation.
  {
    std::vector<DetectionFactor> factors;
    for (int s = 0; s < 6; ++s) {
      const BearingRangeSensor& sen = sensors[static_cast<std::size_t>(s)];
      KinematicState target{5200.0, 10.0, 4800.0, -3.0};
      Measurement z = observe(sen, target);
      DetectionFactor f;
      f.sx = sen.px;
      f.sy = sen.py;
      f.zb = z.bearing + 0.01;
      f.zr = z.range + 3.0;
      f.inv_2b2 = 1.0 / (2.0 * sen.bearing_std * sen.bearing_std);
      f.inv_2r2 = 1.0 / (2.0 * sen.range_std * sen.range_std);
      f.log_gain = std::log(sen.detect_prob) -
                   std::log(clutter_intensity(sen, z)) -
                   std::log(2.0 * std::numbers::pi * sen.bearing_std * sen.range_std);
      factors.push_back(f);
    }
    BirthWeightProblem pr;
    pr.factors = factors.data();
    pr.num_factors = static_cast<int>(factors.size());
    pr.miss_log_sum = 2.0 * std::log1p(-0.95);
    pr.proposal.all_miss = false;
    pr.proposal.sx = sensors[0].px;
    pr.proposal.sy = sensors[0].py;
    pr.proposal.zb = factors[0].zb;
    pr.proposal.zr = factors[0].zr;
    pr.proposal.bearing_std = 0.25;
    pr.proposal.range_std = 10.0;
    pr.proposal.log_norm = -std::log(2.0 * std::numbers::pi * 0.25 * 10.0);
    pr.region = region;
    pr.log_area = std::log(region.area());
    pr.velocity_std = 35.0;
    pr.count = 1000;

    std::vector<Particle> a(1000), b(1000);
    const int evals = 200 * reps;
    double t0 = now_ms();
    for (int r = 0; r < evals; ++r) {
      pr.seed = static_cast<std::uint64_t>(r);
      birth_weight_kernel_serial(pr, a.data());
    }
    double t1 = now_ms();
    for (int r = 0; r < evals; ++r) {
      pr.seed = static_cast<std::uint64_t>(r);
      birth_weight_kernel(pr, b.data());
    }
    double t2 = now_ms();
    pr.seed = 7;
    birth_weight_kernel_serial(pr, a.data());
    birth_weight_kernel(pr, b.data());
    bool same = std::memcmp(a.data(), b.data(), a.size() * sizeof(Particle)) == 0;
    print_row({"birth_weight (6 det)", t1 - t0, t2 - t1, same});
    std::printf("    %.1f ns/particle, %.1f us/evaluation (serial)\n",
                (t1 - t0) * 1e6 / (static_cast<double>(evals) * 1000.0),
                (t1 - t0) * 1e3 / static_cast<double>(evals));
  }

  // Scan likelihood table: 300 tracks x 1000 particles x 40 measurements.
  {
    LmbDensity density;
    for (int i = 0; i < 300; ++i) {
      BernoulliComponent c;
      c.label.birth_time = 0;
      c.label.tuple = {i + 1};
      c.existence = 0.5;
      c.spatial.particles.resize(1000);
      for (Particle& p : c.spatial.particles) {
        p.state.px = rng.uniform(0.0, 10000.0);
        p.state.py = rng.uniform(0.0, 10000.0);
        p.state.vx = rng.normal(0.0, 35.0);
        p.state.vy = rng.normal(0.0, 35.0);
        p.weight = 1.0 / 1000.0;
      }
      density.components.push_back(std::move(c));
    }
    std::vector<Measurement> zs;
    for (int j = 0; j < 40; ++j) {
      KinematicState t{rng.uniform(0.0, 10000.0), 0.0, rng.uniform(0.0, 10000.0), 0.0};
      Measurement z = observe(sensors[0], t);
      zs.push_back(z);
    }
    std::vector<double> miss_a, det_a, miss_b, det_b;
    const int evals = reps / 4 + 1;
    double t0 = now_ms();
    for (int r = 0; r < evals; ++r) likelihood_table_kernel_serial(density, sensors[0], zs, miss_a, det_a);
    double t1 = now_ms();
    for (int r = 0; r < evals; ++r) likelihood_table_kernel(density, sensors[0], zs, miss_b, det_b);
    double t2 = now_ms();
    bool same = miss_a == miss_b && det_a == det_b;
    print_row({"likelihood_table", t1 - t0, t2 - t1, same});
    std::printf("    %.1f ms/scan (serial, 300 tracks x 40 meas)\n",
                (t1 - t0) / static_cast<double>(evals));
  }

  // Particle prediction: 500k particles.
  {
    NcvModel model{1.0, 5.0, 5.0};
    ParticleSet set_a, set_b;
    set_a.particles.resize(500000);
    for (Particle& p : set_a.particles) {
      p.state.px = rng.uniform(0.0, 10000.0);
      p.state.py = rng.uniform(0.0, 10000.0);
      p.state.vx = rng.normal(0.0, 35.0);
      p.state.vy = rng.normal(0.0, 35.0);
      p.weight = 1.0;
    }
    set_b = set_a;
    const int evals = reps / 4 + 1;
    double t0 = now_ms();
    for (int r = 0; r < evals; ++r) predict_particles_kernel_serial(model, 99, set_a);
    double t1 = now_ms();
    for (int r = 0; r < evals; ++r) predict_particles_kernel(model, 99, set_b);
    double t2 = now_ms();
    bool same = std::memcmp(set_a.particles.data(), set_b.particles.data(),
                            set_a.size() * sizeof(Particle)) == 0;
    print_row({"predict_particles", t1 - t0, t2 - t1, same});
  }

  // Gate pairs: 200 x 200 measurements, both modes.
  {
    std::vector<GateCandidate> pa(200), pb(200);
    std::vector<Measurement> za, zb;
    for (int i = 0; i < 200; ++i) {
      KinematicState ta{rng.uniform(0.0, 10000.0), 0.0, rng.uniform(0.0, 10000.0), 0.0};
      KinematicState tb{rng.uniform(0.0, 10000.0), 0.0, rng.uniform(0.0, 10000.0), 0.0};
      Measurement a = observe(sensors[0], ta);
      Measurement b = observe(sensors[1], tb);
      za.push_back(a);
      zb.push_back(b);
      invert_measurement(sensors[0], a, pa[static_cast<std::size_t>(i)].x,
                         pa[static_cast<std::size_t>(i)].y);
      invert_measurement(sensors[1], b, pb[static_cast<std::size_t>(i)].x,
                         pb[static_cast<std::size_t>(i)].y);
    }
    std::vector<std::uint8_t> out_a(200 * 200), out_b(200 * 200);
    const int evals = 10 * reps;
    double t0 = now_ms();
    for (int r = 0; r < evals; ++r) {
      gate_pairs_kernel_serial(pa.data(), 200, sensors[0], za, pb.data(), 200, sensors[1], zb,
                               GatePairMode::mahalanobis, 13.8, out_a.data());
    }
    double t1 = now_ms();
    for (int r = 0; r < evals; ++r) {
      gate_pairs_kernel(pa.data(), 200, sensors[0], za, pb.data(), 200, sensors[1], zb,
                        GatePairMode::mahalanobis, 13.8, out_b.data());
    }
    double t2 = now_ms();
    bool same = out_a == out_b;
    print_row({"gate_pairs (mahal)", t1 - t0, t2 - t1, same});
  }

  return 0;
}

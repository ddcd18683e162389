#include "lmb/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "lmb/rng.hpp"

namespace lmb {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate(const ScenarioConfig& cfg) {
  if (cfg.duration <= 0 || cfg.dt <= 0.0 || cfg.birth_period <= 0 ||
      cfg.max_births_per_epoch < 0 || cfg.speed < 0.0 || cfg.accel_std_x < 0.0 ||
      cfg.accel_std_y < 0.0 || cfg.region.area() <= 0.0) {
    throw std::invalid_argument("scenario config fields must be positive");
  }
  if (cfg.sensors.empty()) throw std::invalid_argument("scenario needs at least one sensor");
}

}  // namespace

std::vector<BearingRangeSensor> boundary_sensors(const Region& region, int count,
                                                 double bearing_std, double range_std,
                                                 double detect_prob, double clutter_rate,
                                                 double range_max) {
  if (count <= 0) throw std::invalid_argument("sensor count must be positive");
  const double w = region.x_max - region.x_min;
  const double h = region.y_max - region.y_min;
  const double perimeter = 2.0 * (w + h);
  std::vector<BearingRangeSensor> sensors;
  sensors.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double d = perimeter * static_cast<double>(i) / static_cast<double>(count);
    BearingRangeSensor s;
    s.id = i + 1;
    // Counterclockwise walk: bottom edge, right edge, top edge, left edge.
    if (d < w) {
      s.px = region.x_min + d;
      s.py = region.y_min;
    } else if ((d -= w) < h) {
      s.px = region.x_max;
      s.py = region.y_min + d;
    } else if ((d -= h) < w) {
      s.px = region.x_max - d;
      s.py = region.y_max;
    } else {
      d -= w;
      s.px = region.x_min;
      s.py = region.y_max - d;
    }
    s.bearing_std = bearing_std;
    s.range_std = range_std;
    s.detect_prob = detect_prob;
    s.clutter_rate = clutter_rate;
    s.range_max = range_max;
    sensors.push_back(s);
  }
  return sensors;
}

ScenarioConfig default_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.sensors = boundary_sensors(cfg.region, 8, 0.25, 10.0, 0.95, 10.0, 20000.0);
  cfg.seed = seed;
  return cfg;
}

std::vector<TruthTrajectory> generate_truth(const ScenarioConfig& cfg) {
  validate(cfg);
  RandomStream rng(derive_seed(cfg.seed, {stream_tag::scenario_truth}));
  const NcvModel model{cfg.dt, cfg.accel_std_x, cfg.accel_std_y};
  std::vector<TruthTrajectory> truth;
  int next_id = 1;
  for (int t = 0; t < cfg.duration; t += cfg.birth_period) {
    const int count = static_cast<int>(
        rng.uniform_int(static_cast<std::uint32_t>(cfg.max_births_per_epoch) + 1));
    for (int k = 0; k < count; ++k) {
      TruthTrajectory traj;
      traj.id = next_id++;
      traj.birth_step = t;
      KinematicState x;
      x.px = cfg.region.x_min + rng.uniform01() * (cfg.region.x_max - cfg.region.x_min);
      x.py = cfg.region.y_min + rng.uniform01() * (cfg.region.y_max - cfg.region.y_min);
      // Heading measured from the +y axis, matching the sensor convention;
      // pi - 2*pi*u lands in (-pi, pi].
      const double heading = kPi - 2.0 * kPi * rng.uniform01();
      x.vx = cfg.speed * std::sin(heading);
      x.vy = cfg.speed * std::cos(heading);
      traj.states.push_back(x);
      for (int step = t + 1; step < cfg.duration; ++step) {
        x = ncv_step(model, x, rng);
        traj.states.push_back(x);
      }
      truth.push_back(std::move(traj));
    }
  }
  return truth;
}

ScenarioData generate_scenario(const ScenarioConfig& cfg) {
  ScenarioData data;
  data.config = cfg;
  data.truth = generate_truth(cfg);

  RandomStream rng(derive_seed(cfg.seed, {stream_tag::scenario_meas}));
  const int steps = cfg.duration;
  const int num_sensors = static_cast<int>(cfg.sensors.size());
  data.measurements.resize(static_cast<std::size_t>(steps));
  data.detection_counts.assign(static_cast<std::size_t>(steps),
                               std::vector<int>(static_cast<std::size_t>(num_sensors), 0));
  for (int t = 0; t < steps; ++t) {
    data.measurements[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(num_sensors));
    for (int s = 0; s < num_sensors; ++s) {
      const BearingRangeSensor& sensor = cfg.sensors[static_cast<std::size_t>(s)];
      std::vector<Measurement>& scan = data.measurements[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      int detections = 0;
      for (const TruthTrajectory& traj : data.truth) {
        if (!traj.alive_at(t)) continue;
        if (rng.uniform01() >= sensor.detect_prob) continue;
        Measurement z = observe(sensor, traj.state_at(t));
        z.bearing = wrap_angle(z.bearing + sensor.bearing_std * rng.normal());
        z.range += sensor.range_std * rng.normal();
        // Clamp into the observation volume so the clutter density stays
        // positive at every supplied measurement.
        if (z.range < 0.0) z.range = 0.0;
        if (z.range > sensor.range_max) z.range = sensor.range_max;
        scan.push_back(z);
        ++detections;
      }
      data.detection_counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = detections;
      const int clutter = static_cast<int>(rng.poisson(sensor.clutter_rate));
      for (int k = 0; k < clutter; ++k) {
        Measurement z;
        z.bearing = kPi - 2.0 * kPi * rng.uniform01();
        z.range = rng.uniform01() * sensor.range_max;
        scan.push_back(z);
      }
      // Fisher-Yates so detections are not always listed first.
      for (std::size_t i = scan.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_int(static_cast<std::uint32_t>(i));
        std::swap(scan[i - 1], scan[j]);
      }
    }
  }
  return data;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Parser {
 public:
  explicit Parser(std::istream& in) : in_(in) {}

  std::istringstream line(const char* expected_head) {
    std::string text;
    if (!std::getline(in_, text)) {
      throw std::runtime_error(std::string("scenario dump truncated before '") + expected_head + "'");
    }
    ++line_no_;
    std::istringstream ls(text);
    std::string head;
    ls >> head;
    if (head != expected_head) {
      throw std::runtime_error("scenario dump line " + std::to_string(line_no_) + ": expected '" +
                               expected_head + "', got '" + head + "'");
    }
    return ls;
  }

  void expect_literal(const std::string& want) {
    std::string text;
    if (!std::getline(in_, text) || text != want) {
      throw std::runtime_error("scenario dump: missing line '" + want + "'");
    }
    ++line_no_;
  }

  void skip_comment() {
    std::string text;
    if (!std::getline(in_, text) || text.empty() || text[0] != '#') {
      throw std::runtime_error("scenario dump: expected a # header line");
    }
    ++line_no_;
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename T>
T take(std::istringstream& ls, const char* what) {
  T v;
  if (!(ls >> v)) throw std::runtime_error(std::string("scenario dump: bad field ") + what);
  return v;
}

}  // namespace

void save_scenario(const ScenarioData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open scenario dump for writing: " + path);
  const ScenarioConfig& cfg = data.config;
  out << "lmbtrack scenario dump v1\n";
  out << "# config: duration dt x_min x_max y_min y_max birth_period max_births speed accel_std_x accel_std_y seed\n";
  out << "# sensor: id px py bearing_std range_std detect_prob clutter_rate range_max\n";
  out << "# track: id birth_step nstates; then nstates lines 's px vx py vy'\n";
  out << "# step: t sensor_index nmeas ndetections; then nmeas lines 'z bearing range'\n";
  out << "config " << cfg.duration << ' ' << fmt(cfg.dt) << ' ' << fmt(cfg.region.x_min) << ' '
      << fmt(cfg.region.x_max) << ' ' << fmt(cfg.region.y_min) << ' ' << fmt(cfg.region.y_max)
      << ' ' << cfg.birth_period << ' ' << cfg.max_births_per_epoch << ' ' << fmt(cfg.speed)
      << ' ' << fmt(cfg.accel_std_x) << ' ' << fmt(cfg.accel_std_y) << ' ' << cfg.seed << '\n';
  out << "sensors " << cfg.sensors.size() << '\n';
  for (const BearingRangeSensor& s : cfg.sensors) {
    out << "sensor " << s.id << ' ' << fmt(s.px) << ' ' << fmt(s.py) << ' ' << fmt(s.bearing_std)
        << ' ' << fmt(s.range_std) << ' ' << fmt(s.detect_prob) << ' ' << fmt(s.clutter_rate)
        << ' ' << fmt(s.range_max) << '\n';
  }
  out << "tracks " << data.truth.size() << '\n';
  for (const TruthTrajectory& traj : data.truth) {
    out << "track " << traj.id << ' ' << traj.birth_step << ' ' << traj.states.size() << '\n';
    for (const KinematicState& x : traj.states) {
      out << "s " << fmt(x.px) << ' ' << fmt(x.vx) << ' ' << fmt(x.py) << ' ' << fmt(x.vy) << '\n';
    }
  }
  out << "steps " << data.measurements.size() << ' ' << cfg.sensors.size() << '\n';
  for (std::size_t t = 0; t < data.measurements.size(); ++t) {
    for (std::size_t s = 0; s < data.measurements[t].size(); ++s) {
      const std::vector<Measurement>& scan = data.measurements[t][s];
      out << "step " << t << ' ' << s << ' ' << scan.size() << ' ' << data.detection_counts[t][s]
          << '\n';
      for (const Measurement& z : scan) {
        out << "z " << fmt(z.bearing) << ' ' << fmt(z.range) << '\n';
      }
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write failed for scenario dump: " + path);
}

ScenarioData load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario dump: " + path);
  Parser p(in);
  p.expect_literal("lmbtrack scenario dump v1");
  for (int i = 0; i < 4; ++i) p.skip_comment();

  ScenarioData data;
  ScenarioConfig& cfg = data.config;
  {
    std::istringstream ls = p.line("config");
    cfg.duration = take<int>(ls, "duration");
    cfg.dt = take<double>(ls, "dt");
    cfg.region.x_min = take<double>(ls, "x_min");
    cfg.region.x_max = take<double>(ls, "x_max");
    cfg.region.y_min = take<double>(ls, "y_min");
    cfg.region.y_max = take<double>(ls, "y_max");
    cfg.birth_period = take<int>(ls, "birth_period");
    cfg.max_births_per_epoch = take<int>(ls, "max_births");
    cfg.speed = take<double>(ls, "speed");
    cfg.accel_std_x = take<double>(ls, "accel_std_x");
    cfg.accel_std_y = take<double>(ls, "accel_std_y");
    cfg.seed = take<std::uint64_t>(ls, "seed");
  }
  {
    std::istringstream ls = p.line("sensors");
    const int n = take<int>(ls, "sensor count");
    cfg.sensors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::istringstream sl = p.line("sensor");
      BearingRangeSensor& s = cfg.sensors[static_cast<std::size_t>(i)];
      s.id = take<int>(sl, "sensor id");
      s.px = take<double>(sl, "sensor px");
      s.py = take<double>(sl, "sensor py");
      s.bearing_std = take<double>(sl, "bearing_std");
      s.range_std = take<double>(sl, "range_std");
      s.detect_prob = take<double>(sl, "detect_prob");
      s.clutter_rate = take<double>(sl, "clutter_rate");
      s.range_max = take<double>(sl, "range_max");
    }
  }
  {
    std::istringstream ls = p.line("tracks");
    const int n = take<int>(ls, "track count");
    data.truth.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::istringstream tl = p.line("track");
      TruthTrajectory& traj = data.truth[static_cast<std::size_t>(i)];
      traj.id = take<int>(tl, "track id");
      traj.birth_step = take<int>(tl, "birth_step");
      const int nstates = take<int>(tl, "nstates");
      traj.states.resize(static_cast<std::size_t>(nstates));
      for (int k = 0; k < nstates; ++k) {
        std::istringstream sl = p.line("s");
        KinematicState& x = traj.states[static_cast<std::size_t>(k)];
        x.px = take<double>(sl, "px");
        x.vx = take<double>(sl, "vx");
        x.py = take<double>(sl, "py");
        x.vy = take<double>(sl, "vy");
      }
    }
  }
  {
    std::istringstream ls = p.line("steps");
    const int steps = take<int>(ls, "step count");
    const int num_sensors = take<int>(ls, "sensor count");
    if (num_sensors != static_cast<int>(cfg.sensors.size())) {
      throw std::runtime_error("scenario dump: sensor count mismatch between header and steps");
    }
    data.measurements.assign(static_cast<std::size_t>(steps), {});
    data.detection_counts.assign(static_cast<std::size_t>(steps),
                                 std::vector<int>(static_cast<std::size_t>(num_sensors), 0));
    for (int t = 0; t < steps; ++t) {
      data.measurements[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(num_sensors));
      for (int s = 0; s < num_sensors; ++s) {
        std::istringstream sl = p.line("step");
        const int ft = take<int>(sl, "step t");
        const int fs = take<int>(sl, "step sensor");
        if (ft != t || fs != s) throw std::runtime_error("scenario dump: step records out of order");
        const int nmeas = take<int>(sl, "nmeas");
        data.detection_counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
            take<int>(sl, "ndetections");
        std::vector<Measurement>& scan =
            data.measurements[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
        scan.resize(static_cast<std::size_t>(nmeas));
        for (int k = 0; k < nmeas; ++k) {
          std::istringstream zl = p.line("z");
          scan[static_cast<std::size_t>(k)].bearing = take<double>(zl, "bearing");
          scan[static_cast<std::size_t>(k)].range = take<double>(zl, "range");
        }
      }
    }
  }
  p.expect_literal("end");
  return data;
}

}  // namespace lmb

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lmb {

// Planar near-constant-velocity state, interleaved per axis.
struct KinematicState {
  double px = 0.0;
  double vx = 0.0;
  double py = 0.0;
  double vy = 0.0;
};

struct Measurement {
  double bearing = 0.0;  // radians, measured from the +y axis, in (-pi, pi]
  double range = 0.0;    // meters
};

// 1-based index into a sensor's measurement list; 0 is the miss sentinel.
using MeasurementIndex = std::int32_t;

// One entry per sensor, in sensor order.
using MeasurementTuple = std::vector<MeasurementIndex>;

inline int tuple_missed_count(const MeasurementTuple& tuple) {
  return static_cast<int>(std::count(tuple.begin(), tuple.end(), 0));
}

inline MeasurementTuple tuple_all_miss(int num_sensors) {
  if (num_sensors <= 0) throw std::invalid_argument("tuple_all_miss: need at least one sensor");
  return MeasurementTuple(static_cast<std::size_t>(num_sensors), 0);
}

struct TupleHash {
  std::size_t operator()(const MeasurementTuple& tuple) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (MeasurementIndex j : tuple) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Track label: birth step plus the measurement tuple that spawned the track.
struct Label {
  int birth_time = 0;
  MeasurementTuple tuple;

  friend bool operator==(const Label& a, const Label& b) {
    return a.birth_time == b.birth_time && a.tuple == b.tuple;
  }
  friend bool operator<(const Label& a, const Label& b) {
    if (a.birth_time != b.birth_time) return a.birth_time < b.birth_time;
    return std::lexicographical_compare(a.tuple.begin(), a.tuple.end(), b.tuple.begin(),
                                        b.tuple.end());
  }
};

struct Particle {
  KinematicState state;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;

  std::size_t size() const { return particles.size(); }
  bool empty() const { return particles.empty(); }

  double total_weight() const {
    double sum = 0.0;
    for (const Particle& p : particles) sum += p.weight;
    return sum;
  }

  // Scales weights to sum to one; throws when the total is not positive.
  void normalize() {
    double sum = total_weight();
    if (!(sum > 0.0)) throw std::runtime_error("ParticleSet::normalize: total weight not positive");
    for (Particle& p : particles) p.weight /= sum;
  }

  // Normalized-weight mean state.
  KinematicState mean() const {
    KinematicState m;
    double sum = 0.0;
    for (const Particle& p : particles) {
      m.px += p.weight * p.state.px;
      m.vx += p.weight * p.state.vx;
      m.py += p.weight * p.state.py;
      m.vy += p.weight * p.state.vy;
      sum += p.weight;
    }
    if (!(sum > 0.0)) throw std::runtime_error("ParticleSet::mean: total weight not positive");
    m.px /= sum;
    m.vx /= sum;
    m.py /= sum;
    m.vy /= sum;
    return m;
  }
};

struct BernoulliComponent {
  Label label;
  double existence = 0.0;
  ParticleSet spatial;
};

struct LmbDensity {
  std::vector<BernoulliComponent> components;

  std::size_t size() const { return components.size(); }
  bool empty() const { return components.empty(); }
};

inline bool labels_distinct(const LmbDensity& density) {
  std::vector<const Label*> labels;
  labels.reserve(density.components.size());
  for (const BernoulliComponent& c : density.components) labels.push_back(&c.label);
  std::sort(labels.begin(), labels.end(), [](const Label* a, const Label* b) { return *a < *b; });
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (*labels[i - 1] == *labels[i]) return false;
  }
  return true;
}

}  // namespace lmb

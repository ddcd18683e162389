#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmb/models.hpp"
#include "lmb/types.hpp"

namespace lmb {

// Simulation setup: periodic uniform births with a fixed initial speed,
// near-constant-velocity motion, and a ring of bearing-range sensors.
struct ScenarioConfig {
  int duration = 100;    // steps
  double dt = 1.0;       // seconds per step
  Region region{0.0, 10000.0, 0.0, 10000.0};
  int birth_period = 5;           // steps between birth epochs
  int max_births_per_epoch = 3;   // epoch count ~ uniform{0..max}
  double speed = 50.0;            // initial speed, exact
  double accel_std_x = 5.0;
  double accel_std_y = 5.0;
  std::vector<BearingRangeSensor> sensors;
  std::uint64_t seed = 0;
};

// `count` sensors evenly spaced along the region boundary, starting at the
// lower-left corner and walking counterclockwise. Eight sensors on a square
// land on the corners and edge midpoints.
std::vector<BearingRangeSensor> boundary_sensors(const Region& region, int count,
                                                 double bearing_std, double range_std,
                                                 double detect_prob, double clutter_rate,
                                                 double range_max);

// The default setup: 100 steps, [0,10000]^2, births every 5 steps, speed 50,
// and 8 boundary sensors with p_D 0.95 and 10 expected clutter points each.
ScenarioConfig default_scenario(std::uint64_t seed);

struct TruthTrajectory {
  int id = 0;
  int birth_step = 0;
  std::vector<KinematicState> states;  // one per step from birth_step to the end

  bool alive_at(int t) const {
    return t >= birth_step && t < birth_step + static_cast<int>(states.size());
  }
  const KinematicState& state_at(int t) const { return states[static_cast<std::size_t>(t - birth_step)]; }
};

// Truth plus every sensor scan, generated once up front so feature-toggle
// comparisons consume byte-identical inputs.
struct ScenarioData {
  ScenarioConfig config;
  std::vector<TruthTrajectory> truth;
  // measurements[t][s]: scan of sensor s at step t, detections and clutter
  // shuffled together.
  std::vector<std::vector<std::vector<Measurement>>> measurements;
  // detection_counts[t][s]: how many of that scan's points are true
  // detections. Diagnostics only; never handed to the filter.
  std::vector<std::vector<int>> detection_counts;
};

std::vector<TruthTrajectory> generate_truth(const ScenarioConfig& cfg);

ScenarioData generate_scenario(const ScenarioConfig& cfg);

// Versioned text dump. Field order is documented in the file header and is
// part of the format; saving a loaded dump reproduces the file byte for byte.
void save_scenario(const ScenarioData& data, const std::string& path);
ScenarioData load_scenario(const std::string& path);

}  // namespace lmb

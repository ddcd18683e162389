#pragma once

#include <map>
#include <string>
#include <vector>

// OSPA and windowed OSPA-on-tracks metrics with an exact optimal-assignment
// core. Pure functions over position data.

namespace lmb {

struct OspaParams {
  double cutoff = 200.0;  // meters
  double order = 1.0;
  int window = 5;
  double weight_power = 0.0;  // 0 = uniform window weights
};

struct TrackPoint {
  double x = 0.0;
  double y = 0.0;
};

// Tracks keyed by an opaque id; each holds positions at the steps where the
// track exists.
struct LabeledTrackSet {
  std::map<std::string, std::map<int, TrackPoint>> tracks;
};

struct CostMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> cost;

  double at(int i, int j) const { return cost[static_cast<std::size_t>(i) * cols + j]; }
  double& at(int i, int j) { return cost[static_cast<std::size_t>(i) * cols + j]; }
};

// Exact minimum-cost injection of the smaller side into the larger.
double assignment_min(const CostMatrix& costs);

// Optimal subpattern assignment distance between position sets.
double ospa(const std::vector<TrackPoint>& x, const std::vector<TrackPoint>& y, double cutoff,
            double order);

// Windowed track-level variant: per-pair base distance is the weighted mean
// over the window of the per-step distance (0 when neither track exists, the
// cutoff when exactly one does), with tracks absent over the whole window
// dropped; the OSPA construction is then applied over tracks.
double ospa2(const LabeledTrackSet& x, const LabeledTrackSet& y, const OspaParams& params, int t);

}  // namespace lmb

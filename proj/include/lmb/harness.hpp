#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmb/adaptive_birth.hpp"
#include "lmb/filter.hpp"
#include "lmb/metrics.hpp"
#include "lmb/scenario.hpp"

// End-to-end experiment runner: seeded scenario, full tracking loop, the five
// mechanism toggles, per-step counters, stage wall-times, OSPA(2) series, and
// comparison reports against a baseline run.

namespace lmb {

struct Toggles {
  bool preprune = false;
  bool gate = false;
  bool memoize = false;
  bool prune_cap = false;
  bool skip_miss = false;
};

struct RunConfig {
  ScenarioConfig scenario;
  FilterConfig filter;
  // Mechanism parameters used when the matching toggle is on; a toggle that
  // is off forces that mechanism's neutral setting regardless of these.
  BirthConfig birth;
  Toggles toggles;
  OspaParams ospa;
  double birth_velocity_std = 35.0;
  // Pin the kernels to one thread while this run is timed.
  bool serial = false;
  std::string output_dir;
  std::string label = "run";
};

// cfg.birth with every toggled-off mechanism replaced by its neutral value.
BirthConfig effective_birth_config(const RunConfig& cfg);

struct StepRecord {
  int step = 0;
  EvalStats stats;
  int birth_count = 0;
  // FNV-1a over the emitted birth components (labels, existences, particles);
  // equal digests mean bitwise-equal birth densities.
  std::uint64_t birth_digest = 0;
  double birth_min_existence = -1.0;  // -1 when no components were emitted
  int birth_max_missed = -1;          // -1 when no components were emitted
  int num_estimates = 0;
  double ospa2 = 0.0;
};

struct StageTimes {
  double birth_sampling = 0.0;
  double birth_construction = 0.0;
  double filter_update = 0.0;
  double metrics = 0.0;

  double total() const { return birth_sampling + birth_construction + filter_update + metrics; }
  double birth_total() const { return birth_sampling + birth_construction; }
};

struct RunReport {
  std::string label;
  std::uint64_t seed = 0;
  Toggles toggles;
  std::vector<StepRecord> steps;
  EvalStats totals;  // sums of the per-step stats
  StageTimes stage_seconds;
  double ospa2_mean = 0.0;
  int peak_birth_components = 0;
};

// Runs the full loop on a freshly generated scenario, or on pre-generated
// data (which must match cfg.scenario) so toggle comparisons share inputs.
RunReport run_experiment(const RunConfig& cfg);
RunReport run_experiment(const RunConfig& cfg, const ScenarioData& data);

// (baseline - candidate) / baseline * 100; rejects baseline <= 0.
double percent_reduction(double baseline, double candidate);

struct ComparisonRow {
  std::string label;
  double wall_reduction_pct = 0.0;
  double eval_reduction_pct = 0.0;
  double ospa2_mean = 0.0;
  double ospa2_delta = 0.0;  // candidate mean minus baseline mean
};

// Rejects candidates whose scenario seed differs from the baseline's.
std::vector<ComparisonRow> compare_runs(const RunReport& baseline,
                                        const std::vector<RunReport>& candidates);

// Writes summary, steps.csv, and report.json into dir (created if needed).
void emit_report(const RunReport& report, const std::string& dir);

// Round-trip of the machine-readable report for the compare workflow.
RunReport load_report(const std::string& dir);

// Writes comparison.csv into dir: one row per candidate.
void emit_comparison(const RunReport& baseline, const std::vector<ComparisonRow>& rows,
                     const std::string& dir);

}  // namespace lmb

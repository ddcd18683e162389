#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmb/harness.hpp"
#include "lmb/scenario.hpp"

using namespace lmb;

namespace {

RunConfig tiny_config(std::uint64_t seed) {
  RunConfig run;
  run.scenario.duration = 6;
  run.scenario.region = {0.0, 2000.0, 0.0, 2000.0};
  run.scenario.birth_period = 2;
  run.scenario.max_births_per_epoch = 2;
  run.scenario.sensors = boundary_sensors(run.scenario.region, 2, 0.25, 10.0, 0.9, 2.0, 20000.0);
  run.scenario.seed = seed;
  run.filter.track_particles = 150;
  run.filter.assoc_samples = 100;
  run.birth.num_chains = 5;
  run.birth.chain_length = 3;
  run.birth.spatial_particles = 100;
  run.ospa.window = 3;
  run.label = "tiny";
  return run;
}

void check_step_equal(const StepRecord& a, const StepRecord& b) {
  CHECK(a.step == b.step);
  CHECK(a.stats.computed == b.stats.computed);
  CHECK(a.stats.memo_hits == b.stats.memo_hits);
  CHECK(a.stats.gated_skips == b.stats.gated_skips);
  CHECK(a.stats.preprune_removed == b.stats.preprune_removed);
  CHECK(a.stats.component_skips == b.stats.component_skips);
  CHECK(a.birth_count == b.birth_count);
  CHECK(a.birth_digest == b.birth_digest);
  CHECK(a.birth_min_existence == b.birth_min_existence);
  CHECK(a.birth_max_missed == b.birth_max_missed);
  CHECK(a.num_estimates == b.num_estimates);
  CHECK(a.ospa2 == b.ospa2);
}

std::string first_line(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("percent_reduction arithmetic and validation") {
  CHECK(percent_reduction(100.0, 8.43) == doctest::Approx(91.57).epsilon(1e-12));
  CHECK(percent_reduction(100.0, 100.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(percent_reduction(100.0, 16.18) == doctest::Approx(83.82).epsilon(1e-12));
  CHECK(percent_reduction(50.0, 75.0) == doctest::Approx(-50.0).epsilon(1e-12));
  CHECK_THROWS_AS(percent_reduction(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(percent_reduction(-3.0, 1.0), std::invalid_argument);
}

TEST_CASE("effective_birth_config neutralizes toggled-off mechanisms") {
  RunConfig cfg = tiny_config(1);
  cfg.birth.tau_assoc = 0.01;
  cfg.birth.gate = GateConfig{GateMode::euclidean, 500.0};
  cfg.birth.memoize = true;  // ignored: the toggle is authoritative
  cfg.birth.prune_threshold = 1e-3;
  cfg.birth.cap = 10;
  cfg.birth.max_missed = 4;

  const BirthConfig off = effective_birth_config(cfg);
  CHECK(off.tau_assoc == 1.0);
  CHECK(off.gate.mode == GateMode::off);
  CHECK(!off.memoize);
  CHECK(off.prune_threshold == 0.0);
  CHECK(off.cap == -1);
  CHECK(off.max_missed == -1);
  // untouched sampler parameters pass through
  CHECK(off.num_chains == cfg.birth.num_chains);
  CHECK(off.spatial_particles == cfg.birth.spatial_particles);

  cfg.toggles = Toggles{true, true, true, true, true};
  const BirthConfig on = effective_birth_config(cfg);
  CHECK(on.tau_assoc == 0.01);
  CHECK(on.gate.mode == GateMode::euclidean);
  CHECK(on.gate.threshold == 500.0);
  CHECK(on.memoize);
  CHECK(on.prune_threshold == 1e-3);
  CHECK(on.cap == 10);
  CHECK(on.max_missed == 4);
}

TEST_CASE("run_experiment is deterministic and scenario generation is implicit") {
  const RunConfig cfg = tiny_config(71);
  const ScenarioData data = generate_scenario(cfg.scenario);

  const RunReport a = run_experiment(cfg);
  const RunReport b = run_experiment(cfg, data);
  const RunReport c = run_experiment(cfg, data);

  REQUIRE(a.steps.size() == b.steps.size());
  REQUIRE(b.steps.size() == c.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    check_step_equal(a.steps[i], b.steps[i]);
    check_step_equal(b.steps[i], c.steps[i]);
  }
  CHECK(a.ospa2_mean == b.ospa2_mean);
  CHECK(a.peak_birth_components == b.peak_birth_components);
  CHECK(a.totals.computed == b.totals.computed);
  CHECK(a.seed == 71);
  CHECK(a.totals.computed > 0);
}

TEST_CASE("run_experiment validates inputs") {
  RunConfig cfg = tiny_config(72);
  ScenarioConfig other = cfg.scenario;
  other.seed = 73;
  const ScenarioData mismatched = generate_scenario(other);
  CHECK_THROWS_AS(run_experiment(cfg, mismatched), std::invalid_argument);

  RunConfig bad = tiny_config(72);
  bad.filter.track_particles = 0;
  CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
  RunConfig bad2 = tiny_config(72);
  bad2.birth.spatial_particles = -5;
  CHECK_THROWS_AS(run_experiment(bad2), std::invalid_argument);
}

TEST_CASE("memoization changes the counters but not a single birth bit") {
  RunConfig base_cfg = tiny_config(74);
  base_cfg.label = "plain";
  RunConfig memo_cfg = base_cfg;
  memo_cfg.label = "memo";
  memo_cfg.toggles.memoize = true;

  const ScenarioData data = generate_scenario(base_cfg.scenario);
  const RunReport plain = run_experiment(base_cfg, data);
  const RunReport memo = run_experiment(memo_cfg, data);

  REQUIRE(plain.steps.size() == memo.steps.size());
  for (std::size_t i = 0; i < plain.steps.size(); ++i) {
    CHECK(plain.steps[i].birth_digest == memo.steps[i].birth_digest);
    CHECK(plain.steps[i].birth_count == memo.steps[i].birth_count);
    CHECK(plain.steps[i].ospa2 == memo.steps[i].ospa2);
    CHECK(plain.steps[i].num_estimates == memo.steps[i].num_estimates);
  }
  CHECK(memo.totals.memo_hits > 0);
  CHECK(memo.totals.computed < plain.totals.computed);
  CHECK(plain.totals.memo_hits == 0);
}

TEST_CASE("memoized empty-scene run computes the all-miss tuple exactly once") {
  RunConfig cfg = tiny_config(75);
  cfg.scenario.duration = 1;
  cfg.scenario.max_births_per_epoch = 0;  // no truth
  for (BearingRangeSensor& s : cfg.scenario.sensors) s.clutter_rate = 0.0;
  cfg.toggles.memoize = true;

  const RunReport run = run_experiment(cfg);
  REQUIRE(run.steps.size() == 1);
  // 5 chains x 3 sweeps x 2 sensors = 30 conditionals, each with only the
  // miss candidate, plus two construction lookups: 1 computed, 31 hits
  CHECK(run.steps[0].stats.computed == 1);
  CHECK(run.steps[0].stats.memo_hits == 31);
  CHECK(run.steps[0].birth_count == 1);
  CHECK(run.steps[0].birth_max_missed == 2);
  CHECK(run.steps[0].birth_min_existence == doctest::Approx(0.5).epsilon(1e-12));

  RunConfig plain_cfg = cfg;
  plain_cfg.toggles.memoize = false;
  const RunReport plain = run_experiment(plain_cfg);
  CHECK(plain.steps[0].stats.computed == 32);  // every request recomputes
  CHECK(plain.steps[0].stats.memo_hits == 0);
  CHECK(plain.steps[0].birth_digest == run.steps[0].birth_digest);
  // the request stream is identical; memoization only re-routes the charges
  CHECK(run.steps[0].stats.computed + run.steps[0].stats.memo_hits ==
        plain.steps[0].stats.computed);
}

TEST_CASE("emit_report and load_report round trip") {
  const RunConfig cfg = tiny_config(76);
  const RunReport report = run_experiment(cfg);

  const std::string dir = "harness_report_rt";
  emit_report(report, dir);
  const RunReport loaded = load_report(dir);

  CHECK(loaded.label == report.label);
  CHECK(loaded.seed == report.seed);
  CHECK(loaded.toggles.preprune == report.toggles.preprune);
  CHECK(loaded.toggles.memoize == report.toggles.memoize);
  REQUIRE(loaded.steps.size() == report.steps.size());
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    check_step_equal(loaded.steps[i], report.steps[i]);
  }
  CHECK(loaded.totals.computed == report.totals.computed);
  CHECK(loaded.totals.memo_hits == report.totals.memo_hits);
  CHECK(loaded.ospa2_mean == report.ospa2_mean);
  CHECK(loaded.peak_birth_components == report.peak_birth_components);
  CHECK(loaded.stage_seconds.birth_sampling == report.stage_seconds.birth_sampling);
  CHECK(loaded.stage_seconds.total() == doctest::Approx(report.stage_seconds.total()).epsilon(1e-12));

  CHECK(first_line(std::filesystem::path(dir) / "steps.csv") ==
        "step, computed, memo_hits, gated_skips, preprune_removed, component_skips, "
        "birth_count, ospa2");
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "summary"));

  std::filesystem::remove_all(dir);
}

TEST_CASE("load_report rejects a missing directory") {
  CHECK_THROWS_AS(load_report("no_such_report_dir"), std::runtime_error);
}

TEST_CASE("compare_runs: self comparison is all zeros, seed mismatch throws") {
  const RunConfig cfg = tiny_config(77);
  const ScenarioData data = generate_scenario(cfg.scenario);
  const RunReport base = run_experiment(cfg, data);

  const std::vector<ComparisonRow> rows = compare_runs(base, {base});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].wall_reduction_pct == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[0].eval_reduction_pct == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[0].ospa2_delta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[0].ospa2_mean == base.ospa2_mean);

  RunReport other = base;
  other.seed = 78;
  other.label = "other";
  CHECK_THROWS_AS(compare_runs(base, {other}), std::invalid_argument);
}

TEST_CASE("emit_comparison writes the baseline row first") {
  const RunConfig cfg = tiny_config(79);
  const ScenarioData data = generate_scenario(cfg.scenario);
  const RunReport base = run_experiment(cfg, data);

  RunConfig memo_cfg = cfg;
  memo_cfg.label = "memo";
  memo_cfg.toggles.memoize = true;
  const RunReport memo = run_experiment(memo_cfg, data);

  const std::vector<ComparisonRow> rows = compare_runs(base, {memo});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].eval_reduction_pct > 0.0);
  CHECK(rows[0].ospa2_delta == doctest::Approx(0.0).epsilon(1e-12));

  const std::string dir = "harness_cmp_out";
  emit_comparison(base, rows, dir);
  std::ifstream in(std::filesystem::path(dir) / "comparison.csv");
  std::string header, brow, crow;
  std::getline(in, header);
  std::getline(in, brow);
  std::getline(in, crow);
  CHECK(header == "label, wall_reduction_pct, eval_reduction_pct, ospa2_mean, ospa2_delta");
  CHECK(brow.rfind("tiny, 0, 0, ", 0) == 0);
  CHECK(crow.rfind("memo, ", 0) == 0);
  std::filesystem::remove_all(dir);
}

#include "lmb/harness.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lmb/exec.hpp"

namespace lmb {

namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return fnv1a_bytes(h, &bits, sizeof bits);
}

std::uint64_t fnv1a_int(std::uint64_t h, std::int64_t v) { return fnv1a_bytes(h, &v, sizeof v); }

std::uint64_t digest_density(const LmbDensity& density) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const BernoulliComponent& c : density.components) {
    h = fnv1a_int(h, c.label.birth_time);
    h = fnv1a_int(h, static_cast<std::int64_t>(c.label.tuple.size()));
    for (MeasurementIndex j : c.label.tuple) h = fnv1a_int(h, j);
    h = fnv1a_double(h, c.existence);
    h = fnv1a_int(h, static_cast<std::int64_t>(c.spatial.size()));
    for (const Particle& p : c.spatial.particles) {
      h = fnv1a_double(h, p.weight);
      h = fnv1a_double(h, p.state.px);
      h = fnv1a_double(h, p.state.vx);
      h = fnv1a_double(h, p.state.py);
      h = fnv1a_double(h, p.state.vy);
    }
  }
  return h;
}

std::string label_key(const Label& label) {
  std::ostringstream out;
  out << label.birth_time << ':';
  for (std::size_t i = 0; i < label.tuple.size(); ++i) {
    if (i) out << ',';
    out << label.tuple[i];
  }
  return out.str();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Pins the kernel thread count for the lifetime of a timed run.
class ThreadPin {
 public:
  explicit ThreadPin(bool serial) : active_(serial), saved_(exec::max_threads()) {
    if (active_) exec::set_max_threads(1);
  }
  ~ThreadPin() {
    if (active_) exec::set_max_threads(saved_);
  }
  ThreadPin(const ThreadPin&) = delete;
  ThreadPin& operator=(const ThreadPin&) = delete;

 private:
  bool active_;
  int saved_;
};

}  // namespace

BirthConfig effective_birth_config(const RunConfig& cfg) {
  BirthConfig b = cfg.birth;
  if (!cfg.toggles.preprune) b.tau_assoc = 1.0;
  if (!cfg.toggles.gate) b.gate = GateConfig{};
  b.memoize = cfg.toggles.memoize;
  if (!cfg.toggles.prune_cap) {
    b.prune_threshold = 0.0;
    b.cap = -1;
  }
  if (!cfg.toggles.skip_miss) b.max_missed = -1;
  return b;
}

RunReport run_experiment(const RunConfig& cfg) {
  return run_experiment(cfg, generate_scenario(cfg.scenario));
}

RunReport run_experiment(const RunConfig& cfg, const ScenarioData& data) {
  if (data.config.duration != cfg.scenario.duration ||
      data.config.seed != cfg.scenario.seed ||
      data.config.sensors.size() != cfg.scenario.sensors.size()) {
    throw std::invalid_argument("scenario data does not match the run configuration");
  }
  const BirthConfig birth_cfg = effective_birth_config(cfg);
  if (birth_cfg.spatial_particles <= 0 || cfg.filter.track_particles <= 0) {
    throw std::invalid_argument("particle counts must be positive");
  }
  ThreadPin pin(cfg.serial);

  const NcvModel model{cfg.scenario.dt, cfg.scenario.accel_std_x, cfg.scenario.accel_std_y};
  BirthPrior prior;
  prior.region = cfg.scenario.region;
  prior.velocity_std = cfg.birth_velocity_std;
  prior.num_particles = birth_cfg.spatial_particles;

  LabeledTrackSet truth_tracks;
  for (const TruthTrajectory& traj : data.truth) {
    std::map<int, TrackPoint>& points = truth_tracks.tracks["T" + std::to_string(traj.id)];
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const KinematicState& x = traj.states[k];
      points[traj.birth_step + static_cast<int>(k)] = TrackPoint{x.px, x.py};
    }
  }
  LabeledTrackSet estimate_tracks;

  RunReport report;
  report.label = cfg.label;
  report.seed = cfg.scenario.seed;
  report.toggles = cfg.toggles;
  report.steps.reserve(static_cast<std::size_t>(cfg.scenario.duration));

  LmbDensity belief;
  for (int t = 0; t < cfg.scenario.duration; ++t) {
    StepRecord rec;
    rec.step = t;
    const std::vector<std::vector<Measurement>>& scans =
        data.measurements[static_cast<std::size_t>(t)];

    clock_type::time_point mark = clock_type::now();
    auto [posterior, assoc] = update_all_sensors(belief, cfg.scenario.sensors, scans, cfg.filter,
                                                 t, cfg.scenario.seed);
    belief = prune_cap_belief(posterior, cfg.filter);
    const std::vector<LabeledEstimate> estimates =
        extract_estimates(belief, cfg.filter.extract_threshold);
    report.stage_seconds.filter_update += seconds_since(mark);

    mark = clock_type::now();
    for (const LabeledEstimate& e : estimates) {
      estimate_tracks.tracks[label_key(e.label)][t] = TrackPoint{e.state.px, e.state.py};
    }
    rec.num_estimates = static_cast<int>(estimates.size());
    rec.ospa2 = ospa2(truth_tracks, estimate_tracks, cfg.ospa, t);
    report.stage_seconds.metrics += seconds_since(mark);

    BirthContext ctx;
    ctx.sensors = &cfg.scenario.sensors;
    ctx.measurements = &scans;
    ctx.prior = prior;
    ctx.timestep = t;
    ctx.base_seed = cfg.scenario.seed;
    ctx.num_particles = birth_cfg.spatial_particles;
    BirthTimings birth_times;
    auto [birth, stats] = adaptive_birth_step(ctx, assoc, birth_cfg, model, &birth_times);
    report.stage_seconds.birth_sampling += birth_times.sampling_seconds;
    report.stage_seconds.birth_construction += birth_times.construction_seconds;

    rec.stats = stats;
    rec.birth_count = static_cast<int>(birth.size());
    rec.birth_digest = digest_density(birth);
    for (const BernoulliComponent& c : birth.components) {
      const int missed = tuple_missed_count(c.label.tuple);
      if (rec.birth_max_missed < missed) rec.birth_max_missed = missed;
      if (rec.birth_min_existence < 0.0 || c.existence < rec.birth_min_existence) {
        rec.birth_min_existence = c.existence;
      }
    }
    if (rec.birth_count > report.peak_birth_components) {
      report.peak_birth_components = rec.birth_count;
    }

    mark = clock_type::now();
    belief = predict(belief, birth, model, cfg.filter.survival_prob, t, cfg.scenario.seed);
    report.stage_seconds.filter_update += seconds_since(mark);

    report.totals += rec.stats;
    report.ospa2_mean += rec.ospa2;
    report.steps.push_back(std::move(rec));
  }
  if (!report.steps.empty()) report.ospa2_mean /= static_cast<double>(report.steps.size());
  return report;
}

double percent_reduction(double baseline, double candidate) {
  if (!(baseline > 0.0)) throw std::invalid_argument("percent_reduction needs a positive baseline");
  return (baseline - candidate) / baseline * 100.0;
}

std::vector<ComparisonRow> compare_runs(const RunReport& baseline,
                                        const std::vector<RunReport>& candidates) {
  std::vector<ComparisonRow> rows;
  rows.reserve(candidates.size());
  for (const RunReport& cand : candidates) {
    if (cand.seed != baseline.seed) {
      throw std::invalid_argument("compare_runs: candidate '" + cand.label +
                                  "' has a different scenario seed than the baseline");
    }
    ComparisonRow row;
    row.label = cand.label;
    row.wall_reduction_pct =
        percent_reduction(baseline.stage_seconds.total(), cand.stage_seconds.total());
    row.eval_reduction_pct = percent_reduction(static_cast<double>(baseline.totals.computed),
                                               static_cast<double>(cand.totals.computed));
    row.ospa2_mean = cand.ospa2_mean;
    row.ospa2_delta = cand.ospa2_mean - baseline.ospa2_mean;
    rows.push_back(row);
  }
  return rows;
}

namespace {

json toggles_to_json(const Toggles& t) {
  return json{{"preprune", t.preprune},
              {"gate", t.gate},
              {"memoize", t.memoize},
              {"prune_cap", t.prune_cap},
              {"skip_miss", t.skip_miss}};
}

Toggles toggles_from_json(const json& j) {
  Toggles t;
  t.preprune = j.at("preprune").get<bool>();
  t.gate = j.at("gate").get<bool>();
  t.memoize = j.at("memoize").get<bool>();
  t.prune_cap = j.at("prune_cap").get<bool>();
  t.skip_miss = j.at("skip_miss").get<bool>();
  return t;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void emit_report(const RunReport& report, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec) throw std::runtime_error("cannot create output dir " + base.string() + ": " + ec.message());

  {
    std::ostringstream out;
    out << "label " << report.label << '\n';
    out << "seed " << report.seed << '\n';
    out << "toggles preprune=" << report.toggles.preprune << " gate=" << report.toggles.gate
        << " memoize=" << report.toggles.memoize << " prune_cap=" << report.toggles.prune_cap
        << " skip_miss=" << report.toggles.skip_miss << '\n';
    out << "steps " << report.steps.size() << '\n';
    out << "computed " << report.totals.computed << '\n';
    out << "memo_hits " << report.totals.memo_hits << '\n';
    out << "gated_skips " << report.totals.gated_skips << '\n';
    out << "preprune_removed " << report.totals.preprune_removed << '\n';
    out << "component_skips " << report.totals.component_skips << '\n';
    out << "stage_seconds birth_sampling=" << fmt_double(report.stage_seconds.birth_sampling)
        << " birth_construction=" << fmt_double(report.stage_seconds.birth_construction)
        << " filter_update=" << fmt_double(report.stage_seconds.filter_update)
        << " metrics=" << fmt_double(report.stage_seconds.metrics)
        << " total=" << fmt_double(report.stage_seconds.total()) << '\n';
    out << "ospa2_mean " << fmt_double(report.ospa2_mean) << '\n';
    out << "peak_birth_components " << report.peak_birth_components << '\n';
    write_file(base / "summary", out.str());
  }
  {
    std::ostringstream out;
    out << "step, computed, memo_hits, gated_skips, preprune_removed, component_skips, "
           "birth_count, ospa2\n";
    for (const StepRecord& rec : report.steps) {
      out << rec.step << ", " << rec.stats.computed << ", " << rec.stats.memo_hits << ", "
          << rec.stats.gated_skips << ", " << rec.stats.preprune_removed << ", "
          << rec.stats.component_skips << ", " << rec.birth_count << ", " << fmt_double(rec.ospa2)
          << '\n';
    }
    write_file(base / "steps.csv", out.str());
  }
  {
    json j;
    j["label"] = report.label;
    j["seed"] = report.seed;
    j["toggles"] = toggles_to_json(report.toggles);
    j["stage_seconds"] = json{{"birth_sampling", report.stage_seconds.birth_sampling},
                              {"birth_construction", report.stage_seconds.birth_construction},
                              {"filter_update", report.stage_seconds.filter_update},
                              {"metrics", report.stage_seconds.metrics}};
    j["ospa2_mean"] = report.ospa2_mean;
    j["peak_birth_components"] = report.peak_birth_components;
    json steps = json::array();
    for (const StepRecord& rec : report.steps) {
      steps.push_back(json{{"step", rec.step},
                           {"computed", rec.stats.computed},
                           {"memo_hits", rec.stats.memo_hits},
                           {"gated_skips", rec.stats.gated_skips},
                           {"preprune_removed", rec.stats.preprune_removed},
                           {"component_skips", rec.stats.component_skips},
                           {"birth_count", rec.birth_count},
                           {"birth_digest", rec.birth_digest},
                           {"birth_min_existence", rec.birth_min_existence},
                           {"birth_max_missed", rec.birth_max_missed},
                           {"num_estimates", rec.num_estimates},
                           {"ospa2", rec.ospa2}});
    }
    j["steps"] = std::move(steps);
    write_file(base / "report.json", j.dump(2) + "\n");
  }
}

RunReport load_report(const std::string& dir) {
  const std::filesystem::path path = std::filesystem::path(dir) / "report.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report: " + path.string());
  json j;
  in >> j;

  RunReport report;
  report.label = j.at("label").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.toggles = toggles_from_json(j.at("toggles"));
  const json& stage = j.at("stage_seconds");
  report.stage_seconds.birth_sampling = stage.at("birth_sampling").get<double>();
  report.stage_seconds.birth_construction = stage.at("birth_construction").get<double>();
  report.stage_seconds.filter_update = stage.at("filter_update").get<double>();
  report.stage_seconds.metrics = stage.at("metrics").get<double>();
  report.ospa2_mean = j.at("ospa2_mean").get<double>();
  report.peak_birth_components = j.at("peak_birth_components").get<int>();
  for (const json& js : j.at("steps")) {
    StepRecord rec;
    rec.step = js.at("step").get<int>();
    rec.stats.computed = js.at("computed").get<std::int64_t>();
    rec.stats.memo_hits = js.at("memo_hits").get<std::int64_t>();
    rec.stats.gated_skips = js.at("gated_skips").get<std::int64_t>();
    rec.stats.preprune_removed = js.at("preprune_removed").get<std::int64_t>();
    rec.stats.component_skips = js.at("component_skips").get<std::int64_t>();
    rec.birth_count = js.at("birth_count").get<int>();
    rec.birth_digest = js.at("birth_digest").get<std::uint64_t>();
    rec.birth_min_existence = js.at("birth_min_existence").get<double>();
    rec.birth_max_missed = js.at("birth_max_missed").get<int>();
    rec.num_estimates = js.at("num_estimates").get<int>();
    rec.ospa2 = js.at("ospa2").get<double>();
    report.totals += rec.stats;
    report.steps.push_back(std::move(rec));
  }
  return report;
}

void emit_comparison(const RunReport& baseline, const std::vector<ComparisonRow>& rows,
                     const std::string& dir) {
  const std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec) throw std::runtime_error("cannot create output dir " + base.string() + ": " + ec.message());
  std::ostringstream out;
  out << "label, wall_reduction_pct, eval_reduction_pct, ospa2_mean, ospa2_delta\n";
  out << baseline.label << ", 0, 0, " << fmt_double(baseline.ospa2_mean) << ", 0\n";
  for (const ComparisonRow& row : rows) {
    out << row.label << ", " << fmt_double(row.wall_reduction_pct) << ", "
        << fmt_double(row.eval_reduction_pct) << ", " << fmt_double(row.ospa2_mean) << ", "
        << fmt_double(row.ospa2_delta) << '\n';
  }
  write_file(base / "comparison.csv", out.str());
}

}  // namespace lmb

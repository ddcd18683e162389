#include "lmb/config_io.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace lmb {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw std::runtime_error(std::string("config section '") + section + "' must be an object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error(std::string("unknown config key '") + item.key() + "' in section '" +
                               section + "'");
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

GateMode parse_gate_mode(const std::string& name) {
  if (name == "off") return GateMode::off;
  if (name == "pseudo") return GateMode::pseudo;
  if (name == "euclidean") return GateMode::euclidean;
  if (name == "mahalanobis") return GateMode::mahalanobis;
  throw std::runtime_error("unknown gate mode '" + name +
                           "' (expected off, pseudo, euclidean, or mahalanobis)");
}

BearingRangeSensor parse_sensor(const json& j, int index) {
  check_keys(j, "scenario.sensors[]",
             {"id", "px", "py", "bearing_std", "range_std", "detect_prob", "clutter_rate",
              "range_max"});
  BearingRangeSensor s;
  s.id = index + 1;
  s.bearing_std = 0.25;
  s.range_std = 10.0;
  s.detect_prob = 0.95;
  s.clutter_rate = 10.0;
  s.range_max = 20000.0;
  get_if(j, "id", s.id);
  get_if(j, "px", s.px);
  get_if(j, "py", s.py);
  get_if(j, "bearing_std", s.bearing_std);
  get_if(j, "range_std", s.range_std);
  get_if(j, "detect_prob", s.detect_prob);
  get_if(j, "clutter_rate", s.clutter_rate);
  get_if(j, "range_max", s.range_max);
  return s;
}

void load_scenario_section(const json& j, ScenarioConfig& cfg) {
  check_keys(j, "scenario",
             {"duration", "dt", "region", "birth_period", "max_births_per_epoch", "speed",
              "accel_std", "seed", "num_sensors", "sensor_defaults", "sensors"});
  get_if(j, "duration", cfg.duration);
  get_if(j, "dt", cfg.dt);
  if (auto it = j.find("region"); it != j.end()) {
    if (!it->is_array() || it->size() != 4) {
      throw std::runtime_error("scenario.region must be [x_min, x_max, y_min, y_max]");
    }
    cfg.region.x_min = (*it)[0].get<double>();
    cfg.region.x_max = (*it)[1].get<double>();
    cfg.region.y_min = (*it)[2].get<double>();
    cfg.region.y_max = (*it)[3].get<double>();
  }
  get_if(j, "birth_period", cfg.birth_period);
  get_if(j, "max_births_per_epoch", cfg.max_births_per_epoch);
  get_if(j, "speed", cfg.speed);
  if (auto it = j.find("accel_std"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) {
      throw std::runtime_error("scenario.accel_std must be [std_x, std_y]");
    }
    cfg.accel_std_x = (*it)[0].get<double>();
    cfg.accel_std_y = (*it)[1].get<double>();
  }
  get_if(j, "seed", cfg.seed);

  const bool has_count = j.contains("num_sensors") || j.contains("sensor_defaults");
  const bool has_list = j.contains("sensors");
  if (has_count && has_list) {
    throw std::runtime_error("scenario: give either num_sensors (ring layout) or sensors, not both");
  }
  if (has_list) {
    cfg.sensors.clear();
    int index = 0;
    for (const json& js : j.at("sensors")) cfg.sensors.push_back(parse_sensor(js, index++));
  } else {
    int count = 8;
    double bearing_std = 0.25, range_std = 10.0, detect_prob = 0.95, clutter_rate = 10.0,
           range_max = 20000.0;
    get_if(j, "num_sensors", count);
    if (auto it = j.find("sensor_defaults"); it != j.end()) {
      check_keys(*it, "scenario.sensor_defaults",
                 {"bearing_std", "range_std", "detect_prob", "clutter_rate", "range_max"});
      get_if(*it, "bearing_std", bearing_std);
      get_if(*it, "range_std", range_std);
      get_if(*it, "detect_prob", detect_prob);
      get_if(*it, "clutter_rate", clutter_rate);
      get_if(*it, "range_max", range_max);
    }
    cfg.sensors = boundary_sensors(cfg.region, count, bearing_std, range_std, detect_prob,
                                   clutter_rate, range_max);
  }
}

void load_filter_section(const json& j, FilterConfig& cfg) {
  check_keys(j, "filter",
             {"survival_prob", "track_particles", "assoc_samples", "belief_prune", "belief_cap",
              "extract_threshold"});
  get_if(j, "survival_prob", cfg.survival_prob);
  get_if(j, "track_particles", cfg.track_particles);
  get_if(j, "assoc_samples", cfg.assoc_samples);
  get_if(j, "belief_prune", cfg.belief_prune);
  get_if(j, "belief_cap", cfg.belief_cap);
  get_if(j, "extract_threshold", cfg.extract_threshold);
}

void load_birth_section(const json& j, RunConfig& run) {
  BirthConfig& cfg = run.birth;
  check_keys(j, "birth",
             {"num_chains", "chain_length", "r_b_max", "lambda_b", "tau_assoc", "gate",
              "max_missed", "prune_threshold", "cap", "spatial_particles", "velocity_std"});
  get_if(j, "num_chains", cfg.num_chains);
  get_if(j, "chain_length", cfg.chain_length);
  get_if(j, "r_b_max", cfg.r_b_max);
  get_if(j, "lambda_b", cfg.lambda_b);
  get_if(j, "tau_assoc", cfg.tau_assoc);
  if (auto it = j.find("gate"); it != j.end()) {
    check_keys(*it, "birth.gate", {"mode", "threshold"});
    std::string mode = "off";
    get_if(*it, "mode", mode);
    cfg.gate.mode = parse_gate_mode(mode);
    get_if(*it, "threshold", cfg.gate.threshold);
  }
  get_if(j, "max_missed", cfg.max_missed);
  get_if(j, "prune_threshold", cfg.prune_threshold);
  get_if(j, "cap", cfg.cap);
  get_if(j, "spatial_particles", cfg.spatial_particles);
  get_if(j, "velocity_std", run.birth_velocity_std);
}

void load_toggles_section(const json& j, Toggles& t) {
  check_keys(j, "toggles", {"preprune", "gate", "memoize", "prune_cap", "skip_miss"});
  get_if(j, "preprune", t.preprune);
  get_if(j, "gate", t.gate);
  get_if(j, "memoize", t.memoize);
  get_if(j, "prune_cap", t.prune_cap);
  get_if(j, "skip_miss", t.skip_miss);
}

void load_metrics_section(const json& j, OspaParams& p) {
  check_keys(j, "metrics", {"cutoff", "order", "window", "weight_power"});
  get_if(j, "cutoff", p.cutoff);
  get_if(j, "order", p.order);
  get_if(j, "window", p.window);
  get_if(j, "weight_power", p.weight_power);
}

void load_output_section(const json& j, RunConfig& cfg) {
  check_keys(j, "output", {"dir", "label", "serial"});
  get_if(j, "dir", cfg.output_dir);
  get_if(j, "label", cfg.label);
  get_if(j, "serial", cfg.serial);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  check_keys(j, "(top level)", {"scenario", "filter", "birth", "toggles", "metrics", "output"});

  RunConfig cfg;
  cfg.scenario = default_scenario(cfg.scenario.seed);
  if (auto it = j.find("scenario"); it != j.end()) load_scenario_section(*it, cfg.scenario);
  if (auto it = j.find("filter"); it != j.end()) load_filter_section(*it, cfg.filter);
  if (auto it = j.find("birth"); it != j.end()) load_birth_section(*it, cfg);
  if (auto it = j.find("toggles"); it != j.end()) load_toggles_section(*it, cfg.toggles);
  if (auto it = j.find("metrics"); it != j.end()) load_metrics_section(*it, cfg.ospa);
  if (auto it = j.find("output"); it != j.end()) load_output_section(*it, cfg);
  return cfg;
}

GateConfig parse_gate_spec(const std::string& spec) {
  GateConfig gate;
  const std::size_t colon = spec.find(':');
  const std::string mode = spec.substr(0, colon);
  gate.mode = parse_gate_mode(mode);
  if (colon == std::string::npos) {
    if (gate.mode != GateMode::off) {
      throw std::runtime_error("gate spec '" + spec + "' needs a threshold, e.g. euclidean:4000");
    }
    return gate;
  }
  try {
    gate.threshold = std::stod(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::runtime_error("gate spec '" + spec + "' has a malformed threshold");
  }
  return gate;
}

}  // namespace lmb

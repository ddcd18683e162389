#pragma once

#include <string>

#include "lmb/harness.hpp"

namespace lmb {

// Loads a run configuration from a JSON document with sections
// scenario / filter / birth / toggles / metrics / output. Every key is
// optional and defaults to the library defaults; unknown keys are errors so
// typos cannot silently fall back to defaults.
RunConfig load_run_config(const std::string& path);

// "mode:threshold" (e.g. "euclidean:4000"); bare "off" is accepted.
GateConfig parse_gate_spec(const std::string& spec);

}  // namespace lmb

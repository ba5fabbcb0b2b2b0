#pragma once

#include <string_view>

#include "cgpdf/app/config.hpp"

namespace cgpdf::app {

// Runs simulate | estimate | compare | diagnose, writing artifacts and
// manifest.json under cfg.out_dir. Returns 0, or 4 when `check` is set and
// a recorded check failed. ConfigError propagates; NumericalError
// propagates after the manifest has recorded it.
int run_command(std::string_view name, const RunConfig& cfg, bool check);

}  // namespace cgpdf::app

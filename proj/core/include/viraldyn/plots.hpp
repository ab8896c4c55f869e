#pragma once

#include <string>

namespace viraldyn {

// Each emitter validates the CSV header and writes a standalone python
// script that references the CSV by a path relative to the script location.

// four panels: T, I, V, A against time
void emit_trajectory_plot(const std::string& csv_path, const std::string& script_path);

// regime vs swept parameter as a step plot
void emit_sweep_plot(const std::string& csv_path, const std::string& script_path);

// infected-age profiles i_j(theta)
void emit_age_profile_plot(const std::string& csv_path, const std::string& script_path);

} // namespace viraldyn

#pragma once

#include <string>
#include <vector>

#include "viraldyn/agesim.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/trajectory.hpp"

namespace viraldyn {

// shortest decimal that parses back to the same double
std::string format_double(double x);

// columns: t, T_1..T_n, I_1..I_n, V, A, then one column per diagnostic
void write_trajectory_csv(const std::string& path, const Scenario& s,
                          const TrajectoryRecord& rec);

// columns: theta, i_1..i_n
void write_age_slice_csv(const std::string& path, const Scenario& s, const SystemState& st);

std::vector<std::string> read_csv_header(const std::string& path);

} // namespace viraldyn

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace viraldyn {

struct TrajectorySample {
    double t = 0.0;
    std::vector<double> T; // per class
    std::vector<double> I; // per class, total infected mass
    double V = 0.0;
    double A = 0.0;
    std::vector<double> diag; // one value per requested diagnostic, NaN if undefined
};

struct TrajectoryRecord {
    std::vector<std::string> diag_names;
    std::vector<TrajectorySample> samples;
    size_t clamp_count = 0;        // roundoff undershoots pushed back to 0
    bool started_in_box = false;   // state-space box membership at t = 0
    double box_entry_time = -1.0;  // first sampled time inside the box, -1 if never
    double first_box_exit = -1.0;  // first sampled time outside after having been in
    std::vector<std::string> notes;
};

} // namespace viraldyn

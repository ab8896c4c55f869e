#pragma once

#include <string>
#include <vector>

#include "viraldyn/equilibria.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/thresholds.hpp"

namespace viraldyn {

// One evaluated sweep point. On a per-point solver failure the numbers stay
// NaN and `error` carries the message; the sweep itself still completes.
struct SweepRow {
    size_t index = 0;
    double value = 0.0;
    std::vector<double> r_per_class;
    double r0 = 0.0;
    double r_star = 0.0;
    bool has_r_an = false;
    double r_an = 0.0;
    std::string regime;
    bool e_star_present = false;
    std::vector<double> e_star_t;
    double e_star_v = 0.0;
    bool e_hat_present = false;
    std::vector<double> e_hat_t;
    double e_hat_v = 0.0;
    double e_hat_a = 0.0;
    std::string error;
};

struct SweepResult {
    std::string param;
    std::vector<SweepRow> rows;
};

// Dotted path into the scenario json, e.g. "classes[0].incidence.beta",
// "globals.k", "classes[0].kernel.production.omega". Must address a number.
SweepResult run_sweep(const Scenario& base, const std::string& param_path, double lo, double hi,
                      size_t steps, bool log_scale, unsigned n_threads = 0);

void write_sweep_csv(const std::string& path, const Scenario& base, const SweepResult& result);

} // namespace viraldyn

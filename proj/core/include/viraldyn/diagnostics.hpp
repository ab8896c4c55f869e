#pragma once

#include <limits>
#include <vector>

#include "viraldyn/agesim.hpp"
#include "viraldyn/ddesim.hpp"
#include "viraldyn/equilibria.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/trajectory.hpp"

namespace viraldyn {

// H(x) = x - 1 - ln x; non-negative, zero only at 1.
double h_function(double x);

// Result of a convergence functional. Not every state is in the domain:
// ratios need strictly positive components, so samples outside report
// defined=false instead of an extrapolated number. Ratios that underflow
// the floor (1e-300) are clamped and flagged.
struct FunctionalValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
    bool floored = false;
};

// Evaluates the convergence certificates along states living on a fixed age
// grid; survival and forward-production weights are cached per class.
class DiagnosticsEvaluator {
  public:
    DiagnosticsEvaluator(const Scenario& s, double dtheta, size_t n_nodes);

    double dtheta() const { return dtheta_; }
    size_t n_nodes() const { return n_nodes_; }

    // distance-to-rest functional for the uninfected state; zero exactly
    // there, decreasing along trajectories when r0 <= 1
    double lyapunov_w(const SystemState& st) const;

    // same for the immune-free state (needs its components strictly
    // positive in the state) and the antibody state
    FunctionalValue lyapunov_w1(const SystemState& st, const SteadyState& e_star) const;
    FunctionalValue lyapunov_w2(const SystemState& st, const SteadyState& e_hat) const;

    // expected future production plus free virus; grows away from the
    // uninfected state when r0 > 1
    double persistence_phi(const SystemState& st) const;

  private:
    const Scenario* s_;
    double dtheta_ = 0.0;
    size_t n_nodes_ = 0;
    std::vector<std::vector<double>> gamma_; // [class][node]
    std::vector<std::vector<double>> sigma_; // [class][node]

    void check_grid(const SystemState& st) const;
    double cell_ratio_integral(size_t j, double t_from, double t_to, double v_ref) const;
};

// Age density of a delay run at time t, rebuilt on a fresh grid: ages
// younger than t replay the recorded boundary inflow along characteristics,
// older ages transport the initial profile.
SystemState reconstruct_state(const Scenario& s, const DdeSimulator& sim, double t, double dtheta,
                              double theta_max);

struct DescentReport {
    double max_slope = -std::numeric_limits<double>::infinity();
    double first_violation_time = -1.0;
    size_t defined_samples = 0;
    bool passed = true;
};

// Finite-difference monotonicity audit of one diagnostics column.
DescentReport descent_check(const TrajectoryRecord& rec, size_t diag_index, double slope_tol);

} // namespace viraldyn

#pragma once

#include <functional>
#include <vector>

#include "viraldyn/scenario.hpp"
#include "viraldyn/trajectory.hpp"

namespace viraldyn {

// Full state: cells, infected-age densities on a uniform grid, virions,
// antibodies. i[j][k] is the class-j density at age k*dtheta.
struct SystemState {
    double t = 0.0;
    std::vector<double> T;
    std::vector<std::vector<double>> i;
    double V = 0.0;
    double A = 0.0;
    double dtheta = 0.0;
};

// Absorbing box implied by mass balance: trajectories that start inside
// stay inside (up to scheme error), ones outside fall in after a burn-in.
struct InvariantBox {
    std::vector<double> t_cap; // lambda_j/d_j per class
    double mass_cap = 0.0;     // cells plus infected mass
    double v_cap = 0.0;
    double a_cap = 0.0;
};

InvariantBox invariant_box(const Scenario& s);
bool inside_box(const InvariantBox& box, const std::vector<double>& T,
                const std::vector<double>& I, double V, double A, double slack = 1e-6);

using SampleHook = std::function<void(const SystemState&, TrajectorySample&)>;

// Method-of-characteristics integrator. Time step is locked to the age
// step, so transport along characteristics is applied as exact per-cell
// survival factors; only the (T, V, A) coupling carries scheme error
// (explicit trapezoidal, second order).
class AgeSimulator {
  public:
    explicit AgeSimulator(const Scenario& s);

    double dtheta() const { return dtheta_; }
    double theta_max() const { return theta_max_; }
    size_t n_nodes() const { return n_nodes_; } // grid nodes including age 0

    // tail rule: age beyond which the remaining production mass is below
    // tail_tol * c, capped at 400/delta_min
    static double default_theta_max(const Scenario& s);

    SystemState init_state() const;

    void step(SystemState& state) const;

    // shift the class-j profile one age cell with exact survival decay and
    // inject a prescribed boundary density at age 0
    void advance_profile(std::vector<double>& profile, size_t j, double boundary_value) const;

    // production integral sum_j int P_j i_j, exact in P per grid cell for a
    // piecewise-linear density, plus the beyond-grid tail term
    double viral_production(const SystemState& state) const;

    double integral_i(const SystemState& state, size_t j) const;

    TrajectoryRecord run(double t_end, double stride, const SampleHook& hook = {}) const;
    TrajectoryRecord run(SystemState& state, double t_end, double stride,
                         const SampleHook& hook = {}) const;

    const Scenario& scenario() const { return *s_; }

  private:
    const Scenario* s_;
    double dtheta_ = 0.0;
    double theta_max_ = 0.0;
    size_t n_nodes_ = 0;
    // per class
    std::vector<std::vector<double>> transport_; // [j][k]: survival ratio into node k
    std::vector<std::vector<double>> prod_weights_; // nodal weights incl. tail at the last node
    InvariantBox box_;

    mutable size_t clamp_count_ = 0; // reset per run
    void clamp(double& x, double scale, const char* name, double t) const;
};

} // namespace viraldyn

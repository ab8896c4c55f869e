#pragma once

#include <vector>

#include "viraldyn/equilibria.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/trajectory.hpp"

namespace viraldyn {

// Step-node storage of a delay run; enough to evaluate I_j anywhere (cubic
// Hermite) and to rebuild the infected-age density from the boundary values.
struct DdeDenseOutput {
    double dt = 0.0;
    double omega = 0.0;
    std::vector<double> t;
    std::vector<std::vector<double>> T;        // [class][node]
    std::vector<std::vector<double>> I;        // [class][node]
    std::vector<std::vector<double>> dI;       // [class][node] right-hand side values
    std::vector<std::vector<double>> boundary; // [class][node] h_j(T_j, V)
    std::vector<double> V, A;
};

// Single-delay reduction: valid when every class has constant mortality and
// delayed-constant production with one shared onset age omega. Integrates
// with the method of steps; the step divides omega exactly, so every delay
// lookup lands on a stored node.
class DdeSimulator {
  public:
    explicit DdeSimulator(const Scenario& s); // throws validation_error if not reducible

    double dt() const { return dt_; }
    double omega() const { return omega_; }

    // I_j(0): tabulated history at 0, else the explicit constant, else the
    // total mass of the initial age profile
    double initial_i(size_t j) const { return i0_[j]; }

    TrajectoryRecord run(double t_end, double stride);

    const DdeDenseOutput& dense() const { return dense_; }

    double history_value(size_t j, double t) const; // t <= 0
    double i_interp(size_t j, double t) const;      // Hermite between nodes
    double boundary_interp(size_t j, double t) const;

  private:
    const Scenario* s_;
    double dt_ = 0.0;
    double omega_ = 0.0;
    long long delay_nodes_ = 0; // omega / dt
    std::vector<double> delta_, discounted_p_; // per class: delta*, P* e^(-delta* omega)
    std::vector<double> i0_;
    DdeDenseOutput dense_;

    double delayed_i(size_t j, long long node) const; // node may be negative
};

// Max scale-relative residual of the reduced right-hand side at a steady
// state, with I_j = boundary_j / delta_j (the integral of the age profile).
double equilibrium_check_dde(const Scenario& s, const SteadyState& ss);

} // namespace viraldyn

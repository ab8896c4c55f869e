#pragma once

#include <vector>

#include "viraldyn/scenario.hpp"

namespace viraldyn {

enum class SteadyKind { InfectionFree, ImmuneFree, AntibodyImmune };

// A rest point of the full system. The infected-age density at a steady
// state is boundary[j] * sigma_j(theta), so only the amplitude is stored.
struct SteadyState {
    SteadyKind kind = SteadyKind::InfectionFree;
    bool present = true; // false: ruled out by the threshold sign test
    std::vector<double> T;
    double V = 0.0;
    double A = 0.0;
    std::vector<double> boundary; // h_j(T_j, V) per class
    double max_residual = 0.0;    // scale-relative, from steady_state_residual
};

// Unique T solving lambda_j - d_j*T - h_j(T, V) = 0; decreasing in V,
// equals lambda_j/d_j at V = 0. Closed forms for bilinear and saturated
// incidence, a bracketed solve on (0, lambda_j/d_j] otherwise.
double nullcline_f(const Scenario& s, size_t j, double V);

// Per-virion infection pressure along the nullcline: hbar_j(f_j(V), V).
double psi(const Scenario& s, size_t j, double V);

// Net per-virion balance whose positive root is the immune-free virion
// level: sum_j N_j psi_j(V) - c. Strictly decreasing when incidence decays.
double virion_balance(const Scenario& s, double V);

// Same balance along the antibody nullcline V = (b/k)(h + A), minus the
// neutralization loss: sum_j N_j psi_j((b/k)(h+A)) - c - q*A.
double antibody_balance(const Scenario& s, double A);

SteadyState infection_free(const Scenario& s);

// present=false when virion_balance(0) <= 0 (no net growth at extinction).
SteadyState solve_immune_free(const Scenario& s);

// present=false when antibody_balance(0) <= 0. V is set algebraically from
// the antibody nullcline, never solved for.
SteadyState solve_antibody(const Scenario& s);

// Max residual of the full right-hand side at the steady state, each
// component relative to its natural scale. Also stored on the returned states.
double steady_state_residual(const Scenario& s, const SteadyState& ss);

// Age profile of the steady state for class j.
double steady_profile(const Scenario& s, const SteadyState& ss, size_t j, double theta);

} // namespace viraldyn

#pragma once

#include <utility>
#include <vector>

#include "viraldyn/scenario.hpp"

namespace viraldyn {

// Which rest point attracts, per the threshold ordering of r0 and r_star.
enum class Regime { InfectionFree, ImmuneFree, AntibodyImmune };

const char* regime_name(Regime r);

struct ThresholdReport {
    std::vector<double> r_per_class;
    double r0 = 0.0;
    double r_star = 0.0;
    bool has_r_an = false; // needs the immune-free virion level
    double r_an = 0.0;
    Regime regime = Regime::InfectionFree;
    // within 1e-9 of a threshold crossing; classification is then fragile
    bool near_r0_boundary = false;
    bool near_rstar_boundary = false;
};

// Per-class contribution: (N_j/c) * dh_j/dV at (lambda_j/d_j, 0).
std::vector<double> r_per_class(const Scenario& s);

// Sum of the per-class numbers, fixed summation order.
double r0(const Scenario& s);

// Same sum but evaluated on the infection nullcline at the antibody
// activation level V = bh/k: (1/c) sum N_j hbar_j(f_j(bh/k), bh/k).
double r_star(const Scenario& s);

// Antibody expansion number at a given immune-free virion level: kV*/(bh).
double r_an(const Scenario& s, double v_star);

// (r0, r_star) by the closed forms available for constant mortality,
// delayed-constant production and saturated (or bilinear) incidence.
// Throws validation_error when the scenario lacks that shape.
std::pair<double, double> dde_closed_forms(const Scenario& s);

Regime classify(const Scenario& s);

// Full report; solves the immune-free state for r_an when r0 > 1.
ThresholdReport threshold_report(const Scenario& s);

} // namespace viraldyn

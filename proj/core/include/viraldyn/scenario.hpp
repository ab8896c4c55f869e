#pragma once

#include <string>
#include <vector>

#include "viraldyn/incidence.hpp"
#include "viraldyn/kernels.hpp"

namespace viraldyn {

// One target-cell class: supply, natural death, how it gets infected, and
// what an infected cell of this class does afterwards.
struct ClassSpec {
    std::string name;
    double lambda = 0.0; // cell supply, cells/ml/day
    double d = 0.0;      // uninfected death rate, 1/day
    IncidenceModel incidence;
    AgeKernel kernel;
};

// Shared virus/antibody parameters.
struct Globals {
    double c = 0.0; // virion clearance, 1/day
    double q = 0.0; // neutralization rate per antibody unit
    double k = 0.0; // antibody activation rate
    double h = 0.0; // activation half-saturation
    double b = 0.0; // antibody decay, 1/day
};

// Initial infected-age density i0(theta) for one class.
struct ProfileSpec {
    enum class Kind { Zero, Exponential, BoundaryMatched, Tabulated };
    Kind kind = Kind::Zero;
    double amplitude = 0.0; // Exponential: amplitude * exp(-rate*theta)
    double rate = 0.0;
    std::vector<double> theta; // Tabulated: piecewise linear, zero beyond
    std::vector<double> value;
};

// Delay-history for one class on [-omega, 0]; Constant extends I(0)
// backwards unless an explicit value is given.
struct HistorySpec {
    enum class Kind { Constant, Tabulated };
    Kind kind = Kind::Constant;
    bool has_value = false;
    double value = 0.0;
    std::vector<double> t; // Tabulated: ascending, covering [-omega, 0]
    std::vector<double> value_tab;
};

struct InitialData {
    std::vector<double> T0; // per class
    double V0 = 0.0;
    double A0 = 0.0;
    std::vector<ProfileSpec> profile; // per class
    std::vector<HistorySpec> history; // per class
};

// Numerical knobs; zeros mean "derive a default".
struct Numerics {
    double dtheta = 0.01;    // age grid resolution, days
    double theta_max = 0.0;  // 0: from the kernel tail rule
    double dt = 0.0;         // 0: lockstep with dtheta (age) / delay-aligned (dde)
    double tail_tol = 1e-10; // tail cutoff for theta_max, relative to c
    double root_x_tol = 1e-12;
    double root_f_tol_rel = 1e-10; // residual tolerance relative to c
    bool have_v_bracket = false;   // user bracket for the virion equilibrium
    double v_bracket_lo = 0.0;     // (needed when incidence does not decay)
    double v_bracket_hi = 0.0;
};

struct Scenario {
    std::string name;
    std::string provenance; // free text travelling with the parameter set
    std::vector<ClassSpec> classes;
    Globals globals;
    InitialData initial;
    Numerics numerics;
    std::vector<std::string> warnings; // filled by validation (not serialized)

    size_t n_classes() const { return classes.size(); }
};

// JSON I/O. Errors carry the offending field path. Numeric fields survive a
// load -> serialize -> load cycle bit-exactly.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& s);

// Reducible shape: constant per-class mortality, delayed-constant production,
// one shared onset age. Such systems admit the single-delay reduction.
bool is_reducible(const Scenario& s);
double shared_omega(const Scenario& s); // throws validation_error when not reducible

// i0 evaluation and its total mass (used for default delay histories).
double profile_value(const Scenario& s, size_t j, double theta);
double profile_integral(const Scenario& s, size_t j);

} // namespace viraldyn

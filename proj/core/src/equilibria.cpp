#include "viraldyn/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <tuple>

#include "viraldyn/errors.hpp"
#include "viraldyn/rootfind.hpp"

namespace viraldyn {

namespace {

// crude state-space bound used only to seed bracket expansion: total cell
// mass settles below sum(lambda)/min(d, delta_min)
double mass_bound(const Scenario& s) {
    double lam_sum = 0.0;
    double dbar = std::numeric_limits<double>::infinity();
    for (const auto& cl : s.classes) {
        lam_sum += cl.lambda;
        dbar = std::min(dbar, std::min(cl.d, cl.kernel.delta_min()));
    }
    return lam_sum / dbar;
}

double production_bound(const Scenario& s) {
    double sup = 0.0;
    for (const auto& cl : s.classes) {
        double cap = 400.0 / cl.kernel.delta_min();
        sup = std::max(sup, cl.kernel.production_sup(cap));
    }
    return sup;
}

bool incidence_decays(const Scenario& s) {
    for (const auto& cl : s.classes) {
        auto kind = cl.incidence.kind();
        if (kind == IncidenceKind::Bilinear || kind == IncidenceKind::Tabulated) return false;
    }
    return true;
}

// expand [0, hi] until f(hi) < 0; when monotone is not guaranteed, scan for
// multiple sign changes and refuse to pick one silently
std::pair<double, double> expanding_bracket(const Scenario& s,
                                            const std::function<double(double)>& f, double hi0,
                                            const char* what) {
    double hi = std::max(hi0, 1.0);
    int doublings = 0;
    while (f(hi) >= 0.0) {
        hi *= 2.0;
        if (++doublings > 60) {
            std::ostringstream os;
            os << what << ": no sign change found up to " << hi
               << "; supply numerics.v_bracket for non-decaying incidence";
            throw solver_error(os.str());
        }
    }
    if (incidence_decays(s)) return {0.0, hi};
    // non-decaying incidence: uniqueness is not guaranteed, audit the bracket
    const int scan = 256;
    double prev_x = 0.0, prev_f = f(0.0);
    double lo = 0.0, sub_hi = hi;
    int changes = 0;
    for (int i = 1; i <= scan; ++i) {
        double x = hi * static_cast<double>(i) / scan;
        double fx = f(x);
        if (prev_f > 0.0 && fx <= 0.0) {
            ++changes;
            lo = prev_x;
            sub_hi = x;
        } else if (prev_f <= 0.0 && fx > 0.0) {
            ++changes;
        }
        prev_x = x;
        prev_f = fx;
    }
    if (changes > 1) {
        std::ostringstream os;
        os << what << ": " << changes
           << " sign changes found on [0, " << hi
           << "]; root is not unique, supply numerics.v_bracket";
        throw solver_error(os.str());
    }
    return {lo, sub_hi};
}

} // namespace

double nullcline_f(const Scenario& s, size_t j, double V) {
    if (j >= s.classes.size()) throw std::out_of_range("nullcline_f: class index");
    if (!(V >= 0.0)) throw std::domain_error("nullcline_f: V must be non-negative");
    const ClassSpec& cl = s.classes[j];
    double lam = cl.lambda, d = cl.d;
    if (V == 0.0) return lam / d;
    switch (cl.incidence.kind()) {
    case IncidenceKind::Bilinear: {
        double beta = cl.incidence.as_bilinear()->beta;
        return lam / (d + beta * V);
    }
    case IncidenceKind::Saturated: {
        const auto* p = cl.incidence.as_saturated();
        double sat = 1.0 + p->alpha * V;
        return lam * sat / (d * sat + p->beta * V);
    }
    default:
        break;
    }
    double t_top = lam / d;
    auto g = [&](double T) { return lam - d * T - cl.incidence.evaluate(T, V); };
    // g(0) = lambda > 0 and g(lam/d) = -h <= 0; h vanishing at the top end
    // means V never drains the class, so the rest level survives
    if (g(t_top) >= 0.0) return t_top;
    RootResult r = solve_bracketed(g, 0.0, t_top, 1e-14 * t_top, 1e-13 * lam);
    return r.x;
}

double psi(const Scenario& s, size_t j, double V) {
    return s.classes[j].incidence.hbar(nullcline_f(s, j, V), V);
}

double virion_balance(const Scenario& s, double V) {
    double sum = 0.0;
    for (size_t j = 0; j < s.classes.size(); ++j)
        sum += s.classes[j].kernel.burst_size() * psi(s, j, V);
    return sum - s.globals.c;
}

double antibody_balance(const Scenario& s, double A) {
    double V = (s.globals.b / s.globals.k) * (s.globals.h + A);
    return virion_balance(s, V) - s.globals.q * A;
}

SteadyState infection_free(const Scenario& s) {
    SteadyState ss;
    ss.kind = SteadyKind::InfectionFree;
    for (const auto& cl : s.classes) ss.T.push_back(cl.lambda / cl.d);
    ss.boundary.assign(s.classes.size(), 0.0);
    ss.max_residual = steady_state_residual(s, ss);
    return ss;
}

SteadyState solve_immune_free(const Scenario& s) {
    SteadyState ss;
    ss.kind = SteadyKind::ImmuneFree;
    auto f = [&](double V) { return virion_balance(s, V); };
    if (f(0.0) <= 0.0) {
        ss.present = false;
        return ss;
    }
    double lo, hi;
    if (s.numerics.have_v_bracket) {
        lo = s.numerics.v_bracket_lo;
        hi = s.numerics.v_bracket_hi;
    } else {
        double hi0 = production_bound(s) * mass_bound(s) / s.globals.c;
        std::tie(lo, hi) = expanding_bracket(s, f, hi0, "immune-free equilibrium");
    }
    RootResult r = solve_bracketed(f, lo, hi, s.numerics.root_x_tol,
                                   s.numerics.root_f_tol_rel * s.globals.c);
    ss.V = r.x;
    for (size_t j = 0; j < s.classes.size(); ++j) {
        ss.T.push_back(nullcline_f(s, j, ss.V));
        ss.boundary.push_back(s.classes[j].incidence.evaluate(ss.T[j], ss.V));
    }
    ss.max_residual = steady_state_residual(s, ss);
    return ss;
}

SteadyState solve_antibody(const Scenario& s) {
    SteadyState ss;
    ss.kind = SteadyKind::AntibodyImmune;
    auto g = [&](double A) { return antibody_balance(s, A); };
    double g0 = g(0.0);
    if (g0 <= 0.0) {
        ss.present = false;
        return ss;
    }
    // the linear -qA term caps the root: at A = g(0)/q the balance is already
    // non-positive because the infection pressure only shrinks with A
    double hi = g0 / s.globals.q;
    int doublings = 0;
    while (g(hi) > 0.0) {
        hi *= 2.0;
        if (++doublings > 60)
            throw solver_error("antibody equilibrium: no sign change found; "
                               "infection pressure fails to decay");
    }
    RootResult r = solve_bracketed(g, 0.0, hi, s.numerics.root_x_tol,
                                   s.numerics.root_f_tol_rel * s.globals.c);
    ss.A = r.x;
    ss.V = (s.globals.b / s.globals.k) * (s.globals.h + ss.A);
    for (size_t j = 0; j < s.classes.size(); ++j) {
        ss.T.push_back(nullcline_f(s, j, ss.V));
        ss.boundary.push_back(s.classes[j].incidence.evaluate(ss.T[j], ss.V));
    }
    ss.max_residual = steady_state_residual(s, ss);
    return ss;
}

double steady_state_residual(const Scenario& s, const SteadyState& ss) {
    if (!ss.present) return 0.0;
    double worst = 0.0;
    double production = 0.0;
    for (size_t j = 0; j < s.classes.size(); ++j) {
        const ClassSpec& cl = s.classes[j];
        double hj = cl.incidence.evaluate(ss.T[j], ss.V);
        double cell = cl.lambda - cl.d * ss.T[j] - hj;
        worst = std::max(worst, std::fabs(cell) / cl.lambda);
        // the steady profile is boundary*sigma, so its production integral
        // is boundary*N and the age-transport part is satisfied identically
        production += ss.boundary[j] * cl.kernel.burst_size();
        worst = std::max(worst, std::fabs(hj - ss.boundary[j]) /
                                    std::max(cl.lambda, ss.boundary[j]));
    }
    const Globals& g = s.globals;
    double virion = production - g.c * ss.V - g.q * ss.A * ss.V;
    double v_scale = std::max({production, g.c * ss.V, 1e-300});
    worst = std::max(worst, std::fabs(virion) / v_scale);
    if (ss.A > 0.0) {
        double anti = g.k * ss.A * ss.V / (g.h + ss.A) - g.b * ss.A;
        worst = std::max(worst, std::fabs(anti) / std::max(g.b * ss.A, 1e-300));
    }
    return worst;
}

double steady_profile(const Scenario& s, const SteadyState& ss, size_t j, double theta) {
    if (j >= s.classes.size()) throw std::out_of_range("steady_profile: class index");
    if (!ss.present || ss.boundary[j] == 0.0) return 0.0;
    return ss.boundary[j] * s.classes[j].kernel.survival(theta);
}

} // namespace viraldyn

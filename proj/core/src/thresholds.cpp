#include "viraldyn/thresholds.hpp"

#include <cmath>

#include "viraldyn/equilibria.hpp"
#include "viraldyn/errors.hpp"

namespace viraldyn {

namespace {
constexpr double boundary_tol = 1e-9;
}

const char* regime_name(Regime r) {
    switch (r) {
    case Regime::InfectionFree: return "InfectionFree";
    case Regime::ImmuneFree: return "ImmuneFree";
    case Regime::AntibodyImmune: return "AntibodyImmune";
    }
    return "?";
}

std::vector<double> r_per_class(const Scenario& s) {
    std::vector<double> out;
    out.reserve(s.classes.size());
    for (const auto& cl : s.classes) {
        // hbar at V=0 is the limit dh/dV(T, 0)
        double slope = cl.incidence.hbar(cl.lambda / cl.d, 0.0);
        out.push_back(cl.kernel.burst_size() / s.globals.c * slope);
    }
    return out;
}

double r0(const Scenario& s) {
    double sum = 0.0;
    for (double rj : r_per_class(s)) sum += rj;
    return sum;
}

double r_star(const Scenario& s) {
    double v_act = s.globals.b * s.globals.h / s.globals.k;
    double sum = 0.0;
    for (size_t j = 0; j < s.classes.size(); ++j)
        sum += s.classes[j].kernel.burst_size() * psi(s, j, v_act);
    return sum / s.globals.c;
}

double r_an(const Scenario& s, double v_star) {
    return s.globals.k * v_star / (s.globals.b * s.globals.h);
}

std::pair<double, double> dde_closed_forms(const Scenario& s) {
    if (!is_reducible(s))
        throw validation_error("closed-form thresholds need constant mortality and "
                               "delayed-constant production in every class");
    double bh = s.globals.b * s.globals.h;
    double k = s.globals.k;
    double sum0 = 0.0, sum_star = 0.0;
    for (const auto& cl : s.classes) {
        double beta, alpha;
        switch (cl.incidence.kind()) {
        case IncidenceKind::Saturated:
            beta = cl.incidence.as_saturated()->beta;
            alpha = cl.incidence.as_saturated()->alpha;
            break;
        case IncidenceKind::Bilinear:
            beta = cl.incidence.as_bilinear()->beta;
            alpha = 0.0;
            break;
        default:
            throw validation_error("closed-form thresholds need saturated or bilinear incidence");
        }
        const ProductionSpec& ps = cl.kernel.production_spec();
        double ds = cl.kernel.delta_spec().delta_star;
        double discounted = ps.p_star * std::exp(-ds * ps.omega);
        sum0 += discounted * cl.lambda * beta / (cl.d * ds);
        sum_star += k * discounted * cl.lambda * beta /
                    (ds * (k * cl.d + (cl.d * alpha + beta) * bh));
    }
    return {sum0 / s.globals.c, sum_star / s.globals.c};
}

Regime classify(const Scenario& s) {
    double v0 = r0(s);
    if (v0 <= 1.0) return Regime::InfectionFree;
    return r_star(s) > 1.0 ? Regime::AntibodyImmune : Regime::ImmuneFree;
}

ThresholdReport threshold_report(const Scenario& s) {
    ThresholdReport rep;
    rep.r_per_class = r_per_class(s);
    for (double rj : rep.r_per_class) rep.r0 += rj;
    rep.r_star = r_star(s);
    if (rep.r0 <= 1.0) {
        rep.regime = Regime::InfectionFree;
    } else {
        rep.regime = rep.r_star > 1.0 ? Regime::AntibodyImmune : Regime::ImmuneFree;
        SteadyState es = solve_immune_free(s);
        if (es.present) {
            rep.has_r_an = true;
            rep.r_an = r_an(s, es.V);
        }
    }
    rep.near_r0_boundary = std::fabs(rep.r0 - 1.0) < boundary_tol;
    rep.near_rstar_boundary = std::fabs(rep.r_star - 1.0) < boundary_tol;
    return rep;
}

} // namespace viraldyn

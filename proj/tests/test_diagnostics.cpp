#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"

#include "viraldyn/agesim.hpp"
#include "viraldyn/ddesim.hpp"
#include "viraldyn/diagnostics.hpp"
#include "viraldyn/equilibria.hpp"
#include "viraldyn/errors.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace viraldyn;

namespace {

SystemState make_state(const Scenario& s, double dtheta, size_t n_nodes, std::vector<double> T,
                       double V, double A,
                       const std::function<double(size_t, double)>& density = {}) {
    SystemState st;
    st.t = 0.0;
    st.T = std::move(T);
    st.V = V;
    st.A = A;
    st.dtheta = dtheta;
    for (size_t j = 0; j < s.n_classes(); ++j) {
        std::vector<double> prof(n_nodes, 0.0);
        if (density)
            for (size_t k = 0; k < n_nodes; ++k) prof[k] = density(j, double(k) * dtheta);
        st.i.push_back(std::move(prof));
    }
    return st;
}

// trapezoid of f over the same uniform grid the evaluator uses
double trapz_grid(double dtheta, size_t n_nodes, const std::function<double(double)>& f) {
    double acc = 0.5 * (f(0.0) + f(double(n_nodes - 1) * dtheta));
    for (size_t k = 1; k + 1 < n_nodes; ++k) acc += f(double(k) * dtheta);
    return acc * dtheta;
}

} // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("the h distance is zero only at one") {
    CHECK(h_function(1.0) == 0.0);
    CHECK(h_function(std::exp(1.0)) == doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-15));
    CHECK(h_function(0.2) > 0.0);
    CHECK(h_function(7.0) > 0.0);
    CHECK_THROWS_AS(h_function(0.0), std::domain_error);
    CHECK_THROWS_AS(h_function(-1.0), std::domain_error);
}

TEST_CASE("evaluator and state grids must agree") {
    testutil::OneClassParams p;
    Scenario s = testutil::one_class(p);
    CHECK_THROWS_AS(DiagnosticsEvaluator(s, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(DiagnosticsEvaluator(s, 0.1, 1), std::invalid_argument);

    DiagnosticsEvaluator eval(s, 0.1, 101);
    SystemState st = make_state(s, 0.1, 101, {1e4}, 1.0, 0.0);
    CHECK_NOTHROW(eval.lyapunov_w(st));
    SystemState bad_nodes = make_state(s, 0.1, 100, {1e4}, 1.0, 0.0);
    CHECK_THROWS_AS(eval.lyapunov_w(bad_nodes), std::invalid_argument);
    SystemState bad_dth = make_state(s, 0.2, 101, {1e4}, 1.0, 0.0);
    CHECK_THROWS_AS(eval.lyapunov_w(bad_dth), std::invalid_argument);
    SystemState bad_classes = st;
    bad_classes.i.push_back(st.i[0]);
    CHECK_THROWS_AS(eval.lyapunov_w(bad_classes), std::invalid_argument);
}

TEST_CASE("uninfected-distance functional: zero at rest, closed form in T") {
    testutil::OneClassParams p;
    p.beta = 1e-8;
    Scenario s = testutil::one_class(p);
    double dtheta = 0.1;
    size_t n_nodes = 501;
    DiagnosticsEvaluator eval(s, dtheta, n_nodes);
    const AgeKernel& kern = s.classes[0].kernel;
    double t0 = p.lambda / p.d;
    double n = kern.burst_size();

    SystemState rest = make_state(s, dtheta, n_nodes, {t0}, 0.0, 0.0);
    CHECK(eval.lyapunov_w(rest) == 0.0);

    // saturated incidence at V=0 has hbar proportional to T, so the cell
    // term collapses to N * T0 * h(T/T0)
    for (double frac : {0.5, 0.9, 1.7}) {
        CAPTURE(frac);
        SystemState st = make_state(s, dtheta, n_nodes, {frac * t0}, 0.0, 0.0);
        double expect = n * t0 * h_function(frac);
        CHECK(oracle::rel_diff(eval.lyapunov_w(st), expect) < 1e-10);
    }

    // virions and infected mass enter linearly through gamma
    auto tent = [&](size_t, double th) {
        return th < 1.0 ? 0.0 : (th < 1.5 ? 2.0 * (th - 1.0) : (th < 2.5 ? 2.5 - th : 0.0));
    };
    SystemState st = make_state(s, dtheta, n_nodes, {t0}, 3.0, 0.0, tent);
    double gamma_part = trapz_grid(dtheta, n_nodes,
                                   [&](double th) { return kern.gamma_weight(th) * tent(0, th); });
    CHECK(oracle::rel_diff(eval.lyapunov_w(st), 3.0 + gamma_part) < 1e-8);

    SystemState neg = make_state(s, dtheta, n_nodes, {t0}, -1.0, 0.0);
    CHECK_THROWS_AS(eval.lyapunov_w(neg), std::domain_error);
    SystemState dead = make_state(s, dtheta, n_nodes, {0.0}, 1.0, 0.0);
    CHECK_THROWS_AS(eval.lyapunov_w(dead), std::domain_error);
}

TEST_CASE("immune-free functional: exact zero at its rest state") {
    testutil::OneClassParams p;
    p.beta = 5e-8;
    Scenario s = testutil::one_class(p);
    SteadyState es = solve_immune_free(s);
    REQUIRE(es.present);

    double dtheta = 0.1;
    size_t n_nodes = 501;
    DiagnosticsEvaluator eval(s, dtheta, n_nodes);
    const AgeKernel& kern = s.classes[0].kernel;

    auto steady = [&](size_t, double th) { return es.boundary[0] * kern.survival(th); };
    SystemState at_rest = make_state(s, dtheta, n_nodes, {es.T[0]}, es.V, 0.0, steady);
    FunctionalValue w1 = eval.lyapunov_w1(at_rest, es);
    REQUIRE(w1.defined);
    CHECK_FALSE(w1.floored);
    CHECK(w1.value == 0.0);

    // moving any single component away raises the value
    SystemState v_off = at_rest;
    v_off.V *= 1.5;
    CHECK(eval.lyapunov_w1(v_off, es).value > 0.0);
    SystemState t_off = at_rest;
    t_off.T[0] *= 0.8;
    CHECK(eval.lyapunov_w1(t_off, es).value > 0.0);
    SystemState a_on = at_rest;
    a_on.A = 0.3;
    double qhk = s.globals.q * s.globals.h / s.globals.k;
    CHECK(eval.lyapunov_w1(a_on, es).value == doctest::Approx(qhk * 0.3).epsilon(1e-12));
}

TEST_CASE("immune-free functional: domain boundaries and flooring") {
    testutil::OneClassParams p;
    p.beta = 5e-8;
    Scenario s = testutil::one_class(p);
    SteadyState es = solve_immune_free(s);
    REQUIRE(es.present);
    double dtheta = 0.1;
    size_t n_nodes = 301;
    DiagnosticsEvaluator eval(s, dtheta, n_nodes);

    SystemState no_virus = make_state(s, dtheta, n_nodes, {es.T[0]}, 0.0, 0.0);
    FunctionalValue out = eval.lyapunov_w1(no_virus, es);
    CHECK_FALSE(out.defined);
    CHECK(std::isnan(out.value));

    SystemState no_cells = make_state(s, dtheta, n_nodes, {0.0}, es.V, 0.0);
    CHECK_FALSE(eval.lyapunov_w1(no_cells, es).defined);

    SystemState neg = make_state(s, dtheta, n_nodes, {es.T[0]}, -0.5, 0.0);
    CHECK_THROWS_AS(eval.lyapunov_w1(neg, es), std::domain_error);

    // an empty age density floors every ratio but stays finite
    SystemState hollow = make_state(s, dtheta, n_nodes, {es.T[0]}, es.V, 0.0);
    FunctionalValue fl = eval.lyapunov_w1(hollow, es);
    REQUIRE(fl.defined);
    CHECK(fl.floored);
    CHECK(std::isfinite(fl.value));
    CHECK(fl.value > 0.0);

    // the wrong rest state is a usage error
    SteadyState e0 = infection_free(s);
    CHECK_THROWS_AS(eval.lyapunov_w1(hollow, e0), std::invalid_argument);
    SteadyState absent;
    absent.kind = SteadyKind::ImmuneFree;
    absent.present = false;
    CHECK_THROWS_AS(eval.lyapunov_w1(hollow, absent), std::invalid_argument);
}

TEST_CASE("antibody functional: exact zero at its rest state and a signed A-term") {
    testutil::OneClassParams p;
    p.beta = 5e-7;
    Scenario s = testutil::one_class(p);
    SteadyState eh = solve_antibody(s);
    REQUIRE(eh.present);

    double dtheta = 0.1;
    size_t n_nodes = 501;
    DiagnosticsEvaluator eval(s, dtheta, n_nodes);
    const AgeKernel& kern = s.classes[0].kernel;
    auto steady = [&](size_t, double th) { return eh.boundary[0] * kern.survival(th); };

    SystemState at_rest = make_state(s, dtheta, n_nodes, {eh.T[0]}, eh.V, eh.A, steady);
    FunctionalValue w2 = eval.lyapunov_w2(at_rest, eh);
    REQUIRE(w2.defined);
    CHECK(w2.value == 0.0);

    // the antibody distance term is positive on both sides of A-hat and
    // matches its closed antiderivative
    for (double factor : {0.5, 2.0}) {
        CAPTURE(factor);
        SystemState st = at_rest;
        st.A = factor * eh.A;
        double expect =
            oracle::antibody_term_closed(s.globals.q, s.globals.k, s.globals.h, st.A, eh.A);
        CHECK(expect > 0.0);
        FunctionalValue v = eval.lyapunov_w2(st, eh);
        REQUIRE(v.defined);
        CHECK(oracle::rel_diff(v.value, expect) < 1e-9);
    }

    SystemState no_a = at_rest;
    no_a.A = 0.0;
    CHECK_FALSE(eval.lyapunov_w2(no_a, eh).defined);
    SystemState no_v = at_rest;
    no_v.V = 0.0;
    CHECK_FALSE(eval.lyapunov_w2(no_v, eh).defined);

    SteadyState es = solve_immune_free(s);
    REQUIRE(es.present);
    CHECK_THROWS_AS(eval.lyapunov_w2(at_rest, es), std::invalid_argument);
}

TEST_CASE("persistence functional is virions plus expected future production") {
    testutil::OneClassParams p;
    p.beta = 5e-8;
    Scenario s = testutil::one_class(p);
    double dtheta = 0.1;
    size_t n_nodes = 501;
    DiagnosticsEvaluator eval(s, dtheta, n_nodes);
    const AgeKernel& kern = s.classes[0].kernel;

    SystemState clean = make_state(s, dtheta, n_nodes, {1e4}, 5.0, 0.7);
    CHECK(eval.persistence_phi(clean) == 5.0);

    auto expo = [&](size_t, double th) { return 2.0 * std::exp(-0.4 * th); };
    SystemState st = make_state(s, dtheta, n_nodes, {1e4}, 5.0, 0.7, expo);
    double part = trapz_grid(dtheta, n_nodes,
                             [&](double th) { return kern.gamma_weight(th) * expo(0, th); });
    CHECK(oracle::rel_diff(eval.persistence_phi(st), 5.0 + part) < 1e-8);
}

TEST_CASE("uninfected-distance functional decreases in the clearance regime") {
    testutil::OneClassParams p;
    p.beta = 1e-8;
    Scenario s = testutil::one_class(p);
    s.initial.V0 = 10.0;
    s.numerics.dtheta = 0.1;
    AgeSimulator sim(s);
    DiagnosticsEvaluator eval(s, sim.dtheta(), sim.n_nodes());

    auto hook = [&](const SystemState& st, TrajectorySample& smp) {
        smp.diag.push_back(eval.lyapunov_w(st));
    };
    TrajectoryRecord rec = sim.run(20.0, 2.0, hook);
    REQUIRE(rec.samples.size() == 11);
    double w0 = rec.samples[0].diag[0];
    CHECK(w0 > 0.0);
    DescentReport rep = descent_check(rec, 0, 1e-8 * w0);
    CHECK(rep.passed);
    CHECK(rep.defined_samples == rec.samples.size());
    CHECK(rec.samples.back().diag[0] < w0);
}

TEST_CASE("delay-run state reconstruction matches the age-structured run") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    s.numerics.dtheta = 0.025;
    s.numerics.dt = 0.025;

    AgeSimulator asim(s);
    SystemState native = asim.init_state();
    asim.run(native, 20.0, 20.0);

    DdeSimulator dsim(s);
    dsim.run(20.0, 20.0);

    SystemState rebuilt = reconstruct_state(s, dsim, 20.0, asim.dtheta(), asim.theta_max());
    REQUIRE(rebuilt.i[0].size() == native.i[0].size());
    CHECK(oracle::rel_diff(rebuilt.V, native.V) < 5e-3);
    CHECK(oracle::rel_diff(rebuilt.T[0], native.T[0]) < 5e-3);
    CHECK(oracle::rel_diff(rebuilt.A, native.A) < 5e-3);
    double sup = 0.0, sup_diff = 0.0;
    for (size_t k = 0; k < native.i[0].size(); ++k) {
        sup = std::max(sup, std::fabs(native.i[0][k]));
        sup_diff = std::max(sup_diff, std::fabs(native.i[0][k] - rebuilt.i[0][k]));
    }
    CHECK(sup_diff <= 5e-3 * sup);

    // at t = 0 the rebuilt density is the initial profile on the nose
    SystemState start = reconstruct_state(s, dsim, 0.0, asim.dtheta(), asim.theta_max());
    for (size_t k = 0; k < start.i[0].size(); k += 37) {
        double th = double(k) * asim.dtheta();
        CHECK(start.i[0][k] == doctest::Approx(profile_value(s, 0, th)).epsilon(1e-12));
    }
    CHECK(start.V == s.initial.V0);
    CHECK(start.A == s.initial.A0);
}

TEST_CASE("reconstruction argument checks") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    s.numerics.dt = 0.05;
    DdeSimulator sim(s);
    CHECK_THROWS_AS(reconstruct_state(s, sim, 1.0, 0.05, 10.0), solver_error); // no run yet
    sim.run(5.0, 1.0);
    CHECK_THROWS_AS(reconstruct_state(s, sim, 1.0, 0.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(reconstruct_state(s, sim, 1.0, 0.05, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(reconstruct_state(s, sim, -1.0, 0.05, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(reconstruct_state(s, sim, 9.0, 0.05, 10.0), std::invalid_argument);
}

TEST_CASE("descent audit flags the first rise above tolerance") {
    TrajectoryRecord rec;
    auto add = [&](double t, double v) {
        TrajectorySample smp;
        smp.t = t;
        smp.diag.push_back(v);
        rec.samples.push_back(smp);
    };
    add(0.0, 10.0);
    add(1.0, 8.0);
    add(2.0, std::nan("")); // undefined sample is skipped, not a violation
    add(3.0, 7.0);
    add(4.0, 7.5); // slope +0.5 over [3,4]
    add(5.0, 6.0);

    DescentReport rep = descent_check(rec, 0, 1e-6);
    CHECK_FALSE(rep.passed);
    CHECK(rep.first_violation_time == 4.0);
    CHECK(rep.max_slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.defined_samples == 5);

    DescentReport lax = descent_check(rec, 0, 1.0);
    CHECK(lax.passed);
    CHECK(lax.first_violation_time == -1.0);

    CHECK_THROWS_AS(descent_check(rec, 3, 1e-6), std::invalid_argument);
}

} // TEST_SUITE

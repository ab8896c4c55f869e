#include <cmath>
#include <vector>

#include "doctest.h"

#include "viraldyn/ddesim.hpp"
#include "viraldyn/equilibria.hpp"
#include "viraldyn/errors.hpp"
#include "viraldyn/thresholds.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace viraldyn;

TEST_SUITE("ddesim") {

TEST_CASE("step divides the delay exactly") {
    testutil::OneClassParams p;
    Scenario s = testutil::one_class(p);

    s.numerics.dt = 0.01;
    DdeSimulator a(s);
    CHECK(a.omega() == 0.5);
    CHECK(a.dt() == doctest::Approx(0.01).epsilon(1e-15));

    s.numerics.dt = 0.03; // not a divisor: rounded to omega / 17
    DdeSimulator b(s);
    CHECK(b.dt() == doctest::Approx(0.5 / 17.0).epsilon(1e-15));

    s.numerics.dt = 0.0; // default resolution still divides omega
    DdeSimulator c(s);
    CHECK(c.dt() == doctest::Approx(0.01).epsilon(1e-15));

    Scenario two = testutil::load_bundled("table2_twoclass.json");
    CHECK_THROWS_AS(DdeSimulator{two}, validation_error);
}

TEST_CASE("initial delay mass comes from history or the age profile") {
    testutil::OneClassParams p;

    SUBCASE("empty profile, default history") {
        Scenario s = testutil::one_class(p);
        DdeSimulator sim(s);
        CHECK(sim.initial_i(0) == 0.0);
    }

    SUBCASE("explicit constant history") {
        Scenario s = testutil::one_class(p);
        s.initial.history[0].has_value = true;
        s.initial.history[0].value = 2.5;
        DdeSimulator sim(s);
        CHECK(sim.initial_i(0) == 2.5);
        CHECK(sim.history_value(0, -0.3) == 2.5);
    }

    SUBCASE("profile mass when the history is silent") {
        Scenario s = testutil::one_class(p);
        s.initial.profile[0].kind = ProfileSpec::Kind::Exponential;
        s.initial.profile[0].amplitude = 5.0;
        s.initial.profile[0].rate = 0.25;
        DdeSimulator sim(s);
        CHECK(sim.initial_i(0) == doctest::Approx(20.0).epsilon(1e-12));
    }

    SUBCASE("boundary-matched profile mass is inflow over mortality") {
        Scenario s = testutil::one_class(p);
        s.initial.V0 = 10.0;
        s.initial.profile[0].kind = ProfileSpec::Kind::BoundaryMatched;
        DdeSimulator sim(s);
        double h0 = s.classes[0].incidence.evaluate(s.initial.T0[0], 10.0);
        CHECK(oracle::rel_diff(sim.initial_i(0), h0 / p.delta_star) < 1e-8);
    }

    SUBCASE("tabulated history interpolates and must span the delay") {
        Scenario s = testutil::one_class(p);
        s.initial.history[0].kind = HistorySpec::Kind::Tabulated;
        s.initial.history[0].t = {-0.5, -0.25, 0.0};
        s.initial.history[0].value_tab = {2.0, 4.0, 3.0};
        DdeSimulator sim(s);
        CHECK(sim.initial_i(0) == 3.0);
        CHECK(sim.history_value(0, -0.375) == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(sim.history_value(0, -0.25) == 4.0);
        CHECK(sim.history_value(0, -2.0) == 2.0); // clamped before the table

        s.initial.history[0].t = {-0.3, 0.0}; // too short for omega = 0.5
        s.initial.history[0].value_tab = {1.0, 1.0};
        CHECK_THROWS_WITH_AS(DdeSimulator{s},
                             doctest::Contains("does not cover [-omega, 0]"), validation_error);
    }
}

TEST_CASE("zero-delay reduction matches an independent ODE integration") {
    testutil::OneClassParams p;
    p.beta = 5e-8;
    p.omega = 0.0;
    Scenario s = testutil::one_class(p);
    s.initial.V0 = 10.0;
    s.initial.A0 = 1.0;
    s.numerics.dt = 0.005;
    DdeSimulator sim(s);
    CHECK(sim.omega() == 0.0);
    CHECK(sim.dt() == 0.005);

    double t_end = 50.0;
    TrajectoryRecord rec = sim.run(t_end, t_end);
    REQUIRE(rec.samples.size() >= 2);
    const TrajectorySample& last = rec.samples.back();
    CHECK(last.t == doctest::Approx(t_end).epsilon(1e-12));

    // plain ODE system once the delay vanishes; fine RK4 as the reference
    auto& inc = s.classes[0].incidence;
    oracle::OdeRhs rhs = [&](double, const std::vector<double>& y) {
        double T = std::max(0.0, y[0]), I = y[1], V = std::max(0.0, y[2]), A = std::max(0.0, y[3]);
        double h = inc.evaluate(T, V);
        return std::vector<double>{p.lambda - p.d * T - h, h - p.delta_star * I,
                                   p.p_star * I - p.c * V - p.q * A * V,
                                   p.k * A * V / (p.h + A) - p.b * A};
    };
    auto ref = oracle::rk4_run(rhs, {s.initial.T0[0], 0.0, 10.0, 1.0}, t_end, 0.001, 50000);
    const auto& y = ref.y.back();
    CHECK(oracle::rel_diff(last.T[0], y[0]) < 5e-4);
    CHECK(std::fabs(last.I[0] - y[1]) <= 5e-4 * std::max(1.0, y[1]));
    CHECK(oracle::rel_diff(last.V, y[2]) < 5e-4);
    CHECK(std::fabs(last.A - y[3]) <= 5e-4 * std::max(1.0, y[3]));
}

TEST_CASE("rest states are fixed points of the delay scheme") {
    testutil::OneClassParams p;

    SUBCASE("immune-free") {
        p.beta = 5e-8;
        Scenario s = testutil::one_class(p);
        SteadyState es = solve_immune_free(s);
        REQUIRE(es.present);
        s.initial.T0 = {es.T[0]};
        s.initial.V0 = es.V;
        s.initial.A0 = 0.0;
        s.initial.history[0].has_value = true;
        s.initial.history[0].value = es.boundary[0] / p.delta_star;
        s.numerics.dt = 0.01;
        DdeSimulator sim(s);
        TrajectoryRecord rec = sim.run(30.0, 10.0);
        const auto& last = rec.samples.back();
        CHECK(oracle::rel_diff(last.T[0], es.T[0]) < 1e-9);
        CHECK(oracle::rel_diff(last.V, es.V) < 1e-8);
        CHECK(oracle::rel_diff(last.I[0], es.boundary[0] / p.delta_star) < 1e-8);
        CHECK(last.A == 0.0);
    }

    SUBCASE("antibody") {
        p.beta = 5e-7;
        Scenario s = testutil::one_class(p);
        SteadyState eh = solve_antibody(s);
        REQUIRE(eh.present);
        s.initial.T0 = {eh.T[0]};
        s.initial.V0 = eh.V;
        s.initial.A0 = eh.A;
        s.initial.history[0].has_value = true;
        s.initial.history[0].value = eh.boundary[0] / p.delta_star;
        s.numerics.dt = 0.01;
        DdeSimulator sim(s);
        TrajectoryRecord rec = sim.run(30.0, 10.0);
        const auto& last = rec.samples.back();
        CHECK(oracle::rel_diff(last.T[0], eh.T[0]) < 1e-8);
        CHECK(oracle::rel_diff(last.V, eh.V) < 1e-7);
        CHECK(oracle::rel_diff(last.A, eh.A) < 1e-7);
    }
}

TEST_CASE("long run settles on the classified attractor") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    REQUIRE(classify(s) == Regime::AntibodyImmune);
    SteadyState eh = solve_antibody(s);
    REQUIRE(eh.present);

    s.numerics.dt = 0.01;
    DdeSimulator sim(s);
    TrajectoryRecord rec = sim.run(200.0, 10.0);
    const auto& last = rec.samples.back();
    double ds = s.classes[0].kernel.delta_spec().delta_star;
    CHECK(oracle::rel_diff(last.T[0], eh.T[0]) < 5e-3);
    CHECK(oracle::rel_diff(last.V, eh.V) < 5e-3);
    CHECK(oracle::rel_diff(last.A, eh.A) < 5e-3);
    CHECK(oracle::rel_diff(last.I[0], eh.boundary[0] / ds) < 5e-3);
    CHECK(rec.clamp_count == 0);
}

TEST_CASE("dense output supports node-exact and interpolated lookup") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    s.numerics.dt = 0.01;
    DdeSimulator sim(s);

    CHECK_THROWS_AS(sim.i_interp(0, 1.0), solver_error);
    CHECK_THROWS_AS(sim.boundary_interp(0, 1.0), solver_error);

    sim.run(20.0, 1.0);
    const DdeDenseOutput& d = sim.dense();
    REQUIRE(d.t.size() == 2001);
    CHECK(d.t.back() == doctest::Approx(20.0).epsilon(1e-14));
    REQUIRE(d.I[0].size() == d.t.size());
    REQUIRE(d.boundary[0].size() == d.t.size());

    // node hits reproduce the stored values
    for (size_t k : {size_t(0), size_t(777), size_t(2000)}) {
        CHECK(sim.i_interp(0, d.t[k]) == doctest::Approx(d.I[0][k]).epsilon(1e-12));
        CHECK(sim.boundary_interp(0, d.t[k]) == doctest::Approx(d.boundary[0][k]).epsilon(1e-12));
    }
    // between nodes: boundary is linear, i is cubic with matching slopes
    size_t k = 500;
    double tm = d.t[k] + 0.5 * d.dt;
    CHECK(sim.boundary_interp(0, tm) ==
          doctest::Approx(0.5 * (d.boundary[0][k] + d.boundary[0][k + 1])).epsilon(1e-12));
    double im = sim.i_interp(0, tm);
    double lin = 0.5 * (d.I[0][k] + d.I[0][k + 1]);
    CHECK(std::fabs(im - lin) <= 0.5 * std::fabs(d.I[0][k + 1] - d.I[0][k]) + 1e-6);
    // off the ends
    CHECK(sim.i_interp(0, -1.0) == sim.history_value(0, -1.0));
    CHECK(sim.i_interp(0, 1e9) == d.I[0].back());

    CHECK_THROWS_AS(sim.run(0.0, 1.0), std::domain_error);
}

TEST_CASE("reduced-system residuals at the rest states") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    SteadyState e0 = infection_free(s);
    CHECK(equilibrium_check_dde(s, e0) == 0.0);

    SteadyState es = solve_immune_free(s);
    REQUIRE(es.present);
    CHECK(equilibrium_check_dde(s, es) <= 1e-8);

    SteadyState eh = solve_antibody(s);
    REQUIRE(eh.present);
    CHECK(equilibrium_check_dde(s, eh) <= 1e-8);

    SteadyState off = eh;
    off.V *= 1.2;
    CHECK(equilibrium_check_dde(s, off) > 1e-3);
}

TEST_CASE("sampling follows the stride and the box flags are tracked") {
    Scenario s = testutil::load_bundled("reducible_demo.json");
    s.numerics.dt = 0.01;
    DdeSimulator sim(s);
    TrajectoryRecord rec = sim.run(10.0, 1.0);
    REQUIRE(rec.samples.size() == 11);
    for (size_t m = 0; m < rec.samples.size(); ++m)
        CHECK(std::fabs(rec.samples[m].t - double(m)) <= 1e-12);
    CHECK(rec.started_in_box);
    CHECK(rec.box_entry_time == 0.0);
    CHECK(rec.first_box_exit == -1.0);
}

} // TEST_SUITE

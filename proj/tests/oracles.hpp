#pragma once

// Reference numerics kept independent of the library: a from-scratch
// adaptive Simpson rule, finite differences, a fixed-step RK4 integrator,
// and closed forms reduced by hand for the one-class saturated system.
// Tests compare library output against these, never against the library
// itself.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double fa, double m,
                          double fm, double b, double fb, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double both = left + right;
    // second clause: once the discrepancy is at rounding level relative to the
    // local mass, splitting further only chases noise
    if (depth <= 0 || std::fabs(both - whole) <= 15.0 * tol ||
        std::fabs(both - whole) <= 1e-13 * std::fabs(both))
        return both + (both - whole) / 15.0;
    return simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, 52);
}

// [a, inf) for integrands with an exponentially decaying tail: expanding
// segments, stop once a segment stops contributing
inline double integrate_tail(const std::function<double(double)>& f, double a,
                             double tol = 1e-13) {
    double total = 0.0, lo = a, len = 1.0;
    for (int seg = 0; seg < 80; ++seg) {
        double add = integrate(f, lo, lo + len, tol);
        total += add;
        lo += len;
        len *= 2.0;
        if (seg > 2 && std::fabs(add) <= tol * std::max(1.0, std::fabs(total))) break;
    }
    return total;
}

inline double deriv_central(const std::function<double(double)>& f, double x, double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

inline double rel_diff(double a, double b) {
    double scale = std::max(std::fabs(a), std::fabs(b));
    return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

struct OdeRun {
    std::vector<double> t;
    std::vector<std::vector<double>> y; // y[i]: state at t[i]
};

using OdeRhs = std::function<std::vector<double>(double, const std::vector<double>&)>;

// classic RK4 with a fixed step; samples every `sample_every` steps
inline OdeRun rk4_run(const OdeRhs& rhs, std::vector<double> y, double t_end, double dt,
                      long long sample_every = 1) {
    OdeRun run;
    run.t.push_back(0.0);
    run.y.push_back(y);
    long long steps = static_cast<long long>(std::llround(t_end / dt));
    size_t n = y.size();
    std::vector<double> k1, k2, k3, k4, tmp(n);
    for (long long s = 1; s <= steps; ++s) {
        double t = static_cast<double>(s - 1) * dt;
        k1 = rhs(t, y);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
        k2 = rhs(t + 0.5 * dt, tmp);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
        k3 = rhs(t + 0.5 * dt, tmp);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
        k4 = rhs(t + dt, tmp);
        for (size_t i = 0; i < n; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (s % sample_every == 0 || s == steps) {
            run.t.push_back(static_cast<double>(s) * dt);
            run.y.push_back(y);
        }
    }
    return run;
}

// one-class saturated system, parameters in the order they appear in the
// model: cells, incidence, burst size, then the shared virus/antibody block
struct SatParams {
    double lambda, d, beta, alpha, n;
    double c, q, k, h, b;
};

// positive root of sum N*psi(V) - c = 0 with psi(V) = beta*lambda/(d(1+aV)+bV)
inline double v_star_closed(const SatParams& p) {
    return (p.n * p.beta * p.lambda / p.c - p.d) / (p.d * p.alpha + p.beta);
}

inline double t_star_closed(const SatParams& p, double v) {
    double sat = 1.0 + p.alpha * v;
    return p.lambda * sat / (p.d * sat + p.beta * v);
}

// antibody level: clearing denominators in N*psi((b/k)(h+A)) - c - qA = 0
// leaves a quadratic; the positive root is recovered from the root product
// to dodge cancellation
inline double a_hat_closed(const SatParams& p) {
    double v0 = p.b * p.h / p.k;
    double v1 = p.b / p.k;
    double slope = p.d * p.alpha + p.beta;
    double d0 = p.d + slope * v0;
    double d1 = slope * v1;
    double c2 = p.q * d1;
    double c1 = p.c * d1 + p.q * d0;
    double c0 = p.c * d0 - p.n * p.beta * p.lambda;
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) throw std::runtime_error("a_hat_closed: no real root");
    double neg_root = (-c1 - std::sqrt(disc)) / (2.0 * c2);
    return c0 / (c2 * neg_root);
}

// antibody distance term of the convergence functional, integrated by hand:
// (q/k) * [ (A^2-Ah^2)/2 - Ah(A-Ah) + h(A-Ah) - h*Ah*ln(A/Ah) ]
inline double antibody_term_closed(double q, double k, double h, double A, double a_hat) {
    return (q / k) * (0.5 * (A * A - a_hat * a_hat) - a_hat * (A - a_hat) + h * (A - a_hat) -
                      h * a_hat * std::log(A / a_hat));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

} // namespace oracle

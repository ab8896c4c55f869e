#include "viraldyn/quadrature.hpp"

#include <array>
#include <cmath>

namespace viraldyn {

namespace {

struct Gauss32 {
    std::array<double, 16> x; // positive abscissae on [-1, 1]
    std::array<double, 16> w;
};

// Newton iteration on Legendre P_32; cheaper to derive once than to carry
// 32 literal constants that nobody can audit.
Gauss32 make_gauss32() {
    constexpr int n = 32;
    Gauss32 g{};
    for (int i = 0; i < n / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        g.x[i] = x;
        g.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

const Gauss32& gauss32() {
    static const Gauss32 g = make_gauss32();
    return g;
}

double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double m,
                     double fm, double b, double fb, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, fa, flm, m, fm);
    double right = simpson(m, fm, frm, b, fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double gauss_legendre32(const std::function<double(double)>& f, double a, double b) {
    const Gauss32& g = gauss32();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < 16; ++i)
        sum += g.w[i] * (f(c - h * g.x[i]) + f(c + h * g.x[i]));
    return sum * h;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = simpson(a, fa, fm, b, fb);
    return adaptive_step(f, a, fa, m, fm, b, fb, whole, abs_tol, max_depth);
}

} // namespace viraldyn

#include "viraldyn/rootfind.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "viraldyn/errors.hpp"

namespace viraldyn {

RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double x_tol, double f_tol, int max_iter) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if (!(flo * fhi < 0.0))
        throw solver_error("solve_bracketed: no sign change on [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");

    double a = lo, b = hi, fa = flo, fb = fhi;
    double x = a, fx = fa;
    int last_side = 0; // -1: b was replaced, +1: a was replaced
    bool force_bisect = false;
    for (int it = 1; it <= max_iter; ++it) {
        // secant through the bracket endpoints; bisect whenever the secant
        // leaves the bracket or keeps hammering the same side (the classic
        // false-position stall on convex functions)
        double mid = 0.5 * (a + b);
        double s = mid;
        if (!force_bisect && fb != fa) {
            s = (a * fb - b * fa) / (fb - fa);
            if (!(s > a && s < b)) s = mid;
        }

        x = s;
        fx = f(x);
        if (fx == 0.0 || std::abs(fx) <= f_tol) return {x, fx, it};
        if (fa * fx < 0.0) {
            b = x;
            fb = fx;
            force_bisect = last_side == -1;
            last_side = -1;
        } else {
            a = x;
            fa = fx;
            force_bisect = last_side == +1;
            last_side = +1;
        }
        const double span_tol =
            x_tol + 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a),
                                                                            std::abs(b));
        if (b - a <= span_tol) {
            // report the endpoint with the smaller residual
            if (std::abs(fa) < std::abs(fb)) return {a, fa, it};
            return {b, fb, it};
        }
    }
    throw solver_error("solve_bracketed: no convergence after " + std::to_string(max_iter) +
                       " iterations (residual " + std::to_string(fx) + ")");
}

} // namespace viraldyn

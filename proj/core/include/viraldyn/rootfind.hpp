#pragma once

#include <functional>

namespace viraldyn {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
};

// Bracketed scalar root solve: secant proposals clipped to the current
// bracket, bisection whenever the secant step stalls or escapes. Requires
// f(lo)·f(hi) <= 0. Stops when the bracket width falls below x_tol or the
// residual magnitude falls below f_tol.
RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double x_tol, double f_tol, int max_iter = 200);

} // namespace viraldyn

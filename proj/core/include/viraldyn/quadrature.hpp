#pragma once

#include <functional>

namespace viraldyn {

// 32-point Gauss-Legendre rule over [a, b]. Exact for polynomials up to
// degree 63; effectively machine-precision for smooth exponential-type
// integrands once |b-a| times the decay rate stays below ~20.
double gauss_legendre32(const std::function<double(double)>& f, double a, double b);

// Adaptive Simpson with absolute tolerance. Used where the integrand is
// cheap and no smoothness structure is known in advance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 48);

} // namespace viraldyn

#pragma once

#include <vector>

namespace viraldyn {

// Age-dependent mortality of infected cells. Piecewise representations are
// exact: the cumulative hazard has a closed form in every case.
enum class DeltaKind { Constant, PiecewiseConstant, Tabulated };

struct DeltaSpec {
    DeltaKind kind = DeltaKind::Constant;
    double delta_star = 0.0; // Constant rate, or late rate of PiecewiseConstant
    double d = 0.0;          // PiecewiseConstant early rate
    double tau = 0.0;        // PiecewiseConstant switch age
    // Tabulated: piecewise-linear rate over theta, constant beyond the table
    std::vector<double> theta;
    std::vector<double> value;
};

// Age-dependent virion production rate of an infected cell.
enum class ProductionKind { Constant, DelayedConstant, DelayedSaturating, ExponentialGrowth, Tabulated };

struct ProductionSpec {
    ProductionKind kind = ProductionKind::Constant;
    double p_star = 0.0; // plateau / asymptotic rate
    double omega = 0.0;  // DelayedConstant onset age
    double r = 0.0;      // DelayedSaturating approach rate
    double theta1 = 0.0; // DelayedSaturating onset age
    // ExponentialGrowth: P(theta) = c0 + amplitude * 10^(exponent * theta)
    double c0 = 0.0;
    double amplitude = 0.0;
    double exponent = 0.0;
    // Tabulated: piecewise-linear over theta, zero beyond the table
    std::vector<double> theta;
    std::vector<double> value;
};

// A (delta, production) pair with its derived quantities: survival sigma,
// burst size N, the forward production weight gamma, and the renewal kernel
// P*sigma. The constructor validates positivity of delta and convergence of
// the burst integral, and caches N.
class AgeKernel {
  public:
    AgeKernel(DeltaSpec delta, ProductionSpec production);

    double delta(double theta) const;
    double production(double theta) const;

    // integral of delta over [0, theta]; closed form for every kind
    double cumulative_hazard(double theta) const;
    double survival(double theta) const; // sigma(theta) = exp(-cumulative_hazard)

    double burst_size() const { return burst_; } // N = integral of P*sigma

    // gamma(x) = integral_x^inf P(theta) exp(-integral_x^theta delta); the
    // expected future production of a cell already at infection age x
    double gamma_weight(double x) const;

    double production_kernel(double theta) const; // P(theta)*sigma(theta)

    // integral_theta^inf of P*sigma: the production mass beyond a given age
    double integrated_tail(double x) const;

    // smallest age at which integrated_tail drops below tol
    double tail_age(double tol) const;

    double delta_min() const { return delta_min_; }
    double production_sup(double theta_cap) const; // sup of P over [0, theta_cap]

    // ascending positive ages at which delta or P changes analytic form
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    const DeltaSpec& delta_spec() const { return delta_; }
    const ProductionSpec& production_spec() const { return production_; }

  private:
    DeltaSpec delta_;
    ProductionSpec production_;
    std::vector<double> breakpoints_;
    std::vector<double> delta_cumhaz_; // prefix hazard at tabulated delta nodes
    double delta_min_ = 0.0;
    double delta_tail_ = 0.0;  // rate beyond the last delta breakpoint
    double growth_rate_ = 0.0; // natural-log production growth rate (ExponentialGrowth)
    double burst_ = 0.0;

    void validate();
    // integral_x^inf P(theta) exp(-delta_tail*(theta-x)), valid for x at or
    // beyond every breakpoint; exact for all built-in production kinds
    double closed_tail(double x) const;
};

// gamma_weight sampled on the uniform grid {0, dtheta, ..., n*dtheta} by a
// backward recursion (one short quadrature per cell instead of a full
// tail quadrature per node).
std::vector<double> gamma_grid(const AgeKernel& kernel, double dtheta, size_t n_nodes);

} // namespace viraldyn

#include "viraldyn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "viraldyn/errors.hpp"
#include "viraldyn/quadrature.hpp"

namespace viraldyn {

namespace {

constexpr double ln10 = 2.302585092994045684;

void check_finite(double x, const char* name) {
    if (!std::isfinite(x)) {
        std::ostringstream os;
        os << "kernel parameter " << name << " must be finite";
        throw validation_error(os.str());
    }
}

void check_table(const std::vector<double>& theta, const std::vector<double>& value,
                 const char* what) {
    if (theta.size() != value.size()) {
        std::ostringstream os;
        os << what << " table: theta and value lengths differ (" << theta.size() << " vs "
           << value.size() << ")";
        throw validation_error(os.str());
    }
    if (theta.size() < 2) {
        std::ostringstream os;
        os << what << " table needs at least two nodes";
        throw validation_error(os.str());
    }
    if (theta.front() != 0.0) {
        std::ostringstream os;
        os << what << " table must start at age 0 (got " << theta.front() << ")";
        throw validation_error(os.str());
    }
    for (size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i]) || !std::isfinite(value[i])) {
            std::ostringstream os;
            os << what << " table entry " << i << " is not finite";
            throw validation_error(os.str());
        }
        if (i > 0 && theta[i] <= theta[i - 1]) {
            std::ostringstream os;
            os << what << " table ages must be strictly increasing (node " << i << ")";
            throw validation_error(os.str());
        }
    }
}

// piecewise-linear interpolation; callers handle extrapolation themselves
double interp_cell(const std::vector<double>& xs, const std::vector<double>& ys, size_t i,
                   double x) {
    double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + w * (ys[i + 1] - ys[i]);
}

size_t cell_of(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t i = static_cast<size_t>(it - xs.begin());
    if (i == 0) return 0;
    if (i >= xs.size()) return xs.size() - 2;
    return i - 1;
}

} // namespace

AgeKernel::AgeKernel(DeltaSpec delta, ProductionSpec production)
    : delta_(std::move(delta)), production_(std::move(production)) {
    validate();
    burst_ = gamma_weight(0.0);
}

void AgeKernel::validate() {
    switch (delta_.kind) {
    case DeltaKind::Constant:
        check_finite(delta_.delta_star, "delta_star");
        if (delta_.delta_star <= 0.0)
            throw validation_error("constant mortality delta_star must be positive");
        delta_min_ = delta_.delta_star;
        delta_tail_ = delta_.delta_star;
        break;
    case DeltaKind::PiecewiseConstant:
        check_finite(delta_.d, "d");
        check_finite(delta_.delta_star, "delta_star");
        check_finite(delta_.tau, "tau");
        if (delta_.d <= 0.0 || delta_.delta_star <= 0.0)
            throw validation_error("piecewise mortality rates d and delta_star must be positive");
        if (delta_.tau < 0.0)
            throw validation_error("mortality switch age tau must be non-negative");
        delta_min_ = std::min(delta_.d, delta_.delta_star);
        delta_tail_ = delta_.delta_star;
        if (delta_.tau > 0.0) breakpoints_.push_back(delta_.tau);
        break;
    case DeltaKind::Tabulated: {
        check_table(delta_.theta, delta_.value, "mortality");
        delta_min_ = std::numeric_limits<double>::infinity();
        for (double v : delta_.value) {
            if (v <= 0.0)
                throw validation_error("tabulated mortality must be positive at every node");
            delta_min_ = std::min(delta_min_, v);
        }
        delta_tail_ = delta_.value.back();
        // exact prefix hazard at the nodes (trapezoid is exact for a linear rate)
        delta_cumhaz_.assign(delta_.theta.size(), 0.0);
        for (size_t i = 1; i < delta_.theta.size(); ++i) {
            double dt = delta_.theta[i] - delta_.theta[i - 1];
            delta_cumhaz_[i] =
                delta_cumhaz_[i - 1] + 0.5 * (delta_.value[i] + delta_.value[i - 1]) * dt;
        }
        for (size_t i = 1; i < delta_.theta.size(); ++i)
            breakpoints_.push_back(delta_.theta[i]);
        break;
    }
    }

    switch (production_.kind) {
    case ProductionKind::Constant:
        check_finite(production_.p_star, "p_star");
        if (production_.p_star < 0.0)
            throw validation_error("production rate p_star must be non-negative");
        break;
    case ProductionKind::DelayedConstant:
        check_finite(production_.p_star, "p_star");
        check_finite(production_.omega, "omega");
        if (production_.p_star < 0.0)
            throw validation_error("production rate p_star must be non-negative");
        if (production_.omega < 0.0)
            throw validation_error("production onset age omega must be non-negative");
        if (production_.omega > 0.0) breakpoints_.push_back(production_.omega);
        break;
    case ProductionKind::DelayedSaturating:
        check_finite(production_.p_star, "p_star");
        check_finite(production_.r, "r");
        check_finite(production_.theta1, "theta1");
        if (production_.p_star < 0.0)
            throw validation_error("production plateau p_star must be non-negative");
        if (production_.r <= 0.0)
            throw validation_error("production approach rate r must be positive");
        if (production_.theta1 < 0.0)
            throw validation_error("production onset age theta1 must be non-negative");
        if (production_.theta1 > 0.0) breakpoints_.push_back(production_.theta1);
        break;
    case ProductionKind::ExponentialGrowth:
        check_finite(production_.c0, "c0");
        check_finite(production_.amplitude, "amplitude");
        check_finite(production_.exponent, "exponent");
        if (production_.c0 < 0.0 || production_.amplitude < 0.0)
            throw validation_error("production offset c0 and amplitude must be non-negative");
        growth_rate_ = production_.exponent * ln10;
        if (production_.amplitude > 0.0 && growth_rate_ >= delta_tail_) {
            std::ostringstream os;
            os << "production grows like exp(" << growth_rate_
               << "*theta) but late-age mortality is only " << delta_tail_
               << ": the burst size integral diverges";
            throw validation_error(os.str());
        }
        break;
    case ProductionKind::Tabulated:
        check_table(production_.theta, production_.value, "production");
        for (double v : production_.value)
            if (v < 0.0)
                throw validation_error("tabulated production must be non-negative");
        // past the last node production is zero, so every node is a breakpoint
        for (size_t i = 1; i < production_.theta.size(); ++i)
            breakpoints_.push_back(production_.theta[i]);
        break;
    }

    std::sort(breakpoints_.begin(), breakpoints_.end());
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

double AgeKernel::delta(double theta) const {
    switch (delta_.kind) {
    case DeltaKind::Constant:
        return delta_.delta_star;
    case DeltaKind::PiecewiseConstant:
        return theta < delta_.tau ? delta_.d : delta_.delta_star;
    case DeltaKind::Tabulated: {
        if (theta >= delta_.theta.back()) return delta_.value.back();
        size_t i = cell_of(delta_.theta, theta);
        return interp_cell(delta_.theta, delta_.value, i, theta);
    }
    }
    return 0.0;
}

double AgeKernel::cumulative_hazard(double theta) const {
    switch (delta_.kind) {
    case DeltaKind::Constant:
        return delta_.delta_star * theta;
    case DeltaKind::PiecewiseConstant:
        if (theta <= delta_.tau) return delta_.d * theta;
        return delta_.d * delta_.tau + delta_.delta_star * (theta - delta_.tau);
    case DeltaKind::Tabulated: {
        if (theta >= delta_.theta.back())
            return delta_cumhaz_.back() + delta_.value.back() * (theta - delta_.theta.back());
        size_t i = cell_of(delta_.theta, theta);
        double dt = theta - delta_.theta[i];
        double v0 = delta_.value[i];
        double vt = interp_cell(delta_.theta, delta_.value, i, theta);
        return delta_cumhaz_[i] + 0.5 * (v0 + vt) * dt;
    }
    }
    return 0.0;
}

double AgeKernel::survival(double theta) const { return std::exp(-cumulative_hazard(theta)); }

double AgeKernel::production(double theta) const {
    switch (production_.kind) {
    case ProductionKind::Constant:
        return production_.p_star;
    case ProductionKind::DelayedConstant:
        return theta < production_.omega ? 0.0 : production_.p_star;
    case ProductionKind::DelayedSaturating:
        if (theta <= production_.theta1) return 0.0;
        return production_.p_star * (-std::expm1(-production_.r * (theta - production_.theta1)));
    case ProductionKind::ExponentialGrowth:
        return production_.c0 + production_.amplitude * std::exp(growth_rate_ * theta);
    case ProductionKind::Tabulated: {
        if (theta > production_.theta.back()) return 0.0;
        if (theta >= production_.theta.back()) return production_.value.back();
        size_t i = cell_of(production_.theta, theta);
        return interp_cell(production_.theta, production_.value, i, theta);
    }
    }
    return 0.0;
}

double AgeKernel::production_kernel(double theta) const {
    return production(theta) * survival(theta);
}

double AgeKernel::closed_tail(double x) const {
    double dt = delta_tail_;
    switch (production_.kind) {
    case ProductionKind::Constant:
    case ProductionKind::DelayedConstant:
        return production_.p_star / dt;
    case ProductionKind::DelayedSaturating: {
        double r = production_.r;
        double lag = std::exp(-r * (x - production_.theta1));
        return production_.p_star * (1.0 / dt - lag / (dt + r));
    }
    case ProductionKind::ExponentialGrowth: {
        double amp = production_.amplitude * std::exp(growth_rate_ * x);
        return production_.c0 / dt + amp / (dt - growth_rate_);
    }
    case ProductionKind::Tabulated:
        return 0.0;
    }
    return 0.0;
}

double AgeKernel::gamma_weight(double x) const {
    if (!(x >= 0.0)) throw std::domain_error("gamma_weight: age must be non-negative");
    double haz_x = cumulative_hazard(x);
    auto integrand = [&](double theta) {
        return production(theta) * std::exp(-(cumulative_hazard(theta) - haz_x));
    };
    // keep each quadrature panel under a few e-foldings of the exponential
    auto piece = [&](double lo, double hi) {
        double rate = std::max({delta(lo), delta(0.5 * (lo + hi)), delta(hi)}) +
                      std::fabs(growth_rate_);
        int panels = std::max(1, static_cast<int>(std::ceil(rate * (hi - lo) / 6.0)));
        double h = (hi - lo) / panels;
        double s = 0.0;
        for (int p = 0; p < panels; ++p) s += gauss_legendre32(integrand, lo + p * h, lo + (p + 1) * h);
        return s;
    };

    double last_bp = breakpoints_.empty() ? 0.0 : breakpoints_.back();
    double b_end = std::max(x, last_bp);
    double total = 0.0;
    double piece_lo = x;
    for (double bp : breakpoints_) {
        if (bp <= piece_lo) continue;
        if (bp > b_end) break;
        total += piece(piece_lo, bp);
        piece_lo = bp;
    }
    // smooth beyond the last breakpoint: exponential tail in closed form
    total += std::exp(-(cumulative_hazard(b_end) - haz_x)) * closed_tail(b_end);
    return total;
}

double AgeKernel::integrated_tail(double x) const { return gamma_weight(x) * survival(x); }

double AgeKernel::tail_age(double tol) const {
    if (!(tol > 0.0)) throw std::domain_error("tail_age: tolerance must be positive");
    if (integrated_tail(0.0) < tol) return 0.0;
    double hi = 1.0;
    while (integrated_tail(hi) >= tol) {
        hi *= 2.0;
        if (hi > 1.0e7)
            throw solver_error("tail_age: production tail mass never falls below tolerance");
    }
    double lo = hi * 0.5;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (integrated_tail(mid) >= tol ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double AgeKernel::production_sup(double theta_cap) const {
    if (!(theta_cap >= 0.0)) throw std::domain_error("production_sup: cap must be non-negative");
    switch (production_.kind) {
    case ProductionKind::Constant:
        return production_.p_star;
    case ProductionKind::DelayedConstant:
        return theta_cap >= production_.omega ? production_.p_star : 0.0;
    case ProductionKind::DelayedSaturating:
    case ProductionKind::ExponentialGrowth: {
        // monotone pieces: the sup sits at an endpoint
        return std::max(production(0.0), production(theta_cap));
    }
    case ProductionKind::Tabulated: {
        double sup = production(theta_cap);
        for (size_t i = 0; i < production_.theta.size(); ++i) {
            if (production_.theta[i] > theta_cap) break;
            sup = std::max(sup, production_.value[i]);
        }
        return sup;
    }
    }
    return 0.0;
}

std::vector<double> gamma_grid(const AgeKernel& kernel, double dtheta, size_t n_nodes) {
    if (!(dtheta > 0.0)) throw std::domain_error("gamma_grid: dtheta must be positive");
    std::vector<double> g(n_nodes + 1, 0.0);
    g[n_nodes] = kernel.gamma_weight(static_cast<double>(n_nodes) * dtheta);
    const auto& bps = kernel.breakpoints();
    for (size_t k = n_nodes; k-- > 0;) {
        double a = static_cast<double>(k) * dtheta;
        double b = a + dtheta;
        double haz_a = kernel.cumulative_hazard(a);
        auto integrand = [&](double theta) {
            return kernel.production(theta) *
                   std::exp(-(kernel.cumulative_hazard(theta) - haz_a));
        };
        double seg = 0.0;
        double lo = a;
        for (double bp : bps) {
            if (bp <= lo) continue;
            if (bp >= b) break;
            seg += gauss_legendre32(integrand, lo, bp);
            lo = bp;
        }
        seg += gauss_legendre32(integrand, lo, b);
        double decay = std::exp(-(kernel.cumulative_hazard(b) - haz_a));
        g[k] = seg + decay * g[k + 1];
    }
    return g;
}

} // namespace viraldyn

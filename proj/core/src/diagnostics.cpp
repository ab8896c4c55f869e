#include "viraldyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viraldyn/errors.hpp"
#include "viraldyn/quadrature.hpp"

namespace viraldyn {

namespace {

constexpr double ratio_floor = 1e-300;

double trapezoid_weight(size_t k, size_t last, double dtheta) {
    return (k == 0 || k == last) ? 0.5 * dtheta : dtheta;
}

} // namespace

double h_function(double x) {
    if (!(x > 0.0)) throw std::domain_error("h_function needs a positive argument");
    return x - 1.0 - std::log(x);
}

DiagnosticsEvaluator::DiagnosticsEvaluator(const Scenario& s, double dtheta, size_t n_nodes)
    : s_(&s), dtheta_(dtheta), n_nodes_(n_nodes) {
    if (!(dtheta > 0.0)) throw std::invalid_argument("diagnostics grid spacing must be positive");
    if (n_nodes < 2) throw std::invalid_argument("diagnostics grid needs at least two nodes");
    gamma_.reserve(s.n_classes());
    sigma_.reserve(s.n_classes());
    for (const auto& cls : s.classes) {
        gamma_.push_back(gamma_grid(cls.kernel, dtheta, n_nodes));
        std::vector<double> sig(n_nodes);
        for (size_t k = 0; k < n_nodes; ++k) sig[k] = cls.kernel.survival(double(k) * dtheta);
        sigma_.push_back(std::move(sig));
    }
}

void DiagnosticsEvaluator::check_grid(const SystemState& st) const {
    if (st.i.size() != s_->n_classes())
        throw std::invalid_argument("state class count does not match the scenario");
    for (const auto& prof : st.i)
        if (prof.size() != n_nodes_)
            throw std::invalid_argument("state age grid does not match the evaluator grid");
    if (std::abs(st.dtheta - dtheta_) > 1e-12 * dtheta_)
        throw std::invalid_argument("state age spacing does not match the evaluator grid");
}

// integral of h(T_ref, v_ref) / h(xi, v_ref) from t_from to t_to, signed.
// v_ref < 0 selects the low-dose slope ratio instead of a plain ratio.
// geometric panels keep the quadrature sharp even when the endpoints are
// orders of magnitude apart (the integrand has a pole at xi = 0).
double DiagnosticsEvaluator::cell_ratio_integral(size_t j, double t_from, double t_to,
                                                 double v_ref) const {
    if (t_from == t_to) return 0.0;
    const auto& inc = s_->classes[j].incidence;
    const bool slope = v_ref < 0.0;
    const double num = slope ? inc.hbar(t_from, 0.0) : inc.evaluate(t_from, v_ref);
    auto integrand = [&](double xi) {
        const double den = slope ? inc.hbar(xi, 0.0) : inc.evaluate(xi, v_ref);
        return num / den;
    };
    const double lo = std::min(t_from, t_to);
    const double hi = std::max(t_from, t_to);
    const double sign = t_to >= t_from ? 1.0 : -1.0;
    int panels = 1;
    if (lo > 0.0 && hi > 2.0 * lo) panels = int(std::ceil(std::log2(hi / lo)));
    double total = 0.0;
    double a = lo;
    for (int p = 0; p < panels; ++p) {
        double b = (p + 1 == panels) ? hi : std::min(hi, a * 2.0);
        total += gauss_legendre32(integrand, a, b);
        a = b;
    }
    return sign * total;
}

double DiagnosticsEvaluator::lyapunov_w(const SystemState& st) const {
    check_grid(st);
    if (st.V < 0.0) throw std::domain_error("virus load is negative");
    double total = st.V;
    const size_t last = n_nodes_ - 1;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        const auto& cls = s_->classes[j];
        if (!(st.T[j] > 0.0)) throw std::domain_error("target cell count must be positive");
        const double t0 = cls.lambda / cls.d;
        const double n_j = cls.kernel.burst_size();
        total += n_j * (st.T[j] - t0 - cell_ratio_integral(j, t0, st.T[j], -1.0));
        double acc = 0.0;
        for (size_t k = 0; k < n_nodes_; ++k) {
            const double ik = st.i[j][k];
            if (ik < 0.0) throw std::domain_error("age density is negative");
            acc += trapezoid_weight(k, last, dtheta_) * gamma_[j][k] * ik;
        }
        total += acc;
    }
    return total;
}

FunctionalValue DiagnosticsEvaluator::lyapunov_w1(const SystemState& st,
                                                  const SteadyState& e_star) const {
    check_grid(st);
    if (!e_star.present || e_star.kind != SteadyKind::ImmuneFree)
        throw std::invalid_argument("lyapunov_w1 needs the immune-free rest state");
    if (st.V < 0.0 || st.A < 0.0) throw std::domain_error("state component is negative");
    FunctionalValue out;
    if (!(st.V > 0.0)) return out;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        if (st.T[j] < 0.0) throw std::domain_error("state component is negative");
        if (!(st.T[j] > 0.0)) return out;
    }
    const auto& g = s_->globals;
    const size_t last = n_nodes_ - 1;
    double total = e_star.V * h_function(st.V / e_star.V) + (g.q * g.h / g.k) * st.A;
    bool floored = false;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        const auto& cls = s_->classes[j];
        const double n_j = cls.kernel.burst_size();
        total += n_j *
                 (st.T[j] - e_star.T[j] - cell_ratio_integral(j, e_star.T[j], st.T[j], e_star.V));
        double acc = 0.0;
        for (size_t k = 0; k < n_nodes_; ++k) {
            const double ik = st.i[j][k];
            if (ik < 0.0) throw std::domain_error("age density is negative");
            const double istar = e_star.boundary[j] * sigma_[j][k];
            double ratio = ik / istar;
            if (ratio < ratio_floor) {
                ratio = ratio_floor;
                floored = true;
            }
            acc += trapezoid_weight(k, last, dtheta_) * gamma_[j][k] * istar * h_function(ratio);
        }
        total += acc;
    }
    out.value = total;
    out.defined = true;
    out.floored = floored;
    return out;
}

FunctionalValue DiagnosticsEvaluator::lyapunov_w2(const SystemState& st,
                                                  const SteadyState& e_hat) const {
    check_grid(st);
    if (!e_hat.present || e_hat.kind != SteadyKind::AntibodyImmune)
        throw std::invalid_argument("lyapunov_w2 needs the antibody rest state");
    if (st.V < 0.0 || st.A < 0.0) throw std::domain_error("state component is negative");
    FunctionalValue out;
    if (!(st.V > 0.0) || !(st.A > 0.0)) return out;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        if (st.T[j] < 0.0) throw std::domain_error("state component is negative");
        if (!(st.T[j] > 0.0)) return out;
    }
    const auto& g = s_->globals;
    const size_t last = n_nodes_ - 1;
    double total = e_hat.V * h_function(st.V / e_hat.V);
    bool floored = false;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        const auto& cls = s_->classes[j];
        const double n_j = cls.kernel.burst_size();
        total +=
            n_j * (st.T[j] - e_hat.T[j] - cell_ratio_integral(j, e_hat.T[j], st.T[j], e_hat.V));
        double acc = 0.0;
        for (size_t k = 0; k < n_nodes_; ++k) {
            const double ik = st.i[j][k];
            if (ik < 0.0) throw std::domain_error("age density is negative");
            const double ihat = e_hat.boundary[j] * sigma_[j][k];
            double ratio = ik / ihat;
            if (ratio < ratio_floor) {
                ratio = ratio_floor;
                floored = true;
            }
            acc += trapezoid_weight(k, last, dtheta_) * gamma_[j][k] * ihat * h_function(ratio);
        }
        total += acc;
    }
    // antibody distance term, a signed integral that vanishes only at A-hat
    const double a_hat = e_hat.A;
    const double lo = std::min(st.A, a_hat);
    const double hi = std::max(st.A, a_hat);
    if (lo < hi) {
        auto f = [&](double tau) { return (g.h + tau) * (tau - a_hat) / tau; };
        const double scale = (g.h / lo + 1.0) * (hi - lo) * (hi - lo);
        const double tol = 1e-12 * std::max(1.0, scale);
        const double block = adaptive_simpson(f, lo, hi, tol);
        total += (g.q / g.k) * (st.A >= a_hat ? block : -block);
    }
    out.value = total;
    out.defined = true;
    out.floored = floored;
    return out;
}

double DiagnosticsEvaluator::persistence_phi(const SystemState& st) const {
    check_grid(st);
    if (st.V < 0.0) throw std::domain_error("virus load is negative");
    double total = st.V;
    const size_t last = n_nodes_ - 1;
    for (size_t j = 0; j < s_->n_classes(); ++j) {
        double acc = 0.0;
        for (size_t k = 0; k < n_nodes_; ++k) {
            const double ik = st.i[j][k];
            if (ik < 0.0) throw std::domain_error("age density is negative");
            acc += trapezoid_weight(k, last, dtheta_) * gamma_[j][k] * ik;
        }
        total += acc;
    }
    return total;
}

SystemState reconstruct_state(const Scenario& s, const DdeSimulator& sim, double t, double dtheta,
                              double theta_max) {
    if (!(dtheta > 0.0) || !(theta_max > dtheta))
        throw std::invalid_argument("reconstruction grid is degenerate");
    const auto& dense = sim.dense();
    if (dense.t.empty()) throw solver_error("no stored run to reconstruct from");
    const double t_back = dense.t.back();
    if (t < 0.0 || t > t_back * (1.0 + 1e-12) + 1e-12)
        throw std::invalid_argument("requested time lies outside the stored run");

    // macro variables at t, exact at nodes, linear in between
    const double x = t / dense.dt;
    const size_t n = dense.t.size();
    size_t k0 = size_t(std::min(double(n - 1), std::floor(x)));
    if (k0 + 1 >= n) k0 = n - 2;
    double u = x - double(k0);
    u = std::clamp(u, 0.0, 1.0);
    const long idx = std::lround(x);
    const bool on_node = idx >= 0 && size_t(idx) < n && std::abs(t - double(idx) * dense.dt) <=
                                                            1e-9 * std::max(1.0, std::abs(t));

    SystemState st;
    st.t = t;
    st.dtheta = dtheta;
    const size_t nodes = size_t(std::llround(theta_max / dtheta)) + 1;
    st.T.resize(s.n_classes());
    st.i.assign(s.n_classes(), std::vector<double>(nodes));
    for (size_t j = 0; j < s.n_classes(); ++j) {
        st.T[j] = on_node ? dense.T[j][size_t(idx)]
                          : (1.0 - u) * dense.T[j][k0] + u * dense.T[j][k0 + 1];
        const auto& kern = s.classes[j].kernel;
        for (size_t k = 0; k < nodes; ++k) {
            const double theta = double(k) * dtheta;
            if (theta <= t) {
                st.i[j][k] = sim.boundary_interp(j, t - theta) *
                             std::exp(-kern.cumulative_hazard(theta));
            } else {
                const double decay =
                    kern.cumulative_hazard(theta) - kern.cumulative_hazard(theta - t);
                st.i[j][k] = profile_value(s, j, theta - t) * std::exp(-decay);
            }
        }
    }
    st.V = on_node ? dense.V[size_t(idx)] : (1.0 - u) * dense.V[k0] + u * dense.V[k0 + 1];
    st.A = on_node ? dense.A[size_t(idx)] : (1.0 - u) * dense.A[k0] + u * dense.A[k0 + 1];
    return st;
}

DescentReport descent_check(const TrajectoryRecord& rec, size_t diag_index, double slope_tol) {
    DescentReport rep;
    double prev_t = 0.0;
    double prev_v = 0.0;
    bool have_prev = false;
    for (const auto& smp : rec.samples) {
        if (diag_index >= smp.diag.size())
            throw std::invalid_argument("diagnostics column index out of range");
        const double v = smp.diag[diag_index];
        if (std::isnan(v)) continue;
        ++rep.defined_samples;
        if (have_prev && smp.t > prev_t) {
            const double slope = (v - prev_v) / (smp.t - prev_t);
            rep.max_slope = std::max(rep.max_slope, slope);
            if (slope > slope_tol && rep.passed) {
                rep.passed = false;
                rep.first_violation_time = smp.t;
            }
        }
        prev_t = smp.t;
        prev_v = v;
        have_prev = true;
    }
    return rep;
}

} // namespace viraldyn

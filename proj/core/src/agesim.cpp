#include "viraldyn/agesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "viraldyn/errors.hpp"
#include "viraldyn/quadrature.hpp"

namespace viraldyn {

namespace {

double min_decay(const Scenario& s) {
    double dbar = std::numeric_limits<double>::infinity();
    for (const auto& cl : s.classes) dbar = std::min(dbar, std::min(cl.d, cl.kernel.delta_min()));
    return dbar;
}

} // namespace

InvariantBox invariant_box(const Scenario& s) {
    InvariantBox box;
    double lam_sum = 0.0;
    double p_sup = 0.0;
    for (const auto& cl : s.classes) {
        box.t_cap.push_back(cl.lambda / cl.d);
        lam_sum += cl.lambda;
        p_sup = std::max(p_sup, cl.kernel.production_sup(400.0 / cl.kernel.delta_min()));
    }
    box.mass_cap = lam_sum / min_decay(s);
    box.v_cap = p_sup * box.mass_cap / s.globals.c;
    box.a_cap = s.globals.k * box.v_cap / s.globals.b;
    return box;
}

bool inside_box(const InvariantBox& box, const std::vector<double>& T,
                const std::vector<double>& I, double V, double A, double slack) {
    double mass = 0.0;
    for (size_t j = 0; j < T.size(); ++j) {
        if (T[j] > box.t_cap[j] * (1.0 + slack)) return false;
        mass += T[j] + I[j];
    }
    if (mass > box.mass_cap * (1.0 + slack)) return false;
    if (V > box.v_cap * (1.0 + slack)) return false;
    if (A > box.a_cap * (1.0 + slack)) return false;
    return true;
}

double AgeSimulator::default_theta_max(const Scenario& s) {
    double theta = 0.0;
    for (const auto& cl : s.classes) {
        double by_tail = cl.kernel.tail_age(s.numerics.tail_tol * s.globals.c);
        double cap = 400.0 / cl.kernel.delta_min();
        theta = std::max(theta, std::min(by_tail, cap));
    }
    return std::max(theta, 10.0 * s.numerics.dtheta);
}

AgeSimulator::AgeSimulator(const Scenario& s) : s_(&s) {
    dtheta_ = s.numerics.dtheta;
    double want = s.numerics.theta_max > 0.0 ? s.numerics.theta_max : default_theta_max(s);
    size_t cells = static_cast<size_t>(std::llround(want / dtheta_));
    cells = std::max<size_t>(cells, 2);
    theta_max_ = static_cast<double>(cells) * dtheta_;
    n_nodes_ = cells + 1;

    for (size_t j = 0; j < s.classes.size(); ++j) {
        const AgeKernel& kern = s.classes[j].kernel;
        std::vector<double> trans(n_nodes_, 0.0);
        double haz_prev = 0.0;
        for (size_t k = 1; k < n_nodes_; ++k) {
            double haz = kern.cumulative_hazard(static_cast<double>(k) * dtheta_);
            trans[k] = std::exp(-(haz - haz_prev));
            haz_prev = haz;
        }
        transport_.push_back(std::move(trans));

        // per-cell moments of P: with i piecewise linear on the cell,
        // int P*i = i(a)*m0 + (i(b)-i(a))*m1/dtheta, exact in P
        std::vector<double> w(n_nodes_, 0.0);
        const auto& bps = kern.breakpoints();
        for (size_t k = 1; k < n_nodes_; ++k) {
            double a = static_cast<double>(k - 1) * dtheta_;
            double b = a + dtheta_;
            double m0 = 0.0, m1 = 0.0;
            double lo = a;
            auto add = [&](double u, double v) {
                if (v <= u) return;
                m0 += gauss_legendre32([&](double th) { return kern.production(th); }, u, v);
                m1 += gauss_legendre32([&](double th) { return kern.production(th) * (th - a); },
                                       u, v);
            };
            for (double bp : bps) {
                if (bp <= lo) continue;
                if (bp >= b) break;
                add(lo, bp);
                lo = bp;
            }
            add(lo, b);
            w[k - 1] += m0 - m1 / dtheta_;
            w[k] += m1 / dtheta_;
        }
        w[n_nodes_ - 1] += kern.gamma_weight(theta_max_);
        prod_weights_.push_back(std::move(w));
    }
    box_ = invariant_box(s);
}

SystemState AgeSimulator::init_state() const {
    SystemState st;
    st.t = 0.0;
    st.T = s_->initial.T0;
    st.V = s_->initial.V0;
    st.A = s_->initial.A0;
    st.dtheta = dtheta_;
    for (size_t j = 0; j < s_->classes.size(); ++j) {
        std::vector<double> prof(n_nodes_);
        for (size_t k = 0; k < n_nodes_; ++k)
            prof[k] = profile_value(*s_, j, static_cast<double>(k) * dtheta_);
        st.i.push_back(std::move(prof));
    }
    return st;
}

void AgeSimulator::advance_profile(std::vector<double>& profile, size_t j,
                                   double boundary_value) const {
    if (j >= transport_.size()) throw std::out_of_range("advance_profile: class index");
    if (profile.size() != n_nodes_) throw std::invalid_argument("advance_profile: grid mismatch");
    if (!(boundary_value >= 0.0))
        throw std::domain_error("advance_profile: boundary density must be non-negative");
    const std::vector<double>& trans = transport_[j];
    for (size_t k = n_nodes_ - 1; k >= 1; --k) profile[k] = profile[k - 1] * trans[k];
    profile[0] = boundary_value;
}

double AgeSimulator::viral_production(const SystemState& state) const {
    double total = 0.0;
    for (size_t j = 0; j < prod_weights_.size(); ++j) {
        const std::vector<double>& w = prod_weights_[j];
        const std::vector<double>& ij = state.i[j];
        double s = 0.0;
        for (size_t k = 0; k < n_nodes_; ++k) s += w[k] * ij[k];
        total += s;
    }
    return total;
}

double AgeSimulator::integral_i(const SystemState& state, size_t j) const {
    const std::vector<double>& ij = state.i[j];
    double s = 0.5 * (ij.front() + ij.back());
    for (size_t k = 1; k + 1 < n_nodes_; ++k) s += ij[k];
    return s * dtheta_;
}

void AgeSimulator::clamp(double& x, double scale, const char* name, double t) const {
    if (!std::isfinite(x)) {
        std::ostringstream os;
        os << name << " is not finite at t=" << t;
        throw integration_error(os.str());
    }
    if (x >= 0.0) return;
    if (x >= -1e-12 * std::max(scale, 1.0)) {
        x = 0.0;
        ++clamp_count_;
        return;
    }
    std::ostringstream os;
    os << name << " undershot to " << x << " at t=" << t << " (beyond roundoff tolerance)";
    throw integration_error(os.str());
}

void AgeSimulator::step(SystemState& state) const {
    const Globals& g = s_->globals;
    const double dt = dtheta_;
    const size_t n = s_->classes.size();

    double prod_n = viral_production(state);
    std::vector<double> dT(n), tp(n);
    for (size_t j = 0; j < n; ++j) {
        const ClassSpec& cl = s_->classes[j];
        dT[j] = cl.lambda - cl.d * state.T[j] - cl.incidence.evaluate(state.T[j], state.V);
        tp[j] = std::max(0.0, state.T[j] + dt * dT[j]);
    }
    double dV = prod_n - g.c * state.V - g.q * state.A * state.V;
    double dA = g.k * state.A * state.V / (g.h + state.A) - g.b * state.A;
    double vp = std::max(0.0, state.V + dt * dV);
    double ap = std::max(0.0, state.A + dt * dA);

    // exact transport; the boundary gets the predictor inflow for stage 2
    for (size_t j = 0; j < n; ++j)
        advance_profile(state.i[j], j, s_->classes[j].incidence.evaluate(tp[j], vp));

    double prod_p = viral_production(state);
    double t_new = state.t + dt;
    for (size_t j = 0; j < n; ++j) {
        const ClassSpec& cl = s_->classes[j];
        double d2 = cl.lambda - cl.d * tp[j] - cl.incidence.evaluate(tp[j], vp);
        state.T[j] += 0.5 * dt * (dT[j] + d2);
        clamp(state.T[j], box_.t_cap[j], "T", t_new);
    }
    double dV2 = prod_p - g.c * vp - g.q * ap * vp;
    double dA2 = g.k * ap * vp / (g.h + ap) - g.b * ap;
    state.V += 0.5 * dt * (dV + dV2);
    clamp(state.V, box_.v_cap, "V", t_new);
    state.A += 0.5 * dt * (dA + dA2);
    clamp(state.A, box_.a_cap, "A", t_new);

    // corrected boundary so the stored profile matches the new (T, V)
    for (size_t j = 0; j < n; ++j)
        state.i[j][0] = s_->classes[j].incidence.evaluate(state.T[j], state.V);
    state.t = t_new;
}

TrajectoryRecord AgeSimulator::run(double t_end, double stride, const SampleHook& hook) const {
    SystemState st = init_state();
    return run(st, t_end, stride, hook);
}

TrajectoryRecord AgeSimulator::run(SystemState& state, double t_end, double stride,
                                   const SampleHook& hook) const {
    if (!(t_end > 0.0)) throw std::domain_error("run: horizon must be positive");
    TrajectoryRecord rec;
    clamp_count_ = 0;

    for (size_t j = 0; j < s_->classes.size(); ++j) {
        double dropped = state.i[j].back() * s_->classes[j].kernel.gamma_weight(theta_max_);
        if (dropped > 10.0 * s_->numerics.tail_tol * s_->globals.c) {
            std::ostringstream os;
            os << "initial profile of class " << j << " carries production mass " << dropped
               << " beyond theta_max=" << theta_max_ << "; it is truncated";
            rec.notes.push_back(os.str());
        }
    }

    long long steps = std::max<long long>(1, std::llround(t_end / dtheta_));
    long long every = stride <= 0.0 ? 1 : std::max<long long>(1, std::llround(stride / dtheta_));

    bool seen_inside = false;
    auto take_sample = [&](long long idx) {
        TrajectorySample smp;
        smp.t = state.t;
        smp.T = state.T;
        for (size_t j = 0; j < s_->classes.size(); ++j) smp.I.push_back(integral_i(state, j));
        smp.V = state.V;
        smp.A = state.A;
        bool inside = inside_box(box_, smp.T, smp.I, smp.V, smp.A);
        if (idx == 0) rec.started_in_box = inside;
        if (inside && !seen_inside) {
            seen_inside = true;
            rec.box_entry_time = state.t;
        } else if (!inside && seen_inside && rec.first_box_exit < 0.0) {
            rec.first_box_exit = state.t;
        }
        if (hook) hook(state, smp);
        rec.samples.push_back(std::move(smp));
    };

    take_sample(0);
    const double t0 = state.t;
    for (long long idx = 1; idx <= steps; ++idx) {
        step(state);
        state.t = t0 + double(idx) * dtheta_; // keep node times drift-free
        if (idx % every == 0 || idx == steps) take_sample(idx);
    }
    rec.clamp_count = clamp_count_;
    return rec;
}

} // namespace viraldyn

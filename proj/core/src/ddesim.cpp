#include "viraldyn/ddesim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "viraldyn/agesim.hpp" // invariant_box
#include "viraldyn/errors.hpp"

namespace viraldyn {

namespace {

void clamp_or_throw(double& x, double scale, const char* name, double t, size_t& count) {
    if (!std::isfinite(x)) {
        std::ostringstream os;
        os << name << " is not finite at t=" << t;
        throw integration_error(os.str());
    }
    if (x >= 0.0) return;
    if (x >= -1e-12 * std::max(scale, 1.0)) {
        x = 0.0;
        ++count;
        return;
    }
    std::ostringstream os;
    os << name << " undershot to " << x << " at t=" << t << " (beyond roundoff tolerance)";
    throw integration_error(os.str());
}

} // namespace

DdeSimulator::DdeSimulator(const Scenario& s) : s_(&s) {
    omega_ = shared_omega(s); // throws when the scenario is not reducible
    if (omega_ > 0.0) {
        long long m;
        if (s.numerics.dt > 0.0)
            m = std::max<long long>(1, std::llround(omega_ / s.numerics.dt));
        else
            m = std::max<long long>(50, static_cast<long long>(std::ceil(omega_ / 0.01)));
        delay_nodes_ = m;
        dt_ = omega_ / static_cast<double>(m);
    } else {
        delay_nodes_ = 0;
        dt_ = s.numerics.dt > 0.0 ? s.numerics.dt : 0.01;
    }

    for (size_t j = 0; j < s.classes.size(); ++j) {
        const ClassSpec& cl = s.classes[j];
        double ds = cl.kernel.delta_spec().delta_star;
        delta_.push_back(ds);
        discounted_p_.push_back(cl.kernel.production_spec().p_star * std::exp(-ds * omega_));

        const HistorySpec& hist = s.initial.history[j];
        double i0;
        if (hist.kind == HistorySpec::Kind::Tabulated) {
            if (hist.t.front() > -omega_)
                throw validation_error("tabulated history does not cover [-omega, 0]");
            i0 = 0.0; // set below through history_value
        } else {
            i0 = hist.has_value ? hist.value : profile_integral(s, j);
        }
        i0_.push_back(i0);
    }
    // tabulated histories define I(0) themselves
    for (size_t j = 0; j < s.classes.size(); ++j)
        if (s.initial.history[j].kind == HistorySpec::Kind::Tabulated)
            i0_[j] = history_value(j, 0.0);
}

double DdeSimulator::history_value(size_t j, double t) const {
    const HistorySpec& hist = s_->initial.history[j];
    if (hist.kind == HistorySpec::Kind::Constant) return i0_[j];
    const auto& ts = hist.t;
    const auto& vs = hist.value_tab;
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    size_t i = static_cast<size_t>(it - ts.begin()) - 1;
    double w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    return vs[i] + w * (vs[i + 1] - vs[i]);
}

double DdeSimulator::delayed_i(size_t j, long long node) const {
    if (node < 0) return history_value(j, static_cast<double>(node) * dt_);
    return dense_.I[j][static_cast<size_t>(node)];
}

TrajectoryRecord DdeSimulator::run(double t_end, double stride) {
    if (!(t_end > 0.0)) throw std::domain_error("run: horizon must be positive");
    const Globals& g = s_->globals;
    const size_t n = s_->classes.size();
    const long long steps = std::max<long long>(1, std::llround(t_end / dt_));

    dense_ = DdeDenseOutput{};
    dense_.dt = dt_;
    dense_.omega = omega_;
    dense_.t.reserve(steps + 1);
    dense_.V.reserve(steps + 1);
    dense_.A.reserve(steps + 1);
    dense_.T.assign(n, {});
    dense_.I.assign(n, {});
    dense_.dI.assign(n, {});
    dense_.boundary.assign(n, {});
    for (size_t j = 0; j < n; ++j) {
        dense_.T[j].reserve(steps + 1);
        dense_.I[j].reserve(steps + 1);
        dense_.dI[j].reserve(steps + 1);
        dense_.boundary[j].reserve(steps + 1);
    }

    dense_.t.push_back(0.0);
    dense_.V.push_back(s_->initial.V0);
    dense_.A.push_back(s_->initial.A0);
    for (size_t j = 0; j < n; ++j) {
        double hj = s_->classes[j].incidence.evaluate(s_->initial.T0[j], s_->initial.V0);
        dense_.T[j].push_back(s_->initial.T0[j]);
        dense_.I[j].push_back(i0_[j]);
        dense_.dI[j].push_back(hj - delta_[j] * i0_[j]);
        dense_.boundary[j].push_back(hj);
    }

    InvariantBox box = invariant_box(*s_);
    size_t clamp_count = 0;

    std::vector<double> dT(n), dI(n), tp(n), ip(n);
    for (long long idx = 0; idx < steps; ++idx) {
        double V = dense_.V.back(), A = dense_.A.back();

        double prod = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const ClassSpec& cl = s_->classes[j];
            double Tj = dense_.T[j].back(), Ij = dense_.I[j].back();
            double hj = cl.incidence.evaluate(Tj, V);
            dT[j] = cl.lambda - cl.d * Tj - hj;
            dI[j] = hj - delta_[j] * Ij;
            prod += discounted_p_[j] *
                    (delay_nodes_ == 0 ? Ij : delayed_i(j, idx - delay_nodes_));
            tp[j] = std::max(0.0, Tj + dt_ * dT[j]);
            ip[j] = std::max(0.0, Ij + dt_ * dI[j]);
        }
        double dV = prod - g.c * V - g.q * A * V;
        double dA = g.k * A * V / (g.h + A) - g.b * A;
        double vp = std::max(0.0, V + dt_ * dV);
        double ap = std::max(0.0, A + dt_ * dA);

        double prod2 = 0.0;
        for (size_t j = 0; j < n; ++j)
            prod2 += discounted_p_[j] *
                     (delay_nodes_ == 0 ? ip[j] : delayed_i(j, idx + 1 - delay_nodes_));
        double dV2 = prod2 - g.c * vp - g.q * ap * vp;
        double dA2 = g.k * ap * vp / (g.h + ap) - g.b * ap;

        double t_new = static_cast<double>(idx + 1) * dt_;
        double v_new = V + 0.5 * dt_ * (dV + dV2);
        double a_new = A + 0.5 * dt_ * (dA + dA2);
        clamp_or_throw(v_new, box.v_cap, "V", t_new, clamp_count);
        clamp_or_throw(a_new, box.a_cap, "A", t_new, clamp_count);

        dense_.t.push_back(t_new);
        dense_.V.push_back(v_new);
        dense_.A.push_back(a_new);
        for (size_t j = 0; j < n; ++j) {
            const ClassSpec& cl = s_->classes[j];
            double h2 = cl.incidence.evaluate(tp[j], vp);
            double t_next = dense_.T[j].back() + 0.5 * dt_ * (dT[j] + (cl.lambda - cl.d * tp[j] - h2));
            double i_next = dense_.I[j].back() + 0.5 * dt_ * (dI[j] + (h2 - delta_[j] * ip[j]));
            clamp_or_throw(t_next, box.t_cap[j], "T", t_new, clamp_count);
            clamp_or_throw(i_next, box.mass_cap, "I", t_new, clamp_count);
            double h_new = cl.incidence.evaluate(t_next, v_new);
            dense_.T[j].push_back(t_next);
            dense_.I[j].push_back(i_next);
            dense_.dI[j].push_back(h_new - delta_[j] * i_next);
            dense_.boundary[j].push_back(h_new);
        }
    }

    TrajectoryRecord rec;
    rec.clamp_count = clamp_count;
    long long every = stride <= 0.0 ? 1 : std::max<long long>(1, std::llround(stride / dt_));
    bool seen_inside = false;
    for (long long idx = 0; idx <= steps; ++idx) {
        if (!(idx % every == 0 || idx == steps)) continue;
        size_t k = static_cast<size_t>(idx);
        TrajectorySample smp;
        smp.t = dense_.t[k];
        for (size_t j = 0; j < n; ++j) {
            smp.T.push_back(dense_.T[j][k]);
            smp.I.push_back(dense_.I[j][k]);
        }
        smp.V = dense_.V[k];
        smp.A = dense_.A[k];
        bool inside = inside_box(box, smp.T, smp.I, smp.V, smp.A);
        if (idx == 0) rec.started_in_box = inside;
        if (inside && !seen_inside) {
            seen_inside = true;
            rec.box_entry_time = smp.t;
        } else if (!inside && seen_inside && rec.first_box_exit < 0.0) {
            rec.first_box_exit = smp.t;
        }
        rec.samples.push_back(std::move(smp));
    }
    return rec;
}

double DdeSimulator::i_interp(size_t j, double t) const {
    if (dense_.t.empty()) throw solver_error("i_interp: run() has not been called");
    if (t <= 0.0) return history_value(j, t);
    const auto& I = dense_.I[j];
    const auto& dI = dense_.dI[j];
    double tmax = dense_.t.back();
    if (t >= tmax) return I.back();
    size_t k = static_cast<size_t>(t / dt_);
    k = std::min(k, I.size() - 2);
    double u = (t - static_cast<double>(k) * dt_) / dt_;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    return h00 * I[k] + h10 * dt_ * dI[k] + h01 * I[k + 1] + h11 * dt_ * dI[k + 1];
}

double DdeSimulator::boundary_interp(size_t j, double t) const {
    if (dense_.t.empty()) throw solver_error("boundary_interp: run() has not been called");
    const auto& b = dense_.boundary[j];
    if (t <= 0.0) return b.front();
    double tmax = dense_.t.back();
    if (t >= tmax) return b.back();
    size_t k = static_cast<size_t>(t / dt_);
    k = std::min(k, b.size() - 2);
    double u = (t - static_cast<double>(k) * dt_) / dt_;
    return b[k] + u * (b[k + 1] - b[k]);
}

double equilibrium_check_dde(const Scenario& s, const SteadyState& ss) {
    if (!ss.present) return 0.0;
    double omega = shared_omega(s);
    const Globals& g = s.globals;
    double worst = 0.0;
    double prod = 0.0;
    for (size_t j = 0; j < s.classes.size(); ++j) {
        const ClassSpec& cl = s.classes[j];
        double ds = cl.kernel.delta_spec().delta_star;
        double hj = cl.incidence.evaluate(ss.T[j], ss.V);
        double Ij = ss.boundary[j] / ds;
        worst = std::max(worst, std::fabs(cl.lambda - cl.d * ss.T[j] - hj) / cl.lambda);
        worst = std::max(worst,
                         std::fabs(hj - ds * Ij) / std::max({cl.lambda, hj, 1e-300}));
        prod += cl.kernel.production_spec().p_star * std::exp(-ds * omega) * Ij;
    }
    double virion = prod - g.c * ss.V - g.q * ss.A * ss.V;
    worst = std::max(worst, std::fabs(virion) / std::max({prod, g.c * ss.V, 1e-300}));
    if (ss.A > 0.0) {
        double anti = g.k * ss.A * ss.V / (g.h + ss.A) - g.b * ss.A;
        worst = std::max(worst, std::fabs(anti) / std::max(g.b * ss.A, 1e-300));
    }
    return worst;
}

} // namespace viraldyn

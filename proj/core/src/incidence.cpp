#include "viraldyn/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viraldyn/errors.hpp"

namespace viraldyn {

namespace {

void require_nonnegative_finite(double T, double V) {
    if (!std::isfinite(T) || !std::isfinite(V))
        throw std::domain_error("incidence: non-finite input");
    if (T < 0.0 || V < 0.0) throw std::domain_error("incidence: negative input");
}

// index of the table cell containing x, for ascending nodes
size_t cell_index(const std::vector<double>& nodes, double x) {
    if (x < nodes.front() || x > nodes.back())
        throw std::domain_error("incidence: point outside tabulated range");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    size_t i = static_cast<size_t>(it - nodes.begin());
    if (i == 0) return 0;
    if (i >= nodes.size()) return nodes.size() - 2;
    return i - 1;
}

} // namespace

IncidenceModel IncidenceModel::bilinear(double beta) {
    if (!(beta > 0.0)) throw validation_error("bilinear incidence: beta must be > 0");
    IncidenceModel m(IncidenceKind::Bilinear);
    m.p_ = BilinearParams{beta};
    return m;
}

IncidenceModel IncidenceModel::saturated(double beta, double alpha) {
    if (!(beta > 0.0) || !(alpha > 0.0))
        throw validation_error("saturated incidence: beta and alpha must be > 0");
    IncidenceModel m(IncidenceKind::Saturated);
    m.p_ = SaturatedParams{beta, alpha};
    return m;
}

IncidenceModel IncidenceModel::beddington_deangelis(double beta, double a, double b) {
    if (!(beta > 0.0) || !(a > 0.0) || !(b > 0.0))
        throw validation_error("beddington-deangelis incidence: parameters must be > 0");
    IncidenceModel m(IncidenceKind::BeddingtonDeAngelis);
    m.p_ = BeddingtonDeAngelisParams{beta, a, b};
    return m;
}

IncidenceModel IncidenceModel::tabulated(IncidenceTable table) {
    if (table.t_nodes.size() < 2 || table.v_nodes.size() < 2)
        throw validation_error("tabulated incidence: need at least a 2x2 grid");
    if (!std::is_sorted(table.t_nodes.begin(), table.t_nodes.end()) ||
        !std::is_sorted(table.v_nodes.begin(), table.v_nodes.end()))
        throw validation_error("tabulated incidence: node vectors must be ascending");
    if (table.hbar.size() != table.t_nodes.size())
        throw validation_error("tabulated incidence: hbar rows must match t_nodes");
    for (const auto& row : table.hbar) {
        if (row.size() != table.v_nodes.size())
            throw validation_error("tabulated incidence: hbar columns must match v_nodes");
        for (double v : row)
            if (!std::isfinite(v) || v < 0.0)
                throw validation_error("tabulated incidence: hbar values must be finite and >= 0");
    }
    if (table.t_nodes.front() > 0.0 || table.v_nodes.front() > 0.0)
        throw validation_error("tabulated incidence: table must start at T=0, V=0");
    IncidenceModel m(IncidenceKind::Tabulated);
    m.p_ = std::move(table);
    return m;
}

const BilinearParams* IncidenceModel::as_bilinear() const {
    return std::get_if<BilinearParams>(&p_);
}
const SaturatedParams* IncidenceModel::as_saturated() const {
    return std::get_if<SaturatedParams>(&p_);
}
const BeddingtonDeAngelisParams* IncidenceModel::as_beddington_deangelis() const {
    return std::get_if<BeddingtonDeAngelisParams>(&p_);
}
const IncidenceTable* IncidenceModel::as_table() const {
    return std::get_if<IncidenceTable>(&p_);
}

double IncidenceModel::hbar_table(double T, double V) const {
    const auto& tb = std::get<IncidenceTable>(p_);
    size_t i = cell_index(tb.t_nodes, T);
    size_t j = cell_index(tb.v_nodes, V);
    double tx = (T - tb.t_nodes[i]) / (tb.t_nodes[i + 1] - tb.t_nodes[i]);
    double vy = (V - tb.v_nodes[j]) / (tb.v_nodes[j + 1] - tb.v_nodes[j]);
    double f00 = tb.hbar[i][j], f10 = tb.hbar[i + 1][j];
    double f01 = tb.hbar[i][j + 1], f11 = tb.hbar[i + 1][j + 1];
    return (1 - tx) * (1 - vy) * f00 + tx * (1 - vy) * f10 + (1 - tx) * vy * f01 +
           tx * vy * f11;
}

double IncidenceModel::hbar(double T, double V) const {
    require_nonnegative_finite(T, V);
    switch (kind_) {
    case IncidenceKind::Bilinear:
        return std::get<BilinearParams>(p_).beta * T;
    case IncidenceKind::Saturated: {
        const auto& q = std::get<SaturatedParams>(p_);
        return q.beta * T / (1.0 + q.alpha * V);
    }
    case IncidenceKind::BeddingtonDeAngelis: {
        const auto& q = std::get<BeddingtonDeAngelisParams>(p_);
        return q.beta * T / (1.0 + q.a * T + q.b * V);
    }
    case IncidenceKind::Tabulated:
        return hbar_table(T, V);
    }
    throw std::logic_error("unreachable incidence kind");
}

double IncidenceModel::evaluate(double T, double V) const {
    require_nonnegative_finite(T, V);
    if (T == 0.0 || V == 0.0) return 0.0;
    return V * hbar(T, V);
}

std::pair<double, double> IncidenceModel::partials(double T, double V) const {
    require_nonnegative_finite(T, V);
    switch (kind_) {
    case IncidenceKind::Bilinear: {
        double beta = std::get<BilinearParams>(p_).beta;
        return {beta * V, beta * T};
    }
    case IncidenceKind::Saturated: {
        const auto& q = std::get<SaturatedParams>(p_);
        double den = 1.0 + q.alpha * V;
        return {q.beta * V / den, q.beta * T / (den * den)};
    }
    case IncidenceKind::BeddingtonDeAngelis: {
        const auto& q = std::get<BeddingtonDeAngelisParams>(p_);
        double den = 1.0 + q.a * T + q.b * V;
        return {q.beta * V * (1.0 + q.b * V) / (den * den),
                q.beta * T * (1.0 + q.a * T) / (den * den)};
    }
    case IncidenceKind::Tabulated: {
        // central differences, relative step 1e-5, one-sided at the axes
        const auto& tb = std::get<IncidenceTable>(p_);
        auto h = [&](double t, double v) { return v * hbar_table(t, v); };
        double sT = 1e-5 * std::max(1.0, std::abs(T));
        double sV = 1e-5 * std::max(1.0, std::abs(V));
        double tl = std::max(T - sT, tb.t_nodes.front());
        double tr = T + sT;
        double vl = std::max(V - sV, tb.v_nodes.front());
        double vr = V + sV;
        if (tr > tb.t_nodes.back() || vr > tb.v_nodes.back())
            throw std::domain_error("incidence: finite-difference stencil outside tabulated range");
        return {(h(tr, V) - h(tl, V)) / (tr - tl), (h(T, vr) - h(T, vl)) / (vr - vl)};
    }
    }
    throw std::logic_error("unreachable incidence kind");
}

HypothesisReport IncidenceModel::verify_hypotheses(double t_max, double v_max,
                                                   int grid_n) const {
    if (!(t_max > 0.0) || !(v_max > 0.0) || grid_n < 2)
        throw std::domain_error("verify_hypotheses: box must be positive, grid_n >= 2");

    HypothesisReport rep;
    rep.smooth = kind_ != IncidenceKind::Tabulated;
    if (!rep.smooth)
        rep.note = "tabulated model is piecewise-smooth only; monotonicity checked on grid nodes";

    const IncidenceTable* tb = as_table();
    double t_hi = tb ? std::min(t_max, tb->t_nodes.back()) : t_max;
    double v_hi = tb ? std::min(v_max, tb->v_nodes.back()) : v_max;

    std::vector<double> ts(grid_n), vs(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        ts[i] = t_hi * i / (grid_n - 1);
        vs[i] = v_hi * i / (grid_n - 1);
    }

    auto flag = [&](bool& field, const std::string& detail, double t, double v) {
        field = false;
        if (!rep.first_violation) rep.first_violation = HypothesisViolation{detail, t, v};
    };

    // axes: h(0,V) = h(T,0) = 0
    for (int i = 0; i < grid_n && rep.vanishes_on_axes; ++i) {
        if (evaluate(0.0, vs[i]) != 0.0) flag(rep.vanishes_on_axes, "h(0,V) != 0", 0.0, vs[i]);
        if (evaluate(ts[i], 0.0) != 0.0) flag(rep.vanishes_on_axes, "h(T,0) != 0", ts[i], 0.0);
    }

    // strict growth in each variable on the positive quadrant
    for (int i = 1; i < grid_n - 1 && rep.strictly_increasing; ++i) {
        for (int j = 1; j < grid_n - 1; ++j) {
            double v0 = evaluate(ts[i], vs[j]);
            if (!(evaluate(ts[i + 1], vs[j]) > v0)) {
                flag(rep.strictly_increasing, "h not strictly increasing in T", ts[i], vs[j]);
                break;
            }
            if (!(evaluate(ts[i], vs[j + 1]) > v0)) {
                flag(rep.strictly_increasing, "h not strictly increasing in V", ts[i], vs[j]);
                break;
            }
        }
    }

    // per-virion rate non-increasing in V
    for (int i = 1; i < grid_n && rep.hbar_non_increasing; ++i) {
        for (int j = 0; j < grid_n - 1; ++j) {
            if (hbar(ts[i], vs[j + 1]) > hbar(ts[i], vs[j]) * (1.0 + 1e-12)) {
                flag(rep.hbar_non_increasing, "hbar increasing in V", ts[i], vs[j]);
                break;
            }
        }
    }

    // large-V decay probe: hbar at a far point must have dropped well below
    // its small-V value; a flat hbar (bilinear) is reported as non-decaying
    {
        double t_probe = ts[grid_n - 1];
        if (t_probe > 0.0) {
            double v_small = vs[1] > 0.0 ? vs[1] : v_hi / grid_n;
            double v_probe = tb ? tb->v_nodes.back() : 1e6 * std::max(1.0, v_hi);
            double lo = hbar(t_probe, v_small);
            double far = hbar(t_probe, v_probe);
            if (tb) {
                // cannot probe beyond the table; report only a clear failure
                if (far > 0.5 * lo && far > 0.0)
                    flag(rep.hbar_decays, "hbar shows no decay within tabulated range", t_probe,
                         v_probe);
            } else if (!(far <= 1e-3 * lo)) {
                flag(rep.hbar_decays, "hbar does not decay for large V", t_probe, v_probe);
            }
        }
    }

    return rep;
}

} // namespace viraldyn

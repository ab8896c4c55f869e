#include "viraldyn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "viraldyn/errors.hpp"
#include "viraldyn/quadrature.hpp"

namespace viraldyn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw validation_error(path + ": " + msg);
}

const json& require_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required field");
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
}

double get_number(const json& obj, const std::string& path, const char* key) {
    return as_number(require_field(obj, path, key), path + "." + key);
}

double get_number_or(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.is_object()) return fallback;
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    return as_number(*it, path + "." + key);
}

double get_positive(const json& obj, const std::string& path, const char* key) {
    double x = get_number(obj, path, key);
    if (x <= 0.0) fail(path + "." + key, "must be positive");
    return x;
}

std::string get_string_or(const json& obj, const std::string& path, const char* key,
                          const std::string& fallback) {
    if (!obj.is_object()) return fallback;
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_string()) fail(path + "." + key, "expected a string");
    return it->get<std::string>();
}

std::vector<double> as_number_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        std::ostringstream p;
        p << path << "[" << i << "]";
        out.push_back(as_number(v[i], p.str()));
    }
    return out;
}

std::vector<double> get_array(const json& obj, const std::string& path, const char* key) {
    return as_number_array(require_field(obj, path, key), path + "." + key);
}

IncidenceModel parse_incidence(const json& j, const std::string& path) {
    std::string kind = get_string_or(j, path, "kind", "");
    if (kind.empty()) fail(path + ".kind", "missing required field");
    // factory-level complaints (bad parameter ranges) get the field path prefix
    auto build = [&](auto&& factory) -> IncidenceModel {
        try {
            return factory();
        } catch (const validation_error& e) {
            fail(path, e.what());
        }
    };
    if (kind == "bilinear") {
        double beta = get_number(j, path, "beta");
        return build([&] { return IncidenceModel::bilinear(beta); });
    }
    if (kind == "saturated") {
        double beta = get_number(j, path, "beta");
        double alpha = get_number(j, path, "alpha");
        return build([&] { return IncidenceModel::saturated(beta, alpha); });
    }
    if (kind == "beddington_deangelis") {
        double beta = get_number(j, path, "beta");
        double a = get_number(j, path, "a");
        double b = get_number(j, path, "b");
        return build([&] { return IncidenceModel::beddington_deangelis(beta, a, b); });
    }
    if (kind == "tabulated") {
        IncidenceTable table;
        table.t_nodes = get_array(j, path, "T");
        table.v_nodes = get_array(j, path, "V");
        const json& rows = require_field(j, path, "hbar");
        if (!rows.is_array()) fail(path + ".hbar", "expected an array of rows");
        for (size_t r = 0; r < rows.size(); ++r) {
            std::ostringstream p;
            p << path << ".hbar[" << r << "]";
            table.hbar.push_back(as_number_array(rows[r], p.str()));
        }
        return build([&] { return IncidenceModel::tabulated(std::move(table)); });
    }
    fail(path + ".kind", "unknown incidence kind '" + kind + "'");
}

DeltaSpec parse_delta(const json& j, const std::string& path) {
    DeltaSpec spec;
    std::string kind = get_string_or(j, path, "kind", "");
    if (kind == "constant") {
        spec.kind = DeltaKind::Constant;
        spec.delta_star = get_number(j, path, "delta_star");
    } else if (kind == "piecewise") {
        spec.kind = DeltaKind::PiecewiseConstant;
        spec.d = get_number(j, path, "d");
        spec.delta_star = get_number(j, path, "delta_star");
        spec.tau = get_number(j, path, "tau");
    } else if (kind == "tabulated") {
        spec.kind = DeltaKind::Tabulated;
        spec.theta = get_array(j, path, "theta");
        spec.value = get_array(j, path, "value");
    } else {
        fail(path + ".kind", "unknown mortality kind '" + kind + "'");
    }
    return spec;
}

ProductionSpec parse_production(const json& j, const std::string& path) {
    ProductionSpec spec;
    std::string kind = get_string_or(j, path, "kind", "");
    if (kind == "constant") {
        spec.kind = ProductionKind::Constant;
        spec.p_star = get_number(j, path, "p_star");
    } else if (kind == "delayed_constant") {
        spec.kind = ProductionKind::DelayedConstant;
        spec.p_star = get_number(j, path, "p_star");
        spec.omega = get_number(j, path, "omega");
    } else if (kind == "delayed_saturating") {
        spec.kind = ProductionKind::DelayedSaturating;
        spec.p_star = get_number(j, path, "p_star");
        spec.r = get_number(j, path, "r");
        spec.theta1 = get_number(j, path, "theta1");
    } else if (kind == "exponential_growth") {
        spec.kind = ProductionKind::ExponentialGrowth;
        spec.c0 = get_number(j, path, "c0");
        spec.amplitude = get_number(j, path, "amplitude");
        spec.exponent = get_number(j, path, "exponent");
    } else if (kind == "tabulated") {
        spec.kind = ProductionKind::Tabulated;
        spec.theta = get_array(j, path, "theta");
        spec.value = get_array(j, path, "value");
    } else {
        fail(path + ".kind", "unknown production kind '" + kind + "'");
    }
    return spec;
}

ProfileSpec parse_profile(const json& j, const std::string& path) {
    ProfileSpec spec;
    std::string kind = get_string_or(j, path, "kind", "");
    if (kind == "zero") {
        spec.kind = ProfileSpec::Kind::Zero;
    } else if (kind == "exponential") {
        spec.kind = ProfileSpec::Kind::Exponential;
        spec.amplitude = get_number(j, path, "amplitude");
        spec.rate = get_number(j, path, "rate");
        if (spec.amplitude < 0.0) fail(path + ".amplitude", "must be non-negative");
        if (spec.rate <= 0.0) fail(path + ".rate", "must be positive");
    } else if (kind == "boundary_matched") {
        spec.kind = ProfileSpec::Kind::BoundaryMatched;
    } else if (kind == "tabulated") {
        spec.kind = ProfileSpec::Kind::Tabulated;
        spec.theta = get_array(j, path, "theta");
        spec.value = get_array(j, path, "value");
        if (spec.theta.size() != spec.value.size() || spec.theta.size() < 2)
            fail(path, "tabulated profile needs matching theta/value arrays with >= 2 nodes");
        for (size_t i = 0; i < spec.theta.size(); ++i) {
            if (i > 0 && spec.theta[i] <= spec.theta[i - 1])
                fail(path + ".theta", "ages must be strictly increasing");
            if (spec.value[i] < 0.0) fail(path + ".value", "must be non-negative");
        }
        if (spec.theta.front() != 0.0) fail(path + ".theta", "profile table must start at age 0");
    } else {
        fail(path + ".kind", "unknown profile kind '" + kind + "'");
    }
    return spec;
}

HistorySpec parse_history(const json& j, const std::string& path) {
    HistorySpec spec;
    std::string kind = get_string_or(j, path, "kind", "constant");
    if (kind == "constant") {
        spec.kind = HistorySpec::Kind::Constant;
        if (j.is_object() && j.contains("value")) {
            spec.has_value = true;
            spec.value = get_number(j, path, "value");
            if (spec.value < 0.0) fail(path + ".value", "history must be non-negative");
        }
    } else if (kind == "tabulated") {
        spec.kind = HistorySpec::Kind::Tabulated;
        spec.t = get_array(j, path, "t");
        spec.value_tab = get_array(j, path, "value");
        if (spec.t.size() != spec.value_tab.size() || spec.t.size() < 2)
            fail(path, "tabulated history needs matching t/value arrays with >= 2 nodes");
        for (size_t i = 0; i < spec.t.size(); ++i) {
            if (i > 0 && spec.t[i] <= spec.t[i - 1])
                fail(path + ".t", "times must be strictly increasing");
            if (spec.value_tab[i] < 0.0) fail(path + ".value", "history must be non-negative");
        }
        if (spec.t.back() < 0.0) fail(path + ".t", "history must reach t = 0");
    } else {
        fail(path + ".kind", "unknown history kind '" + kind + "'");
    }
    return spec;
}

json incidence_to_json(const IncidenceModel& m) {
    json j;
    switch (m.kind()) {
    case IncidenceKind::Bilinear:
        j["kind"] = "bilinear";
        j["beta"] = m.as_bilinear()->beta;
        break;
    case IncidenceKind::Saturated:
        j["kind"] = "saturated";
        j["beta"] = m.as_saturated()->beta;
        j["alpha"] = m.as_saturated()->alpha;
        break;
    case IncidenceKind::BeddingtonDeAngelis:
        j["kind"] = "beddington_deangelis";
        j["beta"] = m.as_beddington_deangelis()->beta;
        j["a"] = m.as_beddington_deangelis()->a;
        j["b"] = m.as_beddington_deangelis()->b;
        break;
    case IncidenceKind::Tabulated:
        j["kind"] = "tabulated";
        j["T"] = m.as_table()->t_nodes;
        j["V"] = m.as_table()->v_nodes;
        j["hbar"] = m.as_table()->hbar;
        break;
    }
    return j;
}

json delta_to_json(const DeltaSpec& s) {
    json j;
    switch (s.kind) {
    case DeltaKind::Constant:
        j["kind"] = "constant";
        j["delta_star"] = s.delta_star;
        break;
    case DeltaKind::PiecewiseConstant:
        j["kind"] = "piecewise";
        j["d"] = s.d;
        j["delta_star"] = s.delta_star;
        j["tau"] = s.tau;
        break;
    case DeltaKind::Tabulated:
        j["kind"] = "tabulated";
        j["theta"] = s.theta;
        j["value"] = s.value;
        break;
    }
    return j;
}

json production_to_json(const ProductionSpec& s) {
    json j;
    switch (s.kind) {
    case ProductionKind::Constant:
        j["kind"] = "constant";
        j["p_star"] = s.p_star;
        break;
    case ProductionKind::DelayedConstant:
        j["kind"] = "delayed_constant";
        j["p_star"] = s.p_star;
        j["omega"] = s.omega;
        break;
    case ProductionKind::DelayedSaturating:
        j["kind"] = "delayed_saturating";
        j["p_star"] = s.p_star;
        j["r"] = s.r;
        j["theta1"] = s.theta1;
        break;
    case ProductionKind::ExponentialGrowth:
        j["kind"] = "exponential_growth";
        j["c0"] = s.c0;
        j["amplitude"] = s.amplitude;
        j["exponent"] = s.exponent;
        break;
    case ProductionKind::Tabulated:
        j["kind"] = "tabulated";
        j["theta"] = s.theta;
        j["value"] = s.value;
        break;
    }
    return j;
}

json profile_to_json(const ProfileSpec& s) {
    json j;
    switch (s.kind) {
    case ProfileSpec::Kind::Zero:
        j["kind"] = "zero";
        break;
    case ProfileSpec::Kind::Exponential:
        j["kind"] = "exponential";
        j["amplitude"] = s.amplitude;
        j["rate"] = s.rate;
        break;
    case ProfileSpec::Kind::BoundaryMatched:
        j["kind"] = "boundary_matched";
        break;
    case ProfileSpec::Kind::Tabulated:
        j["kind"] = "tabulated";
        j["theta"] = s.theta;
        j["value"] = s.value;
        break;
    }
    return j;
}

json history_to_json(const HistorySpec& s) {
    json j;
    if (s.kind == HistorySpec::Kind::Constant) {
        j["kind"] = "constant";
        if (s.has_value) j["value"] = s.value;
    } else {
        j["kind"] = "tabulated";
        j["t"] = s.t;
        j["value"] = s.value_tab;
    }
    return j;
}

void run_hypothesis_audit(Scenario& s) {
    double v_scale = std::max(100.0, 10.0 * s.globals.b * s.globals.h / s.globals.k);
    for (size_t j = 0; j < s.classes.size(); ++j) {
        const ClassSpec& cl = s.classes[j];
        double t_scale = 1.2 * cl.lambda / cl.d;
        HypothesisReport rep = cl.incidence.verify_hypotheses(t_scale, v_scale, 17);
        std::ostringstream w;
        if (!rep.hbar_decays) {
            w << "classes[" << j
              << "].incidence: per-virion rate does not vanish at large V; equilibrium "
                 "solves need an explicit numerics.v_bracket";
        } else if (!rep.all_pass()) {
            w << "classes[" << j << "].incidence: hypothesis check failed";
            if (rep.first_violation) w << " (" << rep.first_violation->detail << ")";
        } else if (!rep.smooth) {
            w << "classes[" << j << "].incidence: " << rep.note;
        }
        std::string text = w.str();
        if (!text.empty()) s.warnings.push_back(text);
    }
}

Scenario parse_scenario_json(const json& root) {
    Scenario s;
    s.name = get_string_or(root, "$", "name", "");
    if (root.contains("provenance")) {
        const json& p = root["provenance"];
        if (p.is_string()) {
            s.provenance = p.get<std::string>();
        } else if (p.is_array()) {
            std::ostringstream joined;
            for (size_t i = 0; i < p.size(); ++i) {
                if (!p[i].is_string()) fail("$.provenance", "expected strings");
                if (i) joined << "\n";
                joined << p[i].get<std::string>();
            }
            s.provenance = joined.str();
        } else {
            fail("$.provenance", "expected a string or array of strings");
        }
    }

    const json& classes = require_field(root, "$", "classes");
    if (!classes.is_array() || classes.empty())
        fail("$.classes", "expected a non-empty array");
    for (size_t j = 0; j < classes.size(); ++j) {
        std::ostringstream base;
        base << "$.classes[" << j << "]";
        const std::string path = base.str();
        const json& cj = classes[j];
        if (!cj.is_object()) fail(path, "expected an object");
        ClassSpec cl{get_string_or(cj, path, "name", ""),
                     get_positive(cj, path, "lambda"),
                     get_positive(cj, path, "d"),
                     parse_incidence(require_field(cj, path, "incidence"), path + ".incidence"),
                     [&] {
                         const json& kj = require_field(cj, path, "kernel");
                         DeltaSpec ds = parse_delta(require_field(kj, path + ".kernel", "delta"),
                                                    path + ".kernel.delta");
                         ProductionSpec ps =
                             parse_production(require_field(kj, path + ".kernel", "production"),
                                              path + ".kernel.production");
                         try {
                             return AgeKernel(std::move(ds), std::move(ps));
                         } catch (const validation_error& e) {
                             fail(path + ".kernel", e.what());
                         }
                     }()};
        s.classes.push_back(std::move(cl));
    }
    size_t n = s.classes.size();

    const json& gj = require_field(root, "$", "globals");
    s.globals.c = get_positive(gj, "$.globals", "c");
    s.globals.q = get_positive(gj, "$.globals", "q");
    s.globals.k = get_positive(gj, "$.globals", "k");
    s.globals.h = get_positive(gj, "$.globals", "h");
    s.globals.b = get_positive(gj, "$.globals", "b");

    // initial data defaults to the uninfected rest state
    s.initial.T0.clear();
    for (const auto& cl : s.classes) s.initial.T0.push_back(cl.lambda / cl.d);
    s.initial.profile.assign(n, ProfileSpec{});
    s.initial.history.assign(n, HistorySpec{});
    if (root.contains("initial")) {
        const json& ij = root["initial"];
        if (!ij.is_object()) fail("$.initial", "expected an object");
        if (ij.contains("T0")) {
            s.initial.T0 = as_number_array(ij["T0"], "$.initial.T0");
            if (s.initial.T0.size() != n)
                fail("$.initial.T0", "length must equal the number of classes");
            for (size_t j = 0; j < n; ++j)
                if (s.initial.T0[j] < 0.0) fail("$.initial.T0", "must be non-negative");
        }
        s.initial.V0 = get_number_or(ij, "$.initial", "V0", 0.0);
        s.initial.A0 = get_number_or(ij, "$.initial", "A0", 0.0);
        if (s.initial.V0 < 0.0) fail("$.initial.V0", "must be non-negative");
        if (s.initial.A0 < 0.0) fail("$.initial.A0", "must be non-negative");
        // a single object is replicated across classes; an array must match n
        auto parse_per_class = [&](const char* key, auto parser, auto& out) {
            if (!ij.contains(key)) return;
            const json& pj = ij[key];
            std::string base = std::string("$.initial.") + key;
            if (pj.is_object()) {
                auto one = parser(pj, base);
                out.assign(n, one);
            } else if (pj.is_array()) {
                if (pj.size() != n) fail(base, "length must equal the number of classes");
                out.clear();
                for (size_t j = 0; j < n; ++j) {
                    std::ostringstream p;
                    p << base << "[" << j << "]";
                    out.push_back(parser(pj[j], p.str()));
                }
            } else {
                fail(base, "expected an object or array");
            }
        };
        parse_per_class("profile", parse_profile, s.initial.profile);
        parse_per_class("history", parse_history, s.initial.history);
    }

    if (root.contains("numerics")) {
        const json& nj = root["numerics"];
        if (!nj.is_object()) fail("$.numerics", "expected an object");
        Numerics& num = s.numerics;
        num.dtheta = get_number_or(nj, "$.numerics", "dtheta", num.dtheta);
        num.theta_max = get_number_or(nj, "$.numerics", "theta_max", num.theta_max);
        num.dt = get_number_or(nj, "$.numerics", "dt", num.dt);
        num.tail_tol = get_number_or(nj, "$.numerics", "tail_tol", num.tail_tol);
        num.root_x_tol = get_number_or(nj, "$.numerics", "root_x_tol", num.root_x_tol);
        num.root_f_tol_rel = get_number_or(nj, "$.numerics", "root_f_tol_rel", num.root_f_tol_rel);
        if (num.dtheta <= 0.0) fail("$.numerics.dtheta", "must be positive");
        if (num.theta_max < 0.0) fail("$.numerics.theta_max", "must be non-negative");
        if (num.dt < 0.0) fail("$.numerics.dt", "must be non-negative");
        if (num.tail_tol <= 0.0) fail("$.numerics.tail_tol", "must be positive");
        if (num.root_x_tol <= 0.0) fail("$.numerics.root_x_tol", "must be positive");
        if (num.root_f_tol_rel <= 0.0) fail("$.numerics.root_f_tol_rel", "must be positive");
        if (nj.contains("v_bracket")) {
            auto br = as_number_array(nj["v_bracket"], "$.numerics.v_bracket");
            if (br.size() != 2 || !(br[0] >= 0.0) || !(br[1] > br[0]))
                fail("$.numerics.v_bracket", "expected [lo, hi] with 0 <= lo < hi");
            num.have_v_bracket = true;
            num.v_bracket_lo = br[0];
            num.v_bracket_hi = br[1];
        }
    }

    // optional explicit delay block; must agree with the production kernels
    if (root.contains("dde")) {
        const json& dj = root["dde"];
        double omega = get_number(dj, "$.dde", "omega");
        if (!is_reducible(s))
            fail("$.dde", "scenario does not have the single-delay shape "
                          "(constant mortality, delayed-constant production, shared onset)");
        if (omega != s.classes[0].kernel.production_spec().omega)
            fail("$.dde.omega", "does not match the production onset age of the kernels");
    }

    run_hypothesis_audit(s);
    return s;
}

} // namespace

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw validation_error(std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario_json(root);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
    json root;
    if (!s.name.empty()) root["name"] = s.name;
    if (!s.provenance.empty()) root["provenance"] = s.provenance;
    root["classes"] = json::array();
    for (const auto& cl : s.classes) {
        json cj;
        if (!cl.name.empty()) cj["name"] = cl.name;
        cj["lambda"] = cl.lambda;
        cj["d"] = cl.d;
        cj["incidence"] = incidence_to_json(cl.incidence);
        cj["kernel"] = {{"delta", delta_to_json(cl.kernel.delta_spec())},
                        {"production", production_to_json(cl.kernel.production_spec())}};
        root["classes"].push_back(std::move(cj));
    }
    root["globals"] = {{"c", s.globals.c},
                       {"q", s.globals.q},
                       {"k", s.globals.k},
                       {"h", s.globals.h},
                       {"b", s.globals.b}};
    json ij;
    ij["T0"] = s.initial.T0;
    ij["V0"] = s.initial.V0;
    ij["A0"] = s.initial.A0;
    ij["profile"] = json::array();
    for (const auto& p : s.initial.profile) ij["profile"].push_back(profile_to_json(p));
    ij["history"] = json::array();
    for (const auto& hh : s.initial.history) ij["history"].push_back(history_to_json(hh));
    root["initial"] = std::move(ij);
    json nj;
    nj["dtheta"] = s.numerics.dtheta;
    nj["theta_max"] = s.numerics.theta_max;
    nj["dt"] = s.numerics.dt;
    nj["tail_tol"] = s.numerics.tail_tol;
    nj["root_x_tol"] = s.numerics.root_x_tol;
    nj["root_f_tol_rel"] = s.numerics.root_f_tol_rel;
    if (s.numerics.have_v_bracket)
        nj["v_bracket"] = {s.numerics.v_bracket_lo, s.numerics.v_bracket_hi};
    root["numerics"] = std::move(nj);
    return root.dump(2) + "\n";
}

bool is_reducible(const Scenario& s) {
    if (s.classes.empty()) return false;
    double omega = 0.0;
    bool first = true;
    for (const auto& cl : s.classes) {
        if (cl.kernel.delta_spec().kind != DeltaKind::Constant) return false;
        if (cl.kernel.production_spec().kind != ProductionKind::DelayedConstant) return false;
        double w = cl.kernel.production_spec().omega;
        if (first) {
            omega = w;
            first = false;
        } else if (w != omega) {
            return false;
        }
    }
    return true;
}

double shared_omega(const Scenario& s) {
    if (!is_reducible(s))
        throw validation_error("scenario does not have the single-delay shape "
                               "(constant mortality, delayed-constant production, shared onset)");
    return s.classes[0].kernel.production_spec().omega;
}

double profile_value(const Scenario& s, size_t j, double theta) {
    if (j >= s.classes.size()) throw std::out_of_range("profile_value: class index");
    if (theta < 0.0) throw std::domain_error("profile_value: age must be non-negative");
    const ProfileSpec& p = s.initial.profile[j];
    switch (p.kind) {
    case ProfileSpec::Kind::Zero:
        return 0.0;
    case ProfileSpec::Kind::Exponential:
        return p.amplitude * std::exp(-p.rate * theta);
    case ProfileSpec::Kind::BoundaryMatched:
        return s.classes[j].incidence.evaluate(s.initial.T0[j], s.initial.V0) *
               s.classes[j].kernel.survival(theta);
    case ProfileSpec::Kind::Tabulated: {
        if (theta >= p.theta.back()) return theta > p.theta.back() ? 0.0 : p.value.back();
        auto it = std::upper_bound(p.theta.begin(), p.theta.end(), theta);
        size_t i = static_cast<size_t>(it - p.theta.begin());
        i = (i == 0) ? 0 : i - 1;
        double w = (theta - p.theta[i]) / (p.theta[i + 1] - p.theta[i]);
        return p.value[i] + w * (p.value[i + 1] - p.value[i]);
    }
    }
    return 0.0;
}

double profile_integral(const Scenario& s, size_t j) {
    if (j >= s.classes.size()) throw std::out_of_range("profile_integral: class index");
    const ProfileSpec& p = s.initial.profile[j];
    switch (p.kind) {
    case ProfileSpec::Kind::Zero:
        return 0.0;
    case ProfileSpec::Kind::Exponential:
        return p.amplitude / p.rate;
    case ProfileSpec::Kind::BoundaryMatched: {
        double h0 = s.classes[j].incidence.evaluate(s.initial.T0[j], s.initial.V0);
        if (h0 == 0.0) return 0.0;
        const AgeKernel& kern = s.classes[j].kernel;
        // expanding segments; survival decays at least like exp(-delta_min*theta)
        double total = 0.0, lo = 0.0, len = 1.0;
        for (int seg = 0; seg < 60; ++seg) {
            double add = adaptive_simpson([&](double th) { return kern.survival(th); }, lo,
                                          lo + len, 1e-14 * std::max(total, 1.0));
            total += add;
            lo += len;
            len *= 2.0;
            if (add < 1e-14 * total) break;
        }
        return h0 * total;
    }
    case ProfileSpec::Kind::Tabulated: {
        double total = 0.0;
        for (size_t i = 1; i < p.theta.size(); ++i)
            total += 0.5 * (p.value[i] + p.value[i - 1]) * (p.theta[i] - p.theta[i - 1]);
        return total;
    }
    }
    return 0.0;
}

} // namespace viraldyn

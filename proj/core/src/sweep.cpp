#include "viraldyn/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "viraldyn/csv.hpp"
#include "viraldyn/errors.hpp"

namespace viraldyn {

namespace {

using nlohmann::json;

// "classes[0].incidence.beta" -> "/classes/0/incidence/beta"
std::string to_json_pointer(const std::string& path) {
    std::string out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out += "/" + token;
            token.clear();
        }
    };
    for (char c : path) {
        if (c == '.') {
            flush();
        } else if (c == '[') {
            flush();
        } else if (c == ']') {
            flush();
        } else {
            token += c;
        }
    }
    flush();
    if (out.empty()) throw validation_error("empty sweep parameter path");
    return out;
}

std::vector<double> sweep_values(double lo, double hi, size_t steps, bool log_scale) {
    if (steps == 0) throw validation_error("sweep needs at least one step");
    if (!(lo <= hi)) throw validation_error("sweep range is reversed");
    if (log_scale && !(lo > 0.0))
        throw validation_error("log sweep needs a positive lower bound");
    std::vector<double> vals(steps);
    if (steps == 1) {
        vals[0] = lo;
        return vals;
    }
    for (size_t i = 0; i < steps; ++i) {
        const double u = double(i) / double(steps - 1);
        vals[i] = log_scale ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
    }
    vals.back() = hi;
    return vals;
}

void evaluate_point(const std::string& base_json, const json::json_pointer& ptr, SweepRow& row) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        json doc = json::parse(base_json);
        doc[ptr] = row.value;
        Scenario s = parse_scenario(doc.dump());
        ThresholdReport rep = threshold_report(s);
        row.r_per_class = rep.r_per_class;
        row.r0 = rep.r0;
        row.r_star = rep.r_star;
        row.has_r_an = rep.has_r_an;
        row.r_an = rep.has_r_an ? rep.r_an : nan;
        row.regime = regime_name(rep.regime);
        SteadyState es = solve_immune_free(s);
        row.e_star_present = es.present;
        if (es.present) {
            row.e_star_t = es.T;
            row.e_star_v = es.V;
        } else {
            row.e_star_t.assign(s.n_classes(), nan);
            row.e_star_v = nan;
        }
        SteadyState eh = solve_antibody(s);
        row.e_hat_present = eh.present;
        if (eh.present) {
            row.e_hat_t = eh.T;
            row.e_hat_v = eh.V;
            row.e_hat_a = eh.A;
        } else {
            row.e_hat_t.assign(s.n_classes(), nan);
            row.e_hat_v = nan;
            row.e_hat_a = nan;
        }
    } catch (const std::exception& e) {
        row.error = e.what();
    }
}

} // namespace

SweepResult run_sweep(const Scenario& base, const std::string& param_path, double lo, double hi,
                      size_t steps, bool log_scale, unsigned n_threads) {
    const std::string base_json = scenario_to_json(base);
    const json::json_pointer ptr(to_json_pointer(param_path));

    // the path must already address a number; anything else is a shape error
    {
        json doc = json::parse(base_json);
        json* node = nullptr;
        try {
            node = &doc.at(ptr);
        } catch (const json::exception&) {
            throw validation_error("sweep path '" + param_path + "' not found in the scenario");
        }
        if (!node->is_number())
            throw validation_error("sweep path '" + param_path +
                                   "' does not address a scalar field");
    }

    SweepResult result;
    result.param = param_path;
    const auto values = sweep_values(lo, hi, steps, log_scale);
    result.rows.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        result.rows[i].index = i;
        result.rows[i].value = values[i];
    }

    unsigned workers = n_threads ? n_threads : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, values.size());

    std::atomic<size_t> next{0};
    auto work = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= result.rows.size()) break;
            evaluate_point(base_json, ptr, result.rows[i]);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return result;
}

void write_sweep_csv(const std::string& path, const Scenario& base, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    const size_t n = base.n_classes();
    out << "index,value";
    for (size_t j = 0; j < n; ++j) out << ",r_" << (j + 1);
    out << ",r0,r_star,r_an,regime,e_star_present";
    for (size_t j = 0; j < n; ++j) out << ",e_star_T_" << (j + 1);
    out << ",e_star_V,e_hat_present";
    for (size_t j = 0; j < n; ++j) out << ",e_hat_T_" << (j + 1);
    out << ",e_hat_V,e_hat_A,error\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : result.rows) {
        out << row.index << "," << format_double(row.value);
        const bool ok = row.error.empty();
        for (size_t j = 0; j < n; ++j)
            out << "," << format_double(ok && j < row.r_per_class.size() ? row.r_per_class[j]
                                                                         : nan);
        out << "," << format_double(ok ? row.r0 : nan);
        out << "," << format_double(ok ? row.r_star : nan);
        out << "," << format_double(ok && row.has_r_an ? row.r_an : nan);
        out << "," << (ok ? row.regime : std::string("error"));
        out << "," << (ok && row.e_star_present ? 1 : 0);
        for (size_t j = 0; j < n; ++j)
            out << "," << format_double(ok && j < row.e_star_t.size() ? row.e_star_t[j] : nan);
        out << "," << format_double(ok ? row.e_star_v : nan);
        out << "," << (ok && row.e_hat_present ? 1 : 0);
        for (size_t j = 0; j < n; ++j)
            out << "," << format_double(ok && j < row.e_hat_t.size() ? row.e_hat_t[j] : nan);
        out << "," << format_double(ok ? row.e_hat_v : nan);
        out << "," << format_double(ok ? row.e_hat_a : nan);
        // errors may contain commas; quote the field
        out << ",\"";
        for (char c : row.error) {
            if (c == '"')
                out << "\"\"";
            else
                out << c;
        }
        out << "\"\n";
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

} // namespace viraldyn

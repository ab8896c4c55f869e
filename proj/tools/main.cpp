#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "viraldyn/agesim.hpp"
#include "viraldyn/csv.hpp"
#include "viraldyn/ddesim.hpp"
#include "viraldyn/diagnostics.hpp"
#include "viraldyn/equilibria.hpp"
#include "viraldyn/errors.hpp"
#include "viraldyn/plots.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/sweep.hpp"
#include "viraldyn/thresholds.hpp"

namespace vd = viraldyn;
namespace fs = std::filesystem;

namespace {

constexpr double nan_d = std::numeric_limits<double>::quiet_NaN();

std::string fmt4(double x) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.4f", x);
    return b;
}

std::string sanitize(std::string name) {
    for (char& c : name)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    if (name.empty()) name = "scenario";
    return name;
}

void print_warnings(const vd::Scenario& s) {
    for (const auto& w : s.warnings) std::printf("warning: %s\n", w.c_str());
}

void print_steady(const char* label, const vd::SteadyState& ss) {
    if (!ss.present) {
        std::printf("%s: absent\n", label);
        return;
    }
    std::string ts;
    for (size_t j = 0; j < ss.T.size(); ++j) ts += (j ? ", " : "") + vd::format_double(ss.T[j]);
    std::printf("%s: T = [%s], V = %s, A = %s, residual = %.3e\n", label, ts.c_str(),
                vd::format_double(ss.V).c_str(), vd::format_double(ss.A).c_str(),
                ss.max_residual);
}

struct DiagPlan {
    std::vector<std::string> names;
    vd::SteadyState e_star, e_hat;
    bool has_w1 = false;
    bool has_w2 = false;
};

DiagPlan make_diag_plan(const vd::Scenario& s) {
    DiagPlan p;
    p.names.push_back("W");
    p.e_star = vd::solve_immune_free(s);
    if (p.e_star.present) {
        p.has_w1 = true;
        p.names.push_back("W1");
    }
    p.e_hat = vd::solve_antibody(s);
    if (p.e_hat.present) {
        p.has_w2 = true;
        p.names.push_back("W2");
    }
    p.names.push_back("phi");
    return p;
}

std::vector<double> compute_diag(const vd::DiagnosticsEvaluator& ev, const DiagPlan& plan,
                                 const vd::SystemState& st) {
    std::vector<double> out;
    try {
        out.push_back(ev.lyapunov_w(st));
    } catch (const std::exception&) {
        out.push_back(nan_d);
    }
    if (plan.has_w1) {
        try {
            auto fv = ev.lyapunov_w1(st, plan.e_star);
            out.push_back(fv.defined ? fv.value : nan_d);
        } catch (const std::exception&) {
            out.push_back(nan_d);
        }
    }
    if (plan.has_w2) {
        try {
            auto fv = ev.lyapunov_w2(st, plan.e_hat);
            out.push_back(fv.defined ? fv.value : nan_d);
        } catch (const std::exception&) {
            out.push_back(nan_d);
        }
    }
    try {
        out.push_back(ev.persistence_phi(st));
    } catch (const std::exception&) {
        out.push_back(nan_d);
    }
    return out;
}

void print_descent_summary(const vd::TrajectoryRecord& rec) {
    for (size_t c = 0; c < rec.diag_names.size(); ++c) {
        double first = nan_d;
        for (const auto& smp : rec.samples) {
            if (c < smp.diag.size() && !std::isnan(smp.diag[c])) {
                first = smp.diag[c];
                break;
            }
        }
        const double tol = 1e-8 * std::max(1.0, std::abs(first));
        auto drep = vd::descent_check(rec, c, tol);
        std::printf("  %-4s %zu defined samples, max slope %.3e/day, non-increasing: %s\n",
                    (rec.diag_names[c] + ":").c_str(), drep.defined_samples,
                    drep.max_slope == -std::numeric_limits<double>::infinity() ? 0.0
                                                                               : drep.max_slope,
                    drep.passed ? "yes" : "no");
        if (!drep.passed)
            std::printf("       first slope above %.1e at t = %s\n", tol,
                        vd::format_double(drep.first_violation_time).c_str());
    }
}

void print_run_summary(const vd::TrajectoryRecord& rec) {
    const auto& last = rec.samples.back();
    std::string ts, is;
    for (size_t j = 0; j < last.T.size(); ++j) ts += (j ? ", " : "") + vd::format_double(last.T[j]);
    for (size_t j = 0; j < last.I.size(); ++j) is += (j ? ", " : "") + vd::format_double(last.I[j]);
    std::printf("final state at t = %s: T = [%s], I = [%s], V = %s, A = %s\n",
                vd::format_double(last.t).c_str(), ts.c_str(), is.c_str(),
                vd::format_double(last.V).c_str(), vd::format_double(last.A).c_str());
    std::printf("state box: started inside = %s", rec.started_in_box ? "yes" : "no");
    if (rec.box_entry_time >= 0.0)
        std::printf(", first inside at t = %s", vd::format_double(rec.box_entry_time).c_str());
    if (rec.first_box_exit >= 0.0)
        std::printf(", exited at t = %s", vd::format_double(rec.first_box_exit).c_str());
    std::printf("\n");
    if (rec.clamp_count > 0)
        std::printf("roundoff clamps to zero: %zu\n", rec.clamp_count);
    for (const auto& n : rec.notes) std::printf("note: %s\n", n.c_str());
}

nlohmann::json steady_json(const vd::SteadyState& ss) {
    nlohmann::json j;
    j["present"] = ss.present;
    if (ss.present) {
        j["T"] = ss.T;
        j["V"] = ss.V;
        j["A"] = ss.A;
        j["boundary"] = ss.boundary;
        j["residual"] = ss.max_residual;
    }
    return j;
}

int cmd_report(const std::string& path) {
    vd::Scenario s = vd::load_scenario(path);
    print_warnings(s);
    std::printf("scenario: %s (%zu class%s)\n", s.name.c_str(), s.n_classes(),
                s.n_classes() == 1 ? "" : "es");
    auto rep = vd::threshold_report(s);
    for (size_t j = 0; j < rep.r_per_class.size(); ++j)
        std::printf("R_%zu = %s (%s)\n", j + 1, fmt4(rep.r_per_class[j]).c_str(),
                    vd::format_double(rep.r_per_class[j]).c_str());
    std::printf("R0 = %s (%s)\n", fmt4(rep.r0).c_str(), vd::format_double(rep.r0).c_str());
    std::printf("R* = %s (%s)\n", fmt4(rep.r_star).c_str(),
                vd::format_double(rep.r_star).c_str());
    if (rep.has_r_an)
        std::printf("R_AN = %s (%s)\n", fmt4(rep.r_an).c_str(),
                    vd::format_double(rep.r_an).c_str());
    std::printf("regime: %s\n", vd::regime_name(rep.regime));
    if (rep.near_r0_boundary)
        std::printf("note: R0 is within 1e-9 of 1, classification is fragile\n");
    if (rep.near_rstar_boundary)
        std::printf("note: R* is within 1e-9 of 1, classification is fragile\n");
    print_steady("E0", vd::infection_free(s));
    print_steady("E*", vd::solve_immune_free(s));
    print_steady("E_hat", vd::solve_antibody(s));
    return 0;
}

int cmd_equilibria(const std::string& path, const std::string& out_dir) {
    vd::Scenario s = vd::load_scenario(path);
    print_warnings(s);
    auto e0 = vd::infection_free(s);
    auto es = vd::solve_immune_free(s);
    auto eh = vd::solve_antibody(s);
    print_steady("E0", e0);
    print_steady("E*", es);
    print_steady("E_hat", eh);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        nlohmann::json doc;
        doc["scenario"] = s.name;
        doc["infection_free"] = steady_json(e0);
        doc["immune_free"] = steady_json(es);
        doc["antibody"] = steady_json(eh);
        const fs::path p = fs::path(out_dir) / "equilibria.json";
        std::ofstream out(p);
        if (!out) throw vd::validation_error("cannot open " + p.string() + " for writing");
        out << doc.dump(2) << "\n";
        std::printf("wrote %s\n", p.string().c_str());
    }
    return 0;
}

int cmd_simulate(const std::string& path, const std::string& model, double t_end, double stride,
                 double dtheta_override, const std::string& out_dir, bool diagnostics) {
    vd::Scenario s = vd::load_scenario(path);
    if (dtheta_override > 0.0) s.numerics.dtheta = dtheta_override;
    print_warnings(s);
    fs::create_directories(out_dir);
    const std::string base = sanitize(s.name) + "_" + model;
    const fs::path csv_path = fs::path(out_dir) / (base + "_trajectory.csv");
    const fs::path prof_path = fs::path(out_dir) / (base + "_profile.csv");

    vd::TrajectoryRecord rec;
    vd::SystemState final_state;
    DiagPlan plan;

    if (model == "age") {
        vd::AgeSimulator sim(s);
        std::optional<vd::DiagnosticsEvaluator> ev;
        vd::SampleHook hook;
        if (diagnostics) {
            plan = make_diag_plan(s);
            ev.emplace(s, sim.dtheta(), sim.n_nodes());
            hook = [&](const vd::SystemState& st, vd::TrajectorySample& smp) {
                smp.diag = compute_diag(*ev, plan, st);
            };
        }
        final_state = sim.init_state();
        rec = sim.run(final_state, t_end, stride, hook);
        if (diagnostics) rec.diag_names = plan.names;
    } else {
        vd::DdeSimulator sim(s);
        rec = sim.run(t_end, stride);
        const double dth = 0.1;
        const double th_max = vd::AgeSimulator::default_theta_max(s);
        if (diagnostics) {
            plan = make_diag_plan(s);
            const size_t nodes = size_t(std::llround(th_max / dth)) + 1;
            vd::DiagnosticsEvaluator ev(s, dth, nodes);
            for (auto& smp : rec.samples)
                smp.diag = compute_diag(ev, plan, vd::reconstruct_state(s, sim, smp.t, dth, th_max));
            rec.diag_names = plan.names;
        }
        final_state = vd::reconstruct_state(s, sim, rec.samples.back().t, dth, th_max);
    }

    vd::write_trajectory_csv(csv_path.string(), s, rec);
    vd::write_age_slice_csv(prof_path.string(), s, final_state);
    const fs::path traj_plot = fs::path(out_dir) / (base + "_trajectory_plot.py");
    const fs::path prof_plot = fs::path(out_dir) / (base + "_profile_plot.py");
    vd::emit_trajectory_plot(csv_path.string(), traj_plot.string());
    vd::emit_age_profile_plot(prof_path.string(), prof_plot.string());

    std::printf("model: %s, t_end = %s, stride = %s\n", model.c_str(),
                vd::format_double(t_end).c_str(), vd::format_double(stride).c_str());
    print_run_summary(rec);
    if (diagnostics) {
        std::printf("diagnostics:\n");
        print_descent_summary(rec);
    }
    std::printf("wrote %s\n", csv_path.string().c_str());
    std::printf("wrote %s\n", prof_path.string().c_str());
    std::printf("wrote %s\n", traj_plot.string().c_str());
    std::printf("wrote %s\n", prof_plot.string().c_str());
    return 0;
}

int cmd_sweep(const std::string& path, const std::string& param, double lo, double hi,
              size_t steps, bool log_scale, unsigned threads, const std::string& out_dir) {
    vd::Scenario s = vd::load_scenario(path);
    print_warnings(s);
    fs::create_directories(out_dir);
    auto result = vd::run_sweep(s, param, lo, hi, steps, log_scale, threads);
    const std::string base = "sweep_" + sanitize(param);
    const fs::path csv_path = fs::path(out_dir) / (base + ".csv");
    const fs::path plot_path = fs::path(out_dir) / (base + "_plot.py");
    vd::write_sweep_csv(csv_path.string(), s, result);
    vd::emit_sweep_plot(csv_path.string(), plot_path.string());

    size_t failures = 0;
    for (size_t i = 0; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        if (!row.error.empty()) {
            ++failures;
            continue;
        }
        if (i > 0 && result.rows[i - 1].error.empty() && row.regime != result.rows[i - 1].regime)
            std::printf("regime change between %s and %s: %s -> %s\n",
                        vd::format_double(result.rows[i - 1].value).c_str(),
                        vd::format_double(row.value).c_str(),
                        result.rows[i - 1].regime.c_str(), row.regime.c_str());
    }
    std::printf("%zu points, %zu failed\n", result.rows.size(), failures);
    std::printf("wrote %s\n", csv_path.string().c_str());
    std::printf("wrote %s\n", plot_path.string().c_str());
    return 0;
}

int cmd_check(const std::string& path) {
    vd::Scenario s = vd::load_scenario(path);
    print_warnings(s);
    int exit_code = 0;
    const auto& g = s.globals;
    const double v_max = std::max(100.0, 10.0 * g.b * g.h / g.k);
    for (size_t j = 0; j < s.n_classes(); ++j) {
        const auto& cls = s.classes[j];
        auto rep = cls.incidence.verify_hypotheses(1.2 * cls.lambda / cls.d, v_max);
        std::printf("class %zu (%s): axes %s, monotone %s, per-virion rate non-increasing %s, "
                    "decays %s, smooth %s\n",
                    j + 1, cls.name.c_str(), rep.vanishes_on_axes ? "ok" : "FAIL",
                    rep.strictly_increasing ? "ok" : "FAIL",
                    rep.hbar_non_increasing ? "ok" : "FAIL", rep.hbar_decays ? "yes" : "no",
                    rep.smooth ? "yes" : "no");
        if (rep.first_violation)
            std::printf("  first violation: %s at T = %s, V = %s\n",
                        rep.first_violation->detail.c_str(),
                        vd::format_double(rep.first_violation->t).c_str(),
                        vd::format_double(rep.first_violation->v).c_str());
        if (!rep.note.empty()) std::printf("  note: %s\n", rep.note.c_str());
        if (!rep.vanishes_on_axes || !rep.strictly_increasing) exit_code = 2;
    }

    auto rep = vd::threshold_report(s);
    std::printf("R0 = %s, R* = %s, regime: %s\n", vd::format_double(rep.r0).c_str(),
                vd::format_double(rep.r_star).c_str(), vd::regime_name(rep.regime));

    auto e0 = vd::infection_free(s);
    auto es = vd::solve_immune_free(s);
    auto eh = vd::solve_antibody(s);
    const bool es_expected = rep.r0 > 1.0;
    const bool eh_expected = rep.r_star > 1.0;
    if (es.present != es_expected && !rep.near_r0_boundary) {
        std::printf("FAIL: immune-free state presence (%s) contradicts R0 = %s\n",
                    es.present ? "yes" : "no", vd::format_double(rep.r0).c_str());
        exit_code = exit_code ? exit_code : 3;
    }
    if (eh.present != eh_expected && !rep.near_rstar_boundary) {
        std::printf("FAIL: antibody state presence (%s) contradicts R* = %s\n",
                    eh.present ? "yes" : "no", vd::format_double(rep.r_star).c_str());
        exit_code = exit_code ? exit_code : 3;
    }
    for (const auto* ss : {&e0, &es, &eh}) {
        if (!ss->present) continue;
        const char* label = ss->kind == vd::SteadyKind::InfectionFree ? "E0"
                            : ss->kind == vd::SteadyKind::ImmuneFree  ? "E*"
                                                                      : "E_hat";
        if (ss->max_residual > 1e-8) {
            std::printf("FAIL: %s residual %.3e exceeds 1e-8\n", label, ss->max_residual);
            exit_code = exit_code ? exit_code : 3;
        } else {
            std::printf("%s residual %.3e ok\n", label, ss->max_residual);
        }
    }
    if (vd::is_reducible(s))
        std::printf("reducible to the single-delay form: yes (omega = %s)\n",
                    vd::format_double(vd::shared_omega(s)).c_str());
    else
        std::printf("reducible to the single-delay form: no\n");
    std::printf(exit_code == 0 ? "check passed\n" : "check failed\n");
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"age-structured viral dynamics: thresholds, rest states, simulation"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::string eq_out;
    std::string model = "age";
    std::string param;
    double t_end = 200.0, stride = 0.5, dtheta = 0.0, lo = 0.0, hi = 0.0;
    size_t steps = 25;
    unsigned threads = 0;
    bool diagnostics = false, log_scale = false;

    auto add_scenario = [&](CLI::App* c) {
        c->add_option("--scenario", scenario_path, "scenario json file")->required();
    };

    auto* rep = app.add_subcommand("report", "thresholds, regime and rest states");
    add_scenario(rep);

    auto* eq = app.add_subcommand("equilibria", "rest states with residuals");
    add_scenario(eq);
    eq->add_option("--out", eq_out, "directory for equilibria.json");

    auto* sim = app.add_subcommand("simulate", "integrate the model, export CSV and plot scripts");
    add_scenario(sim);
    sim->add_option("--model", model, "age (structured) or dde (reduced)")
        ->check(CLI::IsMember({"age", "dde"}));
    sim->add_option("--t-end", t_end, "end time in days")->check(CLI::PositiveNumber);
    sim->add_option("--stride", stride, "sampling stride in days")->check(CLI::PositiveNumber);
    sim->add_option("--dtheta", dtheta, "age grid resolution override")
        ->check(CLI::PositiveNumber);
    sim->add_option("--out", out_dir, "output directory");
    sim->add_flag("--diagnostics", diagnostics, "append convergence functionals as columns");

    auto* sw = app.add_subcommand("sweep", "threshold and rest-state sweep over one parameter");
    add_scenario(sw);
    sw->add_option("--param", param, "dotted path, e.g. classes[0].incidence.beta")->required();
    sw->add_option("--lo", lo, "range start")->required();
    sw->add_option("--hi", hi, "range end")->required();
    sw->add_option("--steps", steps, "number of points");
    sw->add_flag("--log", log_scale, "geometric spacing");
    sw->add_option("--threads", threads, "worker count (0: hardware)");
    sw->add_option("--out", out_dir, "output directory");

    auto* chk = app.add_subcommand("check", "hypothesis and consistency audit");
    add_scenario(chk);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (rep->parsed()) return cmd_report(scenario_path);
        if (eq->parsed()) return cmd_equilibria(scenario_path, eq_out);
        if (sim->parsed())
            return cmd_simulate(scenario_path, model, t_end, stride, dtheta, out_dir, diagnostics);
        if (sw->parsed())
            return cmd_sweep(scenario_path, param, lo, hi, steps, log_scale, threads, out_dir);
        if (chk->parsed()) return cmd_check(scenario_path);
    } catch (const vd::validation_error& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const vd::solver_error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const vd::integration_error& e) {
        std::fprintf(stderr, "integration error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

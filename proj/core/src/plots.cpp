#include "viraldyn/plots.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "viraldyn/csv.hpp"
#include "viraldyn/errors.hpp"

namespace viraldyn {

namespace {

namespace fs = std::filesystem;

void require_columns(const std::vector<std::string>& header,
                     const std::vector<std::string>& needed, const std::string& csv_path) {
    for (const auto& name : needed) {
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw validation_error(csv_path + " is missing column '" + name + "'");
    }
}

bool has_prefixed_column(const std::vector<std::string>& header, const std::string& prefix) {
    return std::any_of(header.begin(), header.end(),
                       [&](const std::string& c) { return c.rfind(prefix, 0) == 0; });
}

std::string relative_csv(const std::string& csv_path, const std::string& script_path) {
    fs::path script_dir = fs::path(script_path).parent_path();
    if (script_dir.empty()) script_dir = ".";
    std::error_code ec;
    fs::path rel = fs::relative(csv_path, script_dir, ec);
    if (ec || rel.empty()) rel = fs::absolute(csv_path);
    return rel.generic_string();
}

std::ofstream open_script(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    return out;
}

const char* reader_snippet() {
    return "import csv, os, sys\n"
           "import matplotlib\n"
           "matplotlib.use('Agg')\n"
           "import matplotlib.pyplot as plt\n"
           "\n"
           "here = os.path.dirname(os.path.abspath(__file__))\n"
           "with open(os.path.join(here, CSV)) as f:\n"
           "    rows = list(csv.DictReader(f))\n"
           "if not rows:\n"
           "    sys.exit('no data rows in ' + CSV)\n"
           "\n"
           "def col(name, conv=float):\n"
           "    return [conv(r[name]) for r in rows]\n"
           "\n";
}

} // namespace

void emit_trajectory_plot(const std::string& csv_path, const std::string& script_path) {
    auto header = read_csv_header(csv_path);
    require_columns(header, {"t", "V", "A"}, csv_path);
    if (!has_prefixed_column(header, "T_") || !has_prefixed_column(header, "I_"))
        throw validation_error(csv_path + " is missing T_*/I_* trajectory columns");

    auto out = open_script(script_path);
    out << "#!/usr/bin/env python3\n"
        << "CSV = '" << relative_csv(csv_path, script_path) << "'\n"
        << reader_snippet()
        << "t = col('t')\n"
           "names = rows[0].keys()\n"
           "t_cols = sorted(n for n in names if n.startswith('T_'))\n"
           "i_cols = sorted(n for n in names if n.startswith('I_'))\n"
           "fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)\n"
           "for n in t_cols:\n"
           "    axes[0][0].plot(t, col(n), label=n)\n"
           "axes[0][0].set_ylabel('target cells')\n"
           "for n in i_cols:\n"
           "    axes[0][1].plot(t, col(n), label=n)\n"
           "axes[0][1].set_ylabel('infected cells')\n"
           "axes[1][0].plot(t, col('V'))\n"
           "axes[1][0].set_ylabel('virus')\n"
           "axes[1][1].plot(t, col('A'))\n"
           "axes[1][1].set_ylabel('antibody')\n"
           "for ax in axes.flat:\n"
           "    ax.set_xlabel('t (days)')\n"
           "for ax in (axes[0][0], axes[0][1]):\n"
           "    if len(t_cols) > 1:\n"
           "        ax.legend(fontsize=8)\n"
           "fig.tight_layout()\n"
           "fig.savefig(os.path.splitext(os.path.abspath(__file__))[0] + '.png', dpi=130)\n";
    if (!out) throw std::runtime_error("write to " + script_path + " failed");
}

void emit_sweep_plot(const std::string& csv_path, const std::string& script_path) {
    auto header = read_csv_header(csv_path);
    require_columns(header, {"value", "regime"}, csv_path);

    auto out = open_script(script_path);
    out << "#!/usr/bin/env python3\n"
        << "CSV = '" << relative_csv(csv_path, script_path) << "'\n"
        << reader_snippet()
        << "order = ['InfectionFree', 'ImmuneFree', 'AntibodyImmune']\n"
           "x = col('value')\n"
           "y = [order.index(r['regime']) if r['regime'] in order else -1 for r in rows]\n"
           "fig, ax = plt.subplots(figsize=(8, 4))\n"
           "ax.step(x, y, where='post')\n"
           "ax.set_yticks(range(len(order)))\n"
           "ax.set_yticklabels(order)\n"
           "ax.set_xlabel('parameter value')\n"
           "positive = [v for v in x if v > 0]\n"
           "if positive and len(positive) == len(x) and max(x) / min(positive) > 50:\n"
           "    ax.set_xscale('log')\n"
           "fig.tight_layout()\n"
           "fig.savefig(os.path.splitext(os.path.abspath(__file__))[0] + '.png', dpi=130)\n";
    if (!out) throw std::runtime_error("write to " + script_path + " failed");
}

void emit_age_profile_plot(const std::string& csv_path, const std::string& script_path) {
    auto header = read_csv_header(csv_path);
    require_columns(header, {"theta"}, csv_path);
    if (!has_prefixed_column(header, "i_"))
        throw validation_error(csv_path + " is missing i_* profile columns");

    auto out = open_script(script_path);
    out << "#!/usr/bin/env python3\n"
        << "CSV = '" << relative_csv(csv_path, script_path) << "'\n"
        << reader_snippet()
        << "theta = col('theta')\n"
           "prof_cols = sorted(n for n in rows[0].keys() if n.startswith('i_'))\n"
           "fig, ax = plt.subplots(figsize=(8, 4))\n"
           "for n in prof_cols:\n"
           "    ax.plot(theta, col(n), label=n)\n"
           "ax.set_xlabel('infection age (days)')\n"
           "ax.set_ylabel('density')\n"
           "if len(prof_cols) > 1:\n"
           "    ax.legend(fontsize=8)\n"
           "fig.tight_layout()\n"
           "fig.savefig(os.path.splitext(os.path.abspath(__file__))[0] + '.png', dpi=130)\n";
    if (!out) throw std::runtime_error("write to " + script_path + " failed");
}

} // namespace viraldyn

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "viraldyn/scenario.hpp"

#ifndef VIRALDYN_SCENARIO_DIR
#error "VIRALDYN_SCENARIO_DIR must be defined by the build"
#endif

namespace testutil {

inline std::string scenario_path(const std::string& file) {
    return std::string(VIRALDYN_SCENARIO_DIR) + "/" + file;
}

inline viraldyn::Scenario load_bundled(const std::string& file) {
    return viraldyn::load_scenario(scenario_path(file));
}

// fresh empty directory under the system temp root, unique per call
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto p = std::filesystem::temp_directory_path() /
             ("viraldyn_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// one cell class with saturated incidence, constant mortality and
// delayed-constant production; defaults give an immune-free infected regime
struct OneClassParams {
    double lambda = 46.0;
    double d = 0.0046;
    double beta = 5e-8;
    double alpha = 0.005;
    double delta_star = 0.01;
    double p_star = 11.4059;
    double omega = 0.5;
    double c = 0.25;
    double q = 0.03;
    double k = 0.0015;
    double h = 0.2;
    double b = 2.9;
};

inline viraldyn::Scenario one_class(const OneClassParams& p = {}) {
    using namespace viraldyn;
    DeltaSpec ds;
    ds.kind = DeltaKind::Constant;
    ds.delta_star = p.delta_star;
    ProductionSpec ps;
    ps.kind = ProductionKind::DelayedConstant;
    ps.p_star = p.p_star;
    ps.omega = p.omega;
    Scenario s;
    s.name = "synthetic";
    s.classes.push_back(ClassSpec{"cells", p.lambda, p.d,
                                  IncidenceModel::saturated(p.beta, p.alpha),
                                  AgeKernel(ds, ps)});
    s.globals = Globals{p.c, p.q, p.k, p.h, p.b};
    s.initial.T0 = {p.lambda / p.d};
    s.initial.profile.assign(1, ProfileSpec{});
    s.initial.history.assign(1, HistorySpec{});
    return s;
}

} // namespace testutil

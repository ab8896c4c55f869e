#include "viraldyn/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "viraldyn/errors.hpp"

namespace viraldyn {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc())
        throw std::runtime_error("failed to format a floating point value");
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    return out;
}

} // namespace

void write_trajectory_csv(const std::string& path, const Scenario& s,
                          const TrajectoryRecord& rec) {
    auto out = open_out(path);
    const size_t n = s.n_classes();
    out << "t";
    for (size_t j = 0; j < n; ++j) out << ",T_" << (j + 1);
    for (size_t j = 0; j < n; ++j) out << ",I_" << (j + 1);
    out << ",V,A";
    for (const auto& name : rec.diag_names) out << "," << name;
    out << "\n";
    for (const auto& smp : rec.samples) {
        out << format_double(smp.t);
        for (size_t j = 0; j < n; ++j) out << "," << format_double(smp.T[j]);
        for (size_t j = 0; j < n; ++j) out << "," << format_double(smp.I[j]);
        out << "," << format_double(smp.V) << "," << format_double(smp.A);
        for (double d : smp.diag) out << "," << format_double(d);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

void write_age_slice_csv(const std::string& path, const Scenario& s, const SystemState& st) {
    auto out = open_out(path);
    const size_t n = s.n_classes();
    if (st.i.size() != n) throw std::invalid_argument("state class count mismatch");
    out << "theta";
    for (size_t j = 0; j < n; ++j) out << ",i_" << (j + 1);
    out << "\n";
    const size_t nodes = st.i.empty() ? 0 : st.i[0].size();
    for (size_t k = 0; k < nodes; ++k) {
        out << format_double(double(k) * st.dtheta);
        for (size_t j = 0; j < n; ++j) out << "," << format_double(st.i[j][k]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::vector<std::string> read_csv_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw validation_error(path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) cols.push_back(field);
    return cols;
}

} // namespace viraldyn

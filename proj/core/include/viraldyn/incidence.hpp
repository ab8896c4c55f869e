#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace viraldyn {

// Incidence h(T,V): the rate at which susceptible cells of one class become
// infected at cell density T and virion density V. All built-in families
// factor as h = V * hbar(T,V).
enum class IncidenceKind { Bilinear, Saturated, BeddingtonDeAngelis, Tabulated };

struct BilinearParams {
    double beta;
};

struct SaturatedParams {
    double beta;
    double alpha;
};

struct BeddingtonDeAngelisParams {
    double beta;
    double a; // cell-density saturation
    double b; // virion-density saturation
};

// Rectangular table of hbar = h/V over (T,V), bilinearly interpolated.
// Evaluation outside the tabulated box is a domain error.
struct IncidenceTable {
    std::vector<double> t_nodes;
    std::vector<double> v_nodes;
    std::vector<std::vector<double>> hbar; // hbar[it][iv]
};

struct HypothesisViolation {
    std::string detail;
    double t = 0.0;
    double v = 0.0;
};

// Outcome of the numeric check of the three structural hypotheses:
// vanishing on the axes, strict monotonicity in T and V, and a per-virion
// rate that is non-increasing in V and decays for large V.
struct HypothesisReport {
    bool vanishes_on_axes = true;
    bool strictly_increasing = true;
    bool hbar_non_increasing = true;
    bool hbar_decays = true;
    bool smooth = true; // false for tabulated models (piecewise-smooth only)
    std::optional<HypothesisViolation> first_violation;
    std::string note;

    bool all_pass() const {
        return vanishes_on_axes && strictly_increasing && hbar_non_increasing && hbar_decays;
    }
};

class IncidenceModel {
  public:
    static IncidenceModel bilinear(double beta);
    static IncidenceModel saturated(double beta, double alpha);
    static IncidenceModel beddington_deangelis(double beta, double a, double b);
    static IncidenceModel tabulated(IncidenceTable table);

    IncidenceKind kind() const { return kind_; }

    double evaluate(double T, double V) const; // h(T,V)
    double hbar(double T, double V) const;     // h/V, continued as dh/dV(T,0) at V=0

    // (dh/dT, dh/dV); analytic for closed-form kinds, central differences
    // with relative step 1e-5 for tabulated tables.
    std::pair<double, double> partials(double T, double V) const;

    HypothesisReport verify_hypotheses(double t_max, double v_max, int grid_n = 33) const;

    const BilinearParams* as_bilinear() const;
    const SaturatedParams* as_saturated() const;
    const BeddingtonDeAngelisParams* as_beddington_deangelis() const;
    const IncidenceTable* as_table() const;

  private:
    IncidenceKind kind_;
    std::variant<BilinearParams, SaturatedParams, BeddingtonDeAngelisParams, IncidenceTable> p_;

    explicit IncidenceModel(IncidenceKind k) : kind_(k) {}
    double hbar_table(double T, double V) const;
};

} // namespace viraldyn

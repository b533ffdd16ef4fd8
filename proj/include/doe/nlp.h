#pragma once

// Assembly of the scenario-dependent current-voltage OPF as a nonlinear program
// whose constraints and objective are at most quadratic.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doe/netmodel.h"
#include "doe/phasecalc.h"
#include "doe/quadratic.h"

namespace doe {

enum class Objective { active_export, reactive_margin };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& text);

/// Network limits enforced by each of the five scenarios.
///   1: grid-code caps only   2: voltage + vuf   3: voltage + current
///   4: current + vuf         5: all
/// Throws std::invalid_argument for anything outside 1..5.
ConstraintSet scenario_constraints(int scenario);

struct ScenarioSpec {
    int scenario = 5;
    Objective objective = Objective::active_export;
};

/// Active power per generator phase, indexed [period][generator][phase], per-unit.
using ActiveSchedule = std::vector<std::vector<std::array<double, 3>>>;

/// Fully resolved problem options; a ScenarioSpec maps onto one of these.
struct ProblemSpec {
    ConstraintSet constraints;
    Objective objective = Objective::active_export;
    bool cap_at_gridcode = false;   // P_g <= p_cap_gridcode
    bool fix_reactive_zero = false;  // Q_g = 0
    std::optional<ActiveSchedule> fixed_active;  // P_g held at these values
    double fixed_active_band = 0.0;  // relative: P_g in [(1 - band) p, p] when fixed
};

ProblemSpec problem_spec(const ScenarioSpec& scenario);

enum class RowKind {
    voltage_drop_re,
    voltage_drop_im,
    kcl_re,
    kcl_im,
    gen_p,
    gen_q,
    load_p,
    load_q,
    reactive_split,  // Q_g - Q+ + Q- = 0
    current_limit,
    voltage_limit,
    vuf_limit,
    margin_plus,   // Q_aux - Q+ <= 0
    margin_minus,  // Q_aux - Q- <= 0
};

std::string to_string(RowKind kind);

struct ConstraintRow {
    RowKind kind;
    int object = -1;  // branch, bus, load or generator index
    int phase = -1;
    int slot = 0;     // position in the problem's period list
    QuadraticExpr expr;
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool is_equality() const { return lower == upper; }
};

/// Variable indices for one period; -1 marks an absent (unconnected) phase.
struct PeriodLayout {
    using Index3 = std::array<int, 3>;
    std::vector<Index3> u_re, u_im;          // per bus
    std::vector<Index3> i_re, i_im;          // per branch
    std::vector<Index3> load_re, load_im;    // per load
    std::vector<Index3> gen_re, gen_im;      // per generator
    std::vector<Index3> gen_p, gen_q;        // per generator
    std::vector<Index3> q_plus, q_minus, q_aux;  // per generator, reactive_margin only
};

struct VariableLayout {
    int n_vars = 0;
    std::vector<int> periods;
    std::vector<PeriodLayout> slots;

    [[nodiscard]] std::string describe(int var, const NetworkCase& net) const;
};

struct NlpProblem {
    VariableLayout layout;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> start;
    std::vector<ConstraintRow> rows;  // equalities first
    int n_equalities = 0;
    QuadraticExpr objective;
    bool maximize = true;
    ProblemSpec spec;

    [[nodiscard]] int n_vars() const { return layout.n_vars; }
    [[nodiscard]] int n_rows() const { return int(rows.size()); }
    [[nodiscard]] int n_inequalities() const { return n_rows() - n_equalities; }
};

/// Joint problem over the given periods (they share no constraints).
NlpProblem build_problem(const NetworkCase& net, const ProblemSpec& spec, std::span<const int> periods);
NlpProblem build_problem(const NetworkCase& net, const ProblemSpec& spec, int period);
NlpProblem build_problem(const NetworkCase& net, const ScenarioSpec& scenario, int period);

/// Raw row function values in row order.
std::vector<double> row_values(const NlpProblem& problem, std::span<const double> x);

/// Equality residuals, then for each inequality row its slack to the nearest
/// bound (negative when violated).
std::vector<double> eval_constraints(const NlpProblem& problem, std::span<const double> x);

struct ObjectiveEval {
    double value = 0.0;
    std::vector<double> gradient;
};
/// Objective in its natural (maximized) sense.
ObjectiveEval eval_objective(const NlpProblem& problem, std::span<const double> x);

/// Sparse Jacobian of the row functions as (row, var, value) triplets.
struct JacobianEntry {
    int row;
    int var;
    double value;
};
std::vector<JacobianEntry> jacobian(const NlpProblem& problem, std::span<const double> x);

PhasorState decode_state(const NlpProblem& problem, const NetworkCase& net, std::span<const double> x,
                         int slot = 0);
/// Writes the voltages and currents of `state` into x (powers are left untouched).
void encode_state(const NlpProblem& problem, const PhasorState& state, int slot, std::span<double> x);

/// Flat start with currents and voltages from one backward/forward sweep at the
/// period's loads and the given generator powers (per-unit, per phase).
PhasorState sweep_start(const NetworkCase& net, int period,
                        const std::vector<std::array<Complex, 3>>& gen_power);

}  // namespace doe

#pragma once

// Reference computations that do not go through the NLP: a fixed-injection
// Newton power flow on the current-voltage equations and a bisection search for
// one generator's export limit.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "doe/nlp.h"
#include "doe/phasecalc.h"
#include "doe/solver.h"

namespace doe::oracle {

/// Fixed element powers, per-unit, indexed [period][element][phase].
/// Unconnected phases are ignored.
struct InjectionSet {
    std::vector<std::vector<std::array<PowerPQ, 3>>> load;
    std::vector<std::vector<std::array<PowerPQ, 3>>> gen;

    /// Loads from the case profiles, all generators at zero.
    static InjectionSet from_case(const NetworkCase& net);
    /// Same P and Q on every connected phase of generator `gen` in `period`.
    void set_generator(const NetworkCase& net, int period, int gen, PowerPQ per_phase);
};

class PowerFlowError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct PowerFlowOptions {
    int max_iter = 50;
    double tol = 1e-10;
};

/// Newton power flow from a flat start. Throws PowerFlowError when it does not
/// converge within the iteration budget. `iterations`, when given, receives the
/// count used.
PhasorState solve_pf(const NetworkCase& net, const InjectionSet& injections, int period,
                     const PowerFlowOptions& options = {}, int* iterations = nullptr);

struct BisectionOptions {
    double tol = 1e-6;                // absolute, per-unit
    std::optional<double> upper;      // bracket top; default 10 x the grid-code cap
    double limit_tolerance = 0.0;     // passed to check_limits
};

/// Largest per-phase active export of generator `gen` (Q = 0, other elements at
/// `others`) for which the power flow converges and no limit in `set` is
/// violated. Returns the bracket top when that point is still feasible.
/// Throws std::runtime_error when zero export is already infeasible.
double doe_bisection(const NetworkCase& net, int gen, ConstraintSet set, int period,
                     const InjectionSet& others, const BisectionOptions& options = {});
double doe_bisection(const NetworkCase& net, int gen, ConstraintSet set, int period);

struct PeriodCheck {
    int period = 0;
    bool converged = false;
    std::string error;                  // power-flow failure message
    double max_voltage_deviation = 0.0;  // vs the reference state, per-unit
    double max_drop_residual = 0.0;
    double max_kcl_residual = 0.0;
};

struct ValidationReport {
    std::vector<PeriodCheck> periods;
    std::vector<Violation> violations;
    double max_voltage_deviation = 0.0;
    double deviation_tol = 1e-6;

    [[nodiscard]] bool ok() const;
};

/// Re-solves the power flow at the given injections for every period and checks
/// the limits in `set` (tolerance `limit_tol`).
ValidationReport validate_injections(const NetworkCase& net, const InjectionSet& injections, ConstraintSet set,
                                     double limit_tol = 1e-6);

/// Re-solves the power flow at the generator powers of an NLP solution, compares
/// the voltages with the decoded solution and checks the problem's limits.
ValidationReport validate_solution(const NetworkCase& net, const NlpProblem& problem, const Solution& solution,
                                   double limit_tol = 1e-6);

}  // namespace doe::oracle

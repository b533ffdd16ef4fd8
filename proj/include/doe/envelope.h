#pragma once

// Scenario runner: solves every period of a scenario and aggregates the
// per-generator envelopes into daily energy totals.

#include <stdexcept>
#include <string>
#include <vector>

#include "doe/netmodel.h"
#include "doe/nlp.h"
#include "doe/solver.h"

namespace doe {

struct RunOptions {
    SolverOptions solver;
    int threads = 0;  // 0: hardware concurrency
    // Scenarios 2-4 are also solved from the scenario-5 optimum of the same
    // period (a feasible point for them); the better KKT point is kept.
    bool nested_start = true;
    // Reactive-margin stage: P_g may drop this fraction below the active-export
    // value. Zero holds it exactly, which leaves the Q feasible set without interior.
    double active_band = 1e-4;
    // Reactive-margin stage keeps P_g free instead of fixing it.
    bool free_active = false;
};

/// One generator phase in one period, physical units.
struct EnvelopeEntry {
    int gen = -1;
    int phase = -1;
    int period = 0;
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct PeriodDiagnostics {
    int period = 0;
    int stage = 1;  // 2 for the reactive-margin solve
    SolveStatus status = SolveStatus::optimal;
    int iterations = 0;
    double objective = 0.0;  // per-unit
    double max_kkt_residual = 0.0;
    bool nested = false;  // kept solution came from the scenario-5 start
    std::string message;
};

struct EnvelopeResult {
    ScenarioSpec spec;
    double period_hours = 1.0;
    std::vector<EnvelopeEntry> entries;  // sorted by generator, phase, period
    double active_kwh = 0.0;
    double reactive_kvarh = 0.0;      // signed, negative = absorption
    double margin_kvarh = 0.0;        // reactive_margin only
    double stage1_active_kwh = 0.0;   // reactive_margin only: before the second stage
    std::vector<double> export_kw;    // aggregate P per period
    std::vector<PeriodDiagnostics> diagnostics;
};

/// A period whose solve did not end optimal.
class ScenarioError : public std::runtime_error {
  public:
    ScenarioError(int period, SolveStatus status, const std::string& what)
        : std::runtime_error(what), period_(period), status_(status) {}
    [[nodiscard]] int period() const { return period_; }
    [[nodiscard]] SolveStatus status() const { return status_; }

  private:
    int period_;
    SolveStatus status_;
};

/// Rounds to the 6 decimals used in every output file.
double round6(double v);

/// Solves all periods of `net` (per-unit) independently. Scenario 1 is closed
/// form: every connected phase at its cap, no reactive power.
/// Throws ScenarioError for the first failed period.
EnvelopeResult run_scenario(const NetworkCase& net, const ScenarioSpec& spec, const RunOptions& options = {});

}  // namespace doe

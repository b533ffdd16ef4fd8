#pragma once

// Electrical quantities and constraint residuals of the current-voltage
// formulation, evaluated on a single-period phasor snapshot.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "doe/netmodel.h"

namespace doe {

using PhaseVec = std::array<Complex, 3>;

/// Rectangular voltages and currents for one period. Branch currents flow
/// from_bus -> to_bus; load currents are drawn from the bus and generator
/// currents are injected into it. Unconnected element phases stay zero.
struct PhasorState {
    std::vector<PhaseVec> bus_voltage;
    std::vector<PhaseVec> branch_current;
    std::vector<PhaseVec> load_current;
    std::vector<PhaseVec> gen_current;

    static PhasorState zeros(const NetworkCase& net);
    /// Balanced nominal voltages (slack reference everywhere), zero currents.
    static PhasorState flat(const NetworkCase& net);
};

/// Balanced positive-sequence set of the given magnitude, phase a at 0 degrees.
PhaseVec balanced_set(double magnitude);

struct ReIm {
    double re = 0.0;
    double im = 0.0;
};

struct PowerPQ {
    double p = 0.0;
    double q = 0.0;
};

/// Which technical limits apply.
struct ConstraintSet {
    bool voltage = false;
    bool current = false;
    bool vuf = false;

    static ConstraintSet none() { return {}; }
    static ConstraintSet all() { return {true, true, true}; }
    /// Comma-separated subset of voltage,current,vuf; "none" for the empty set.
    static ConstraintSet parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
    bool operator==(const ConstraintSet&) const = default;
};

/// Thrown when the positive-sequence voltage vanishes.
class UndefinedVuf : public std::domain_error {
  public:
    UndefinedVuf() : std::domain_error("undefined VUF: positive-sequence voltage is zero") {}
};

/// (lhs - rhs) of the real and imaginary branch voltage-drop laws.
ReIm voltage_drop_residual(const NetworkCase& net, const PhasorState& s, int branch, int phase);

/// Power entering the branch at its from-bus.
PowerPQ branch_power(const NetworkCase& net, const PhasorState& s, int branch, int phase);

PowerPQ load_power(const NetworkCase& net, const PhasorState& s, int load, int phase);
PowerPQ gen_power(const NetworkCase& net, const PhasorState& s, int gen, int phase);

/// P and Q carried by current `i` at voltage `u`.
PowerPQ power_from_phasors(Complex u, Complex i);

/// Demand minus generation minus incoming plus outgoing branch current.
ReIm kcl_residual(const NetworkCase& net, const PhasorState& s, int bus, int phase);

/// Un-normalized squared negative and positive sequence magnitudes (|3 U2|^2, |3 U1|^2).
struct SequenceSquares {
    double negative = 0.0;
    double positive = 0.0;
};
SequenceSquares sequence_squares(const PhaseVec& u);

/// |U2| / |U1|. Sequence magnitudes below 16 machine epsilons of the phasor scale count as
/// zero: the ratio is then 0, or UndefinedVuf is thrown when |U1| vanishes.
double vuf(const PhaseVec& u);
double vuf(const PhasorState& s, int bus);

enum class ViolationKind { voltage_low, voltage_high, current, vuf };
std::string to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    int index = -1;   // bus for voltage/vuf, branch for current
    int phase = -1;   // -1 for vuf
    int period = 0;
    double magnitude = 0.0;  // per-unit (voltage, current) or ratio (vuf) beyond the limit
};

/// Every limit violation larger than `tolerance`. The slack bus is not checked
/// for voltage or unbalance (its voltage is the fixed reference).
std::vector<Violation> check_limits(const PhasorState& s, const NetworkCase& net, ConstraintSet set,
                                    int period = 0, double tolerance = 0.0);

std::string describe(const Violation& v, const NetworkCase& net);

struct ResidualSummary {
    double max_voltage_drop = 0.0;
    double max_kcl = 0.0;
};
/// Largest absolute voltage-drop and KCL residual over all branches/non-slack buses.
ResidualSummary max_residuals(const NetworkCase& net, const PhasorState& s);

}  // namespace doe

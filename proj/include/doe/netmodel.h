#pragma once

// Network data model for three-phase (Kron-reduced, 3x3) radial LV feeders.

#include <array>
#include <complex>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace doe {

using Complex = std::complex<double>;
using Matrix3 = std::array<std::array<double, 3>, 3>;
using ComplexMatrix3 = std::array<std::array<Complex, 3>, 3>;

inline constexpr int kPhases = 3;

/// Malformed or inconsistent input data. The message names the offending field.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Set of phases an element is connected to ("a", "b", "c" or "abc").
struct PhaseMask {
    std::array<bool, 3> on{};

    static PhaseMask parse(const std::string& text);
    static PhaseMask all() { return PhaseMask{{true, true, true}}; }

    [[nodiscard]] bool has(int phase) const { return on[static_cast<std::size_t>(phase)]; }
    [[nodiscard]] int count() const { return int(on[0]) + int(on[1]) + int(on[2]); }
    [[nodiscard]] std::string to_string() const;
};

std::string phase_name(int phase);

struct Bus {
    std::string id;
    double vmin = 0.9;
    double vmax = 1.1;
    double vuf_max = 0.02;
    bool is_slack = false;
    double v_ref = 1.0;  // slack magnitude, balanced set at 0/-120/+120 degrees
};

/// Series element between two buses. Stored oriented away from the slack.
struct Branch {
    std::string id;
    int from_bus = -1;
    int to_bus = -1;
    Matrix3 r{};
    Matrix3 x{};
    double i_max = 0.0;  // per phase
};

/// Fixed, unsheddable demand. Profiles are per phase per period.
struct Load {
    std::string id;
    int bus = -1;
    PhaseMask phases;
    std::array<std::vector<double>, 3> p;
    std::array<std::vector<double>, 3> q;
};

struct Generator {
    std::string id;
    int bus = -1;
    PhaseMask phases;
    double p_cap_gridcode = 0.0;  // per phase
    double q_abs_max = 0.0;       // per phase
};

struct Bases {
    double s_kva = 100.0;  // per phase
    double v_volts = 230.0;  // line-to-neutral
    int periods = 24;
    double period_hours = 1.0;

    [[nodiscard]] double z_base_ohm() const { return v_volts * v_volts / (s_kva * 1000.0); }
    [[nodiscard]] double i_base_amp() const { return s_kva * 1000.0 / v_volts; }
};

enum class UnitSystem { physical, per_unit };

/// A validated radial network. Topology fields are derived during validation.
struct NetworkCase {
    std::string name;
    Bases base;
    UnitSystem units = UnitSystem::physical;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Load> loads;
    std::vector<Generator> generators;

    int slack = -1;
    std::vector<int> parent_branch;           // per bus, -1 at the slack
    std::vector<std::vector<int>> child_branches;  // per bus
    std::vector<int> bus_order;               // breadth-first from the slack

    [[nodiscard]] int horizon() const { return base.periods; }
    [[nodiscard]] int find_bus(const std::string& id) const;
    [[nodiscard]] int find_generator(const std::string& id) const;
    [[nodiscard]] int find_load(const std::string& id) const;
};

/// 3x3 phase impedance from positive and zero sequence values.
ComplexMatrix3 seq_to_phase_impedance(Complex z1, Complex z0);

NetworkCase to_per_unit(const NetworkCase& physical);
NetworkCase to_physical(const NetworkCase& per_unit);

/// Checks references, ids, limits and profile lengths, orients branches away from
/// the slack and fills the topology fields. Throws InputError.
void validate(NetworkCase& net);

/// Parses a network JSON file into physical units (not yet validated).
NetworkCase parse_network_json(const std::string& text);

/// Applies a load-profile CSV (element_id,phase,period,p_kw,q_kvar) to a
/// physical-unit case.
void apply_load_profiles_csv(NetworkCase& net, const std::string& csv_text);

/// Reads, validates and normalizes a network. Returns the case in per-unit.
NetworkCase load_network(const std::filesystem::path& network_path,
                         const std::filesystem::path& loads_csv = {});

std::string read_text_file(const std::filesystem::path& path);

}  // namespace doe

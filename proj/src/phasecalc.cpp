#include "doe/phasecalc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace doe {

PhasorState PhasorState::zeros(const NetworkCase& net) {
    PhasorState s;
    s.bus_voltage.assign(net.buses.size(), PhaseVec{});
    s.branch_current.assign(net.branches.size(), PhaseVec{});
    s.load_current.assign(net.loads.size(), PhaseVec{});
    s.gen_current.assign(net.generators.size(), PhaseVec{});
    return s;
}

PhasorState PhasorState::flat(const NetworkCase& net) {
    PhasorState s = zeros(net);
    const auto ref = balanced_set(net.buses.at(std::size_t(net.slack)).v_ref);
    std::fill(s.bus_voltage.begin(), s.bus_voltage.end(), ref);
    return s;
}

PhaseVec balanced_set(double magnitude) {
    const double shift = 2.0 * std::numbers::pi / 3.0;
    return {std::polar(magnitude, 0.0), std::polar(magnitude, -shift), std::polar(magnitude, shift)};
}

ConstraintSet ConstraintSet::parse(const std::string& text) {
    ConstraintSet set;
    if (text == "none" || text.empty()) return set;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item == "voltage")
            set.voltage = true;
        else if (item == "current")
            set.current = true;
        else if (item == "vuf")
            set.vuf = true;
        else if (item == "all")
            set = all();
        else
            throw InputError("unknown constraint '" + item + "' (expected voltage, current, vuf)");
    }
    return set;
}

std::string ConstraintSet::to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ",";
        out += name;
    };
    add(voltage, "voltage");
    add(current, "current");
    add(vuf, "vuf");
    return out.empty() ? "none" : out;
}

ReIm voltage_drop_residual(const NetworkCase& net, const PhasorState& s, int branch, int phase) {
    const auto& br = net.branches[std::size_t(branch)];
    const auto& ui = s.bus_voltage[std::size_t(br.from_bus)];
    const auto& uj = s.bus_voltage[std::size_t(br.to_bus)];
    const auto& cur = s.branch_current[std::size_t(branch)];
    const auto p = std::size_t(phase);

    double drop_re = 0.0;
    double drop_im = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
        drop_re += br.r[p][q] * cur[q].real() - br.x[p][q] * cur[q].imag();
        drop_im += br.r[p][q] * cur[q].imag() + br.x[p][q] * cur[q].real();
    }
    return {uj[p].real() - (ui[p].real() - drop_re), uj[p].imag() - (ui[p].imag() - drop_im)};
}

PowerPQ power_from_phasors(Complex u, Complex i) {
    return {u.real() * i.real() + u.imag() * i.imag(), u.imag() * i.real() - u.real() * i.imag()};
}

PowerPQ branch_power(const NetworkCase& net, const PhasorState& s, int branch, int phase) {
    const auto& br = net.branches[std::size_t(branch)];
    return power_from_phasors(s.bus_voltage[std::size_t(br.from_bus)][std::size_t(phase)],
                              s.branch_current[std::size_t(branch)][std::size_t(phase)]);
}

PowerPQ load_power(const NetworkCase& net, const PhasorState& s, int load, int phase) {
    const auto& ld = net.loads[std::size_t(load)];
    return power_from_phasors(s.bus_voltage[std::size_t(ld.bus)][std::size_t(phase)],
                              s.load_current[std::size_t(load)][std::size_t(phase)]);
}

PowerPQ gen_power(const NetworkCase& net, const PhasorState& s, int gen, int phase) {
    const auto& g = net.generators[std::size_t(gen)];
    return power_from_phasors(s.bus_voltage[std::size_t(g.bus)][std::size_t(phase)],
                              s.gen_current[std::size_t(gen)][std::size_t(phase)]);
}

ReIm kcl_residual(const NetworkCase& net, const PhasorState& s, int bus, int phase) {
    const auto p = std::size_t(phase);
    Complex sum{};
    for (std::size_t l = 0; l < net.loads.size(); ++l)
        if (net.loads[l].bus == bus) sum += s.load_current[l][p];
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        if (net.generators[g].bus == bus) sum -= s.gen_current[g][p];
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        if (net.branches[k].to_bus == bus) sum -= s.branch_current[k][p];
        if (net.branches[k].from_bus == bus) sum += s.branch_current[k][p];
    }
    return {sum.real(), sum.imag()};
}

SequenceSquares sequence_squares(const PhaseVec& u) {
    const double h = std::sqrt(3.0) / 2.0;
    const double ar = u[0].real(), ai = u[0].imag();
    const double br = u[1].real(), bi = u[1].imag();
    const double cr = u[2].real(), ci = u[2].imag();

    const double common_re = ar - 0.5 * (br + cr);
    const double common_im = ai - 0.5 * (bi + ci);
    const double neg_re = common_re + h * (bi - ci);
    const double neg_im = common_im - h * (br - cr);
    const double pos_re = common_re - h * (bi - ci);
    const double pos_im = common_im + h * (br - cr);
    return {neg_re * neg_re + neg_im * neg_im, pos_re * pos_re + pos_im * pos_im};
}

double vuf(const PhaseVec& u) {
    const auto sq = sequence_squares(u);
    // Sequence magnitudes at this level are rounding noise of the phasors themselves.
    constexpr double eps16 = 16.0 * std::numeric_limits<double>::epsilon();
    const double scale = 3.0 * (std::norm(u[0]) + std::norm(u[1]) + std::norm(u[2]));
    const double noise = eps16 * eps16 * scale;
    if (!(sq.positive > noise)) throw UndefinedVuf();
    if (sq.negative <= noise) return 0.0;
    return std::sqrt(sq.negative / sq.positive);
}

double vuf(const PhasorState& s, int bus) { return vuf(s.bus_voltage[std::size_t(bus)]); }

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::voltage_low: return "voltage_low";
        case ViolationKind::voltage_high: return "voltage_high";
        case ViolationKind::current: return "current";
        case ViolationKind::vuf: return "vuf";
    }
    return "unknown";
}

std::vector<Violation> check_limits(const PhasorState& s, const NetworkCase& net, ConstraintSet set, int period,
                                    double tolerance) {
    std::vector<Violation> out;
    if (set.current) {
        for (std::size_t k = 0; k < net.branches.size(); ++k) {
            const double limit = net.branches[k].i_max;
            for (int p = 0; p < kPhases; ++p) {
                const auto i = s.branch_current[k][std::size_t(p)];
                const double sq = i.real() * i.real() + i.imag() * i.imag();
                if (sq > limit * limit) {
                    const double excess = std::sqrt(sq) - limit;
                    if (excess > tolerance) out.push_back({ViolationKind::current, int(k), p, period, excess});
                }
            }
        }
    }
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        if (int(b) == net.slack) continue;
        const auto& bus = net.buses[b];
        const auto& u = s.bus_voltage[b];
        if (set.voltage) {
            for (int p = 0; p < kPhases; ++p) {
                const double sq = std::norm(u[std::size_t(p)]);
                if (sq > bus.vmax * bus.vmax) {
                    const double excess = std::sqrt(sq) - bus.vmax;
                    if (excess > tolerance) out.push_back({ViolationKind::voltage_high, int(b), p, period, excess});
                } else if (sq < bus.vmin * bus.vmin) {
                    const double excess = bus.vmin - std::sqrt(sq);
                    if (excess > tolerance) out.push_back({ViolationKind::voltage_low, int(b), p, period, excess});
                }
            }
        }
        if (set.vuf) {
            const auto sq = sequence_squares(u);
            if (sq.negative > bus.vuf_max * bus.vuf_max * sq.positive) {
                // A vanished positive sequence is an unbounded violation.
                const double excess =
                    sq.positive > 0.0 ? std::sqrt(sq.negative / sq.positive) - bus.vuf_max : HUGE_VAL;
                if (excess > tolerance) out.push_back({ViolationKind::vuf, int(b), -1, period, excess});
            }
        }
    }
    return out;
}

std::string describe(const Violation& v, const NetworkCase& net) {
    std::ostringstream out;
    out << to_string(v.kind) << " at ";
    if (v.kind == ViolationKind::current)
        out << "branch " << net.branches[std::size_t(v.index)].id;
    else
        out << "bus " << net.buses[std::size_t(v.index)].id;
    if (v.phase >= 0) out << " phase " << phase_name(v.phase);
    out << " period " << v.period << " exceeds limit by " << v.magnitude;
    return out.str();
}

ResidualSummary max_residuals(const NetworkCase& net, const PhasorState& s) {
    ResidualSummary r;
    for (std::size_t k = 0; k < net.branches.size(); ++k)
        for (int p = 0; p < kPhases; ++p) {
            const auto d = voltage_drop_residual(net, s, int(k), p);
            r.max_voltage_drop = std::max({r.max_voltage_drop, std::abs(d.re), std::abs(d.im)});
        }
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        if (int(b) == net.slack) continue;
        for (int p = 0; p < kPhases; ++p) {
            const auto k = kcl_residual(net, s, int(b), p);
            r.max_kcl = std::max({r.max_kcl, std::abs(k.re), std::abs(k.im)});
        }
    }
    return r;
}

}  // namespace doe

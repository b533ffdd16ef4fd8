#include "doe/netmodel.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace doe {

using nlohmann::json;

PhaseMask PhaseMask::parse(const std::string& text) {
    if (text == "a") return PhaseMask{{true, false, false}};
    if (text == "b") return PhaseMask{{false, true, false}};
    if (text == "c") return PhaseMask{{false, false, true}};
    if (text == "abc") return PhaseMask::all();
    throw InputError("unknown phase '" + text + "' (expected a, b, c or abc)");
}

std::string PhaseMask::to_string() const {
    if (count() == 3) return "abc";
    std::string s;
    for (int p = 0; p < kPhases; ++p)
        if (has(p)) s += phase_name(p);
    return s;
}

std::string phase_name(int phase) {
    static const char* names[] = {"a", "b", "c"};
    return names[phase];
}

int NetworkCase::find_bus(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return int(i);
    return -1;
}

int NetworkCase::find_generator(const std::string& id) const {
    for (std::size_t i = 0; i < generators.size(); ++i)
        if (generators[i].id == id) return int(i);
    return -1;
}

int NetworkCase::find_load(const std::string& id) const {
    for (std::size_t i = 0; i < loads.size(); ++i)
        if (loads[i].id == id) return int(i);
    return -1;
}

ComplexMatrix3 seq_to_phase_impedance(Complex z1, Complex z0) {
    // A diag(z0, z1, z1) A^-1 with the Fortescue matrix A; z2 = z1 for lines.
    const Complex self = (z0 + 2.0 * z1) / 3.0;
    const Complex mutual = (z0 - z1) / 3.0;
    ComplexMatrix3 z{};
    for (int p = 0; p < kPhases; ++p)
        for (int q = 0; q < kPhases; ++q) z[p][q] = (p == q) ? self : mutual;
    return z;
}

namespace {

NetworkCase scaled(const NetworkCase& in, double z_factor, double s_factor, double i_factor,
                   UnitSystem target) {
    NetworkCase out = in;
    out.units = target;
    for (auto& br : out.branches) {
        for (auto& row : br.r)
            for (auto& v : row) v *= z_factor;
        for (auto& row : br.x)
            for (auto& v : row) v *= z_factor;
        br.i_max *= i_factor;
    }
    for (auto& ld : out.loads) {
        for (auto& series : ld.p)
            for (auto& v : series) v *= s_factor;
        for (auto& series : ld.q)
            for (auto& v : series) v *= s_factor;
    }
    for (auto& g : out.generators) {
        g.p_cap_gridcode *= s_factor;
        g.q_abs_max *= s_factor;
    }
    return out;
}

void check_bases(const Bases& b) {
    if (!(b.s_kva > 0.0) || !(b.v_volts > 0.0))
        throw InputError("base: s_kva and v_volts must be positive");
}

}  // namespace

NetworkCase to_per_unit(const NetworkCase& physical) {
    if (physical.units != UnitSystem::physical) throw InputError("case is already in per-unit");
    check_bases(physical.base);
    const auto& b = physical.base;
    return scaled(physical, 1.0 / b.z_base_ohm(), 1.0 / b.s_kva, 1.0 / b.i_base_amp(),
                  UnitSystem::per_unit);
}

NetworkCase to_physical(const NetworkCase& per_unit) {
    if (per_unit.units != UnitSystem::per_unit) throw InputError("case is already in physical units");
    check_bases(per_unit.base);
    const auto& b = per_unit.base;
    return scaled(per_unit, b.z_base_ohm(), b.s_kva, b.i_base_amp(), UnitSystem::physical);
}

void validate(NetworkCase& net) {
    check_bases(net.base);
    if (net.base.periods <= 0) throw InputError("base.periods: must be positive");
    if (!(net.base.period_hours > 0.0)) throw InputError("base.period_hours: must be positive");
    if (net.buses.empty()) throw InputError("buses: network has no buses");

    auto check_unique = [](const auto& items, const char* what) {
        std::set<std::string> seen;
        for (const auto& item : items)
            if (!seen.insert(item.id).second)
                throw InputError(std::string("duplicate ") + what + " id '" + item.id + "'");
    };
    check_unique(net.buses, "bus");
    check_unique(net.branches, "branch");
    check_unique(net.loads, "load");
    check_unique(net.generators, "generator");

    net.slack = -1;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const auto& bus = net.buses[i];
        if (bus.is_slack) {
            if (net.slack >= 0) throw InputError("multiple slack buses ('" + net.buses[net.slack].id + "', '" + bus.id + "')");
            net.slack = int(i);
            if (!(bus.v_ref > 0.0)) throw InputError("bus '" + bus.id + "': v_ref must be positive");
        }
        if (!(bus.vmin > 0.0 && bus.vmin < bus.vmax))
            throw InputError("bus '" + bus.id + "': require 0 < vmin < vmax");
        if (!(bus.vuf_max >= 0.0 && bus.vuf_max < 1.0))
            throw InputError("bus '" + bus.id + "': require 0 <= vuf_max < 1");
    }
    if (net.slack < 0) throw InputError("no slack bus");

    const int n_bus = int(net.buses.size());
    std::vector<std::vector<int>> incident(n_bus);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (br.from_bus < 0 || br.from_bus >= n_bus || br.to_bus < 0 || br.to_bus >= n_bus)
            throw InputError("branch '" + br.id + "': unresolved bus reference");
        if (br.from_bus == br.to_bus) throw InputError("branch '" + br.id + "': from_bus equals to_bus");
        if (!(br.i_max > 0.0)) throw InputError("branch '" + br.id + "': i_max must be positive");
        for (int p = 0; p < kPhases; ++p)
            for (int q = 0; q < kPhases; ++q)
                if (br.r[p][q] != br.r[q][p] || br.x[p][q] != br.x[q][p])
                    throw InputError("branch '" + br.id + "': impedance matrices must be symmetric");
        incident[br.from_bus].push_back(int(k));
        incident[br.to_bus].push_back(int(k));
    }

    if (net.branches.size() != std::size_t(n_bus - 1))
        throw InputError("network is not radial: " + std::to_string(net.branches.size()) +
                         " branches for " + std::to_string(n_bus) + " buses");

    net.parent_branch.assign(n_bus, -1);
    net.child_branches.assign(n_bus, {});
    net.bus_order.clear();
    std::vector<bool> seen(n_bus, false);
    std::queue<int> frontier;
    frontier.push(net.slack);
    seen[net.slack] = true;
    while (!frontier.empty()) {
        const int bus = frontier.front();
        frontier.pop();
        net.bus_order.push_back(bus);
        for (int k : incident[bus]) {
            if (k == net.parent_branch[bus]) continue;
            auto& br = net.branches[k];
            if (br.to_bus == bus) std::swap(br.from_bus, br.to_bus);
            const int next = br.to_bus;
            if (seen[next]) throw InputError("network is not radial: loop through branch '" + br.id + "'");
            seen[next] = true;
            net.parent_branch[next] = k;
            net.child_branches[bus].push_back(k);
            frontier.push(next);
        }
    }
    for (int b = 0; b < n_bus; ++b)
        if (!seen[b]) throw InputError("disconnected graph: bus '" + net.buses[b].id + "' unreachable from slack");

    const auto horizon = std::size_t(net.base.periods);
    for (const auto& ld : net.loads) {
        if (ld.bus < 0 || ld.bus >= n_bus) throw InputError("load '" + ld.id + "': unresolved bus reference");
        for (int p = 0; p < kPhases; ++p) {
            const bool want = ld.phases.has(p);
            for (const auto* series : {&ld.p[p], &ld.q[p]}) {
                if (want && series->size() != horizon)
                    throw InputError("load '" + ld.id + "' phase " + phase_name(p) + ": profile length " +
                                     std::to_string(series->size()) + " does not match horizon " +
                                     std::to_string(horizon));
                if (!want && !series->empty())
                    throw InputError("load '" + ld.id + "': profile given for unconnected phase " + phase_name(p));
            }
        }
    }
    for (const auto& g : net.generators) {
        if (g.bus < 0 || g.bus >= n_bus) throw InputError("generator '" + g.id + "': unresolved bus reference");
        if (!(g.p_cap_gridcode >= 0.0)) throw InputError("generator '" + g.id + "': p_cap_gridcode must be >= 0");
        if (!(g.q_abs_max >= 0.0)) throw InputError("generator '" + g.id + "': q_abs_max must be >= 0");
    }
}

namespace {

std::string field_path(const std::string& where, const std::string& key) { return where + "." + key; }

const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw InputError(field_path(where, key) + ": missing required field");
    return *it;
}

double number(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw InputError(field_path(where, key) + ": expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& key, const std::string& where, double fallback) {
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw InputError(field_path(where, key) + ": expected a string");
    return v.get<std::string>();
}

const json& array(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_array()) throw InputError(field_path(where, key) + ": expected an array");
    return v;
}

std::vector<double> number_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw InputError(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw InputError(where + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Matrix3 matrix3(const json& v, const std::string& where) {
    auto flat = number_array(v, where);
    if (flat.size() != 9) throw InputError(where + ": expected 9 entries (3x3 row-major)");
    Matrix3 m{};
    for (int i = 0; i < 9; ++i) m[i / 3][i % 3] = flat[std::size_t(i)];
    return m;
}

Complex sequence_value(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require(obj, key, where);
    const std::string path = field_path(where, key);
    if (!v.is_object()) throw InputError(path + ": expected an object {r, x}");
    return {number(v, "r", path), number(v, "x", path)};
}

int resolve_bus(const NetworkCase& net, const std::string& id, const std::string& where) {
    const int idx = net.find_bus(id);
    if (idx < 0) throw InputError(where + ": unknown bus '" + id + "'");
    return idx;
}

}  // namespace

NetworkCase parse_network_json(const std::string& content) {
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("top level: expected an object");

    NetworkCase net;
    net.name = doc.value("name", std::string{});
    net.units = UnitSystem::physical;

    const json& base = require(doc, "base", "network");
    if (!base.is_object()) throw InputError("network.base: expected an object");
    net.base.s_kva = number(base, "s_kva", "base");
    net.base.v_volts = number(base, "v_volts", "base");
    const double periods = number(base, "periods", "base");
    if (periods != std::floor(periods)) throw InputError("base.periods: expected an integer");
    net.base.periods = int(periods);
    net.base.period_hours = number(base, "period_hours", "base");

    const json& buses = array(doc, "buses", "network");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string where = "buses[" + std::to_string(i) + "]";
        const json& b = buses[i];
        if (!b.is_object()) throw InputError(where + ": expected an object");
        Bus bus;
        bus.id = text(b, "id", where);
        bus.vmin = number_or(b, "vmin", where, bus.vmin);
        bus.vmax = number_or(b, "vmax", where, bus.vmax);
        bus.vuf_max = number_or(b, "vuf_max", where, bus.vuf_max);
        bus.v_ref = number_or(b, "v_ref", where, bus.v_ref);
        if (b.contains("is_slack")) {
            if (!b["is_slack"].is_boolean()) throw InputError(where + ".is_slack: expected a boolean");
            bus.is_slack = b["is_slack"].get<bool>();
        }
        net.buses.push_back(bus);
    }

    const json& branches = array(doc, "branches", "network");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string where = "branches[" + std::to_string(i) + "]";
        const json& b = branches[i];
        if (!b.is_object()) throw InputError(where + ": expected an object");
        Branch br;
        br.id = text(b, "id", where);
        br.from_bus = resolve_bus(net, text(b, "from_bus", where), where + ".from_bus");
        br.to_bus = resolve_bus(net, text(b, "to_bus", where), where + ".to_bus");
        br.i_max = number(b, "i_max", where);
        const bool has_matrix = b.contains("r_matrix") || b.contains("x_matrix");
        const bool has_sequence = b.contains("z1") || b.contains("z0");
        if (has_matrix == has_sequence)
            throw InputError(where + ": give either r_matrix/x_matrix or z1/z0 with length_km");
        if (has_matrix) {
            br.r = matrix3(require(b, "r_matrix", where), where + ".r_matrix");
            br.x = matrix3(require(b, "x_matrix", where), where + ".x_matrix");
        } else {
            const double length = number(b, "length_km", where);
            if (!(length > 0.0)) throw InputError(where + ".length_km: must be positive");
            const auto z = seq_to_phase_impedance(sequence_value(b, "z1", where),
                                                  sequence_value(b, "z0", where));
            for (int p = 0; p < kPhases; ++p)
                for (int q = 0; q < kPhases; ++q) {
                    br.r[p][q] = z[p][q].real() * length;
                    br.x[p][q] = z[p][q].imag() * length;
                }
        }
        net.branches.push_back(br);
    }

    if (doc.contains("loads")) {
        const json& loads = array(doc, "loads", "network");
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const std::string where = "loads[" + std::to_string(i) + "]";
            const json& l = loads[i];
            if (!l.is_object()) throw InputError(where + ": expected an object");
            Load ld;
            ld.id = text(l, "id", where);
            ld.bus = resolve_bus(net, text(l, "bus", where), where + ".bus");
            try {
                ld.phases = PhaseMask::parse(text(l, "phase", where));
            } catch (const InputError& e) {
                throw InputError(where + ".phase: " + e.what());
            }
            // Inline profiles are per phase and shared by every connected phase.
            std::vector<double> p, q;
            if (l.contains("p_kw")) p = number_array(l["p_kw"], where + ".p_kw");
            if (l.contains("q_kvar")) q = number_array(l["q_kvar"], where + ".q_kvar");
            if (!p.empty() && q.empty()) q.assign(p.size(), 0.0);
            for (int ph = 0; ph < kPhases; ++ph)
                if (ld.phases.has(ph)) {
                    ld.p[ph] = p;
                    ld.q[ph] = q;
                }
            net.loads.push_back(std::move(ld));
        }
    }

    if (doc.contains("generators")) {
        const json& gens = array(doc, "generators", "network");
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const std::string where = "generators[" + std::to_string(i) + "]";
            const json& g = gens[i];
            if (!g.is_object()) throw InputError(where + ": expected an object");
            Generator gen;
            gen.id = text(g, "id", where);
            gen.bus = resolve_bus(net, text(g, "bus", where), where + ".bus");
            try {
                gen.phases = PhaseMask::parse(text(g, "phase", where));
            } catch (const InputError& e) {
                throw InputError(where + ".phase: " + e.what());
            }
            gen.p_cap_gridcode = number(g, "p_cap_gridcode", where);
            gen.q_abs_max = number_or(g, "q_abs_max", where, 0.0);
            net.generators.push_back(gen);
        }
    }
    return net;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError(where + ": not a number '" + s + "'");
    }
    if (used != s.size()) throw InputError(where + ": not a number '" + s + "'");
    return v;
}

}  // namespace

void apply_load_profiles_csv(NetworkCase& net, const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("load profile CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "element_id,phase,period,p_kw,q_kvar")
        throw InputError("load profile CSV: header must be 'element_id,phase,period,p_kw,q_kvar'");

    const int horizon = net.base.periods;
    // (load, phase) -> period -> value; gaps are caught below.
    std::map<std::pair<int, int>, std::map<int, std::pair<double, double>>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = "load profile CSV line " + std::to_string(line_no);
        auto cells = split_csv_line(line);
        if (cells.size() != 5) throw InputError(where + ": expected 5 columns");
        const int load = net.find_load(cells[0]);
        if (load < 0) throw InputError(where + ": unknown load '" + cells[0] + "'");
        PhaseMask mask;
        try {
            mask = PhaseMask::parse(cells[1]);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        const double period_value = parse_double(cells[2], where + " period");
        if (period_value != std::floor(period_value) || period_value < 0 || period_value >= horizon)
            throw InputError(where + ": period " + cells[2] + " outside [0, " + std::to_string(horizon) + ")");
        const double p = parse_double(cells[3], where + " p_kw");
        const double q = parse_double(cells[4], where + " q_kvar");
        const auto& ld = net.loads[std::size_t(load)];
        for (int ph = 0; ph < kPhases; ++ph) {
            if (!mask.has(ph)) continue;
            if (!ld.phases.has(ph))
                throw InputError(where + ": load '" + ld.id + "' is not connected to phase " + phase_name(ph));
            auto& slot = rows[{load, ph}];
            if (!slot.emplace(int(period_value), std::make_pair(p, q)).second)
                throw InputError(where + ": duplicate entry for load '" + ld.id + "' period " + cells[2]);
        }
    }

    for (const auto& [key, series] : rows) {
        auto& ld = net.loads[std::size_t(key.first)];
        const int ph = key.second;
        if (int(series.size()) != horizon)
            throw InputError("load '" + ld.id + "' phase " + phase_name(ph) + ": profile length " +
                             std::to_string(series.size()) + " does not match horizon " + std::to_string(horizon));
        ld.p[ph].assign(std::size_t(horizon), 0.0);
        ld.q[ph].assign(std::size_t(horizon), 0.0);
        for (const auto& [t, pq] : series) {
            ld.p[ph][std::size_t(t)] = pq.first;
            ld.q[ph][std::size_t(t)] = pq.second;
        }
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

NetworkCase load_network(const std::filesystem::path& network_path, const std::filesystem::path& loads_csv) {
    NetworkCase net = parse_network_json(read_text_file(network_path));
    if (net.name.empty()) net.name = network_path.stem().string();
    if (!loads_csv.empty()) apply_load_profiles_csv(net, read_text_file(loads_csv));
    validate(net);
    return to_per_unit(net);
}

}  // namespace doe

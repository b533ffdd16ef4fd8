#include "doe/nlp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace doe {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Objective objective) {
    return objective == Objective::active_export ? "active" : "reactive-margin";
}

Objective parse_objective(const std::string& text) {
    if (text == "active" || text == "active_export") return Objective::active_export;
    if (text == "reactive-margin" || text == "reactive_margin") return Objective::reactive_margin;
    throw InputError("unknown objective '" + text + "' (expected active or reactive-margin)");
}

ConstraintSet scenario_constraints(int scenario) {
    switch (scenario) {
        case 1: return ConstraintSet::none();
        case 2: return {true, false, true};
        case 3: return {true, true, false};
        case 4: return {false, true, true};
        case 5: return ConstraintSet::all();
        default: throw std::invalid_argument("unknown scenario " + std::to_string(scenario) + " (expected 1..5)");
    }
}

ProblemSpec problem_spec(const ScenarioSpec& scenario) {
    ProblemSpec spec;
    spec.constraints = scenario_constraints(scenario.scenario);
    spec.objective = scenario.objective;
    spec.cap_at_gridcode = scenario.scenario == 1;
    return spec;
}

std::string to_string(RowKind kind) {
    switch (kind) {
        case RowKind::voltage_drop_re: return "voltage_drop_re";
        case RowKind::voltage_drop_im: return "voltage_drop_im";
        case RowKind::kcl_re: return "kcl_re";
        case RowKind::kcl_im: return "kcl_im";
        case RowKind::gen_p: return "gen_p";
        case RowKind::gen_q: return "gen_q";
        case RowKind::load_p: return "load_p";
        case RowKind::load_q: return "load_q";
        case RowKind::reactive_split: return "reactive_split";
        case RowKind::current_limit: return "current_limit";
        case RowKind::voltage_limit: return "voltage_limit";
        case RowKind::vuf_limit: return "vuf_limit";
        case RowKind::margin_plus: return "margin_plus";
        case RowKind::margin_minus: return "margin_minus";
    }
    return "unknown";
}

std::string VariableLayout::describe(int var, const NetworkCase& net) const {
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto& L = slots[s];
        auto scan = [&](const std::vector<PeriodLayout::Index3>& table, const char* what,
                        auto name_of) -> std::string {
            for (std::size_t k = 0; k < table.size(); ++k)
                for (int p = 0; p < kPhases; ++p)
                    if (table[k][std::size_t(p)] == var)
                        return std::string(what) + "[" + name_of(k) + "." + phase_name(p) + ", t=" +
                               std::to_string(periods[s]) + "]";
            return {};
        };
        auto bus = [&](std::size_t k) { return net.buses[k].id; };
        auto branch = [&](std::size_t k) { return net.branches[k].id; };
        auto load = [&](std::size_t k) { return net.loads[k].id; };
        auto gen = [&](std::size_t k) { return net.generators[k].id; };
        for (auto text : {scan(L.u_re, "u_re", bus), scan(L.u_im, "u_im", bus), scan(L.i_re, "i_re", branch),
                          scan(L.i_im, "i_im", branch), scan(L.load_re, "i_load_re", load),
                          scan(L.load_im, "i_load_im", load), scan(L.gen_re, "i_gen_re", gen),
                          scan(L.gen_im, "i_gen_im", gen), scan(L.gen_p, "p_gen", gen), scan(L.gen_q, "q_gen", gen),
                          scan(L.q_plus, "q_plus", gen), scan(L.q_minus, "q_minus", gen),
                          scan(L.q_aux, "q_aux", gen)})
            if (!text.empty()) return text;
    }
    return "x[" + std::to_string(var) + "]";
}

PhasorState sweep_start(const NetworkCase& net, int period, const std::vector<std::array<Complex, 3>>& gen_power) {
    PhasorState s = PhasorState::flat(net);
    const auto t = std::size_t(period);
    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const auto& ld = net.loads[l];
        for (int p = 0; p < kPhases; ++p) {
            if (!ld.phases.has(p)) continue;
            const Complex demand(ld.p[p][t], ld.q[p][t]);
            s.load_current[l][p] = std::conj(demand / s.bus_voltage[ld.bus][p]);
        }
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        for (int p = 0; p < kPhases; ++p)
            if (gen.phases.has(p)) s.gen_current[g][p] = std::conj(gen_power[g][p] / s.bus_voltage[gen.bus][p]);
    }

    // Backward sweep: accumulate net demand current towards the slack.
    std::vector<PhaseVec> demand(net.buses.size(), PhaseVec{});
    for (std::size_t l = 0; l < net.loads.size(); ++l)
        for (int p = 0; p < kPhases; ++p) demand[net.loads[l].bus][p] += s.load_current[l][p];
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        for (int p = 0; p < kPhases; ++p) demand[net.generators[g].bus][p] -= s.gen_current[g][p];
    for (auto it = net.bus_order.rbegin(); it != net.bus_order.rend(); ++it) {
        const int bus = *it;
        const int k = net.parent_branch[bus];
        if (k < 0) continue;
        PhaseVec flow = demand[bus];
        for (int child : net.child_branches[bus])
            for (int p = 0; p < kPhases; ++p) flow[p] += s.branch_current[child][p];
        s.branch_current[k] = flow;
    }

    // Forward sweep: voltage drops away from the slack.
    for (int bus : net.bus_order) {
        const int k = net.parent_branch[bus];
        if (k < 0) continue;
        const auto& br = net.branches[k];
        for (int p = 0; p < kPhases; ++p) {
            Complex drop{};
            for (int q = 0; q < kPhases; ++q) drop += Complex(br.r[p][q], br.x[p][q]) * s.branch_current[k][q];
            s.bus_voltage[bus][p] = s.bus_voltage[br.from_bus][p] - drop;
        }
    }
    return s;
}

namespace {

using Index3 = PeriodLayout::Index3;

class Builder {
  public:
    Builder(const NetworkCase& net, const ProblemSpec& spec) : net_(net), spec_(spec) {}

    NlpProblem build(std::span<const int> periods) {
        problem_.spec = spec_;
        problem_.layout.periods.assign(periods.begin(), periods.end());
        for (int t : periods) {
            if (t < 0 || t >= net_.horizon())
                throw std::out_of_range("period " + std::to_string(t) + " outside horizon");
            problem_.layout.slots.push_back(allocate(t));
        }
        for (std::size_t s = 0; s < periods.size(); ++s) equalities(int(s), periods[s]);
        for (std::size_t s = 0; s < periods.size(); ++s) inequalities(int(s));
        problem_.n_equalities = int(eq_rows_.size());
        problem_.rows = std::move(eq_rows_);
        problem_.rows.insert(problem_.rows.end(), std::make_move_iterator(ineq_rows_.begin()),
                             std::make_move_iterator(ineq_rows_.end()));
        objective();
        return std::move(problem_);
    }

  private:
    int new_var(double lo, double hi, double start) {
        problem_.lower.push_back(lo);
        problem_.upper.push_back(hi);
        problem_.start.push_back(start);
        return problem_.layout.n_vars++;
    }

    Index3 triple(const PhaseMask& mask, double lo, double hi) {
        Index3 idx{-1, -1, -1};
        for (int p = 0; p < kPhases; ++p)
            if (mask.has(p)) idx[p] = new_var(lo, hi, 0.0);
        return idx;
    }

    PeriodLayout allocate(int t) {
        PeriodLayout L;
        const auto all = PhaseMask::all();
        const auto ref = balanced_set(net_.buses[net_.slack].v_ref);
        for (std::size_t b = 0; b < net_.buses.size(); ++b) {
            if (int(b) == net_.slack) {
                Index3 re{}, im{};
                for (int p = 0; p < kPhases; ++p) {
                    re[p] = new_var(ref[p].real(), ref[p].real(), ref[p].real());
                    im[p] = new_var(ref[p].imag(), ref[p].imag(), ref[p].imag());
                }
                L.u_re.push_back(re);
                L.u_im.push_back(im);
            } else {
                L.u_re.push_back(triple(all, -kInf, kInf));
                L.u_im.push_back(triple(all, -kInf, kInf));
            }
        }
        for (std::size_t k = 0; k < net_.branches.size(); ++k) {
            L.i_re.push_back(triple(all, -kInf, kInf));
            L.i_im.push_back(triple(all, -kInf, kInf));
        }
        for (const auto& ld : net_.loads) {
            L.load_re.push_back(triple(ld.phases, -kInf, kInf));
            L.load_im.push_back(triple(ld.phases, -kInf, kInf));
        }
        std::vector<std::array<Complex, 3>> gen_start(net_.generators.size());
        for (std::size_t g = 0; g < net_.generators.size(); ++g) {
            const auto& gen = net_.generators[g];
            L.gen_re.push_back(triple(gen.phases, -kInf, kInf));
            L.gen_im.push_back(triple(gen.phases, -kInf, kInf));
            Index3 p_idx{-1, -1, -1}, q_idx{-1, -1, -1};
            for (int p = 0; p < kPhases; ++p) {
                if (!gen.phases.has(p)) continue;
                double lo = 0.0, hi = spec_.cap_at_gridcode ? gen.p_cap_gridcode : kInf, p0 = 0.0;
                if (spec_.fixed_active) {
                    const double fixed = (*spec_.fixed_active).at(std::size_t(t)).at(g)[p];
                    hi = p0 = fixed;
                    lo = fixed * (1.0 - spec_.fixed_active_band);
                }
                p_idx[p] = new_var(lo, hi, p0);
                const double qmax = spec_.fix_reactive_zero ? 0.0 : gen.q_abs_max;
                q_idx[p] = new_var(-qmax, qmax, 0.0);
                gen_start[g][p] = Complex(p0, 0.0);
            }
            L.gen_p.push_back(p_idx);
            L.gen_q.push_back(q_idx);
            if (spec_.objective == Objective::reactive_margin) {
                const double qmax = spec_.fix_reactive_zero ? 0.0 : gen.q_abs_max;
                L.q_plus.push_back(triple(gen.phases, 0.0, qmax));
                L.q_minus.push_back(triple(gen.phases, 0.0, qmax));
                // The upper bound is implied by the margin rows; stating it keeps
                // the q_abs_max = 0 case from having an empty interior.
                L.q_aux.push_back(triple(gen.phases, 0.0, qmax));
            }
        }

        const PhasorState s0 = sweep_start(net_, t, gen_start);
        auto put = [&](const std::vector<Index3>& re, const std::vector<Index3>& im, const std::vector<PhaseVec>& v) {
            for (std::size_t k = 0; k < v.size(); ++k)
                for (int p = 0; p < kPhases; ++p) {
                    if (re[k][p] < 0) continue;
                    problem_.start[re[k][p]] = v[k][p].real();
                    problem_.start[im[k][p]] = v[k][p].imag();
                }
        };
        put(L.u_re, L.u_im, s0.bus_voltage);
        put(L.i_re, L.i_im, s0.branch_current);
        put(L.load_re, L.load_im, s0.load_current);
        put(L.gen_re, L.gen_im, s0.gen_current);
        return L;
    }

    void add_eq(RowKind kind, int object, int phase, int slot, QuadraticExpr expr) {
        eq_rows_.push_back({kind, object, phase, slot, std::move(expr), 0.0, 0.0});
    }

    void add_ineq(RowKind kind, int object, int phase, int slot, QuadraticExpr expr, double lo, double hi) {
        ineq_rows_.push_back({kind, object, phase, slot, std::move(expr), lo, hi});
    }

    // P = u_re i_re + u_im i_im, Q = u_im i_re - u_re i_im
    static void add_power(QuadraticExpr& e, int u_re, int u_im, int i_re, int i_im, bool reactive, double sign) {
        if (!reactive) {
            e.add(u_re, i_re, sign);
            e.add(u_im, i_im, sign);
        } else {
            e.add(u_im, i_re, sign);
            e.add(u_re, i_im, -sign);
        }
    }

    void equalities(int slot, int t) {
        const auto& L = problem_.layout.slots[slot];
        for (std::size_t k = 0; k < net_.branches.size(); ++k) {
            const auto& br = net_.branches[k];
            for (int p = 0; p < kPhases; ++p) {
                // U_j - U_i + R I_re - X I_im = 0 and U_j - U_i + R I_im + X I_re = 0
                QuadraticExpr re, im;
                re.add(L.u_re[br.to_bus][p], 1.0).add(L.u_re[br.from_bus][p], -1.0);
                im.add(L.u_im[br.to_bus][p], 1.0).add(L.u_im[br.from_bus][p], -1.0);
                for (int q = 0; q < kPhases; ++q) {
                    if (br.r[p][q] != 0.0) {
                        re.add(L.i_re[k][q], br.r[p][q]);
                        im.add(L.i_im[k][q], br.r[p][q]);
                    }
                    if (br.x[p][q] != 0.0) {
                        re.add(L.i_im[k][q], -br.x[p][q]);
                        im.add(L.i_re[k][q], br.x[p][q]);
                    }
                }
                add_eq(RowKind::voltage_drop_re, int(k), p, slot, std::move(re));
                add_eq(RowKind::voltage_drop_im, int(k), p, slot, std::move(im));
            }
        }

        for (std::size_t b = 0; b < net_.buses.size(); ++b) {
            if (int(b) == net_.slack) continue;
            for (int p = 0; p < kPhases; ++p) {
                QuadraticExpr re, im;
                for (std::size_t l = 0; l < net_.loads.size(); ++l)
                    if (net_.loads[l].bus == int(b) && L.load_re[l][p] >= 0) {
                        re.add(L.load_re[l][p], 1.0);
                        im.add(L.load_im[l][p], 1.0);
                    }
                for (std::size_t g = 0; g < net_.generators.size(); ++g)
                    if (net_.generators[g].bus == int(b) && L.gen_re[g][p] >= 0) {
                        re.add(L.gen_re[g][p], -1.0);
                        im.add(L.gen_im[g][p], -1.0);
                    }
                for (std::size_t k = 0; k < net_.branches.size(); ++k) {
                    if (net_.branches[k].to_bus == int(b)) {
                        re.add(L.i_re[k][p], -1.0);
                        im.add(L.i_im[k][p], -1.0);
                    }
                    if (net_.branches[k].from_bus == int(b)) {
                        re.add(L.i_re[k][p], 1.0);
                        im.add(L.i_im[k][p], 1.0);
                    }
                }
                add_eq(RowKind::kcl_re, int(b), p, slot, std::move(re));
                add_eq(RowKind::kcl_im, int(b), p, slot, std::move(im));
            }
        }

        for (std::size_t g = 0; g < net_.generators.size(); ++g) {
            const int bus = net_.generators[g].bus;
            for (int p = 0; p < kPhases; ++p) {
                if (L.gen_p[g][p] < 0) continue;
                QuadraticExpr pe, qe;
                pe.add(L.gen_p[g][p], 1.0);
                add_power(pe, L.u_re[bus][p], L.u_im[bus][p], L.gen_re[g][p], L.gen_im[g][p], false, -1.0);
                qe.add(L.gen_q[g][p], 1.0);
                add_power(qe, L.u_re[bus][p], L.u_im[bus][p], L.gen_re[g][p], L.gen_im[g][p], true, -1.0);
                add_eq(RowKind::gen_p, int(g), p, slot, std::move(pe));
                add_eq(RowKind::gen_q, int(g), p, slot, std::move(qe));
            }
        }

        for (std::size_t l = 0; l < net_.loads.size(); ++l) {
            const auto& ld = net_.loads[l];
            for (int p = 0; p < kPhases; ++p) {
                if (L.load_re[l][p] < 0) continue;
                QuadraticExpr pe, qe;
                add_power(pe, L.u_re[ld.bus][p], L.u_im[ld.bus][p], L.load_re[l][p], L.load_im[l][p], false, 1.0);
                pe.add_constant(-ld.p[p][t]);
                add_power(qe, L.u_re[ld.bus][p], L.u_im[ld.bus][p], L.load_re[l][p], L.load_im[l][p], true, 1.0);
                qe.add_constant(-ld.q[p][t]);
                add_eq(RowKind::load_p, int(l), p, slot, std::move(pe));
                add_eq(RowKind::load_q, int(l), p, slot, std::move(qe));
            }
        }

        if (spec_.objective == Objective::reactive_margin) {
            for (std::size_t g = 0; g < net_.generators.size(); ++g)
                for (int p = 0; p < kPhases; ++p) {
                    if (L.gen_q[g][p] < 0) continue;
                    QuadraticExpr e;
                    e.add(L.gen_q[g][p], 1.0).add(L.q_plus[g][p], -1.0).add(L.q_minus[g][p], 1.0);
                    add_eq(RowKind::reactive_split, int(g), p, slot, std::move(e));
                }
        }
    }

    void inequalities(int slot) {
        const auto& L = problem_.layout.slots[slot];
        const auto& set = spec_.constraints;
        if (set.current) {
            for (std::size_t k = 0; k < net_.branches.size(); ++k)
                for (int p = 0; p < kPhases; ++p) {
                    QuadraticExpr e;
                    e.add(L.i_re[k][p], L.i_re[k][p], 1.0).add(L.i_im[k][p], L.i_im[k][p], 1.0);
                    const double imax = net_.branches[k].i_max;
                    add_ineq(RowKind::current_limit, int(k), p, slot, std::move(e), -kInf, imax * imax);
                }
        }
        for (std::size_t b = 0; b < net_.buses.size(); ++b) {
            if (int(b) == net_.slack) continue;
            const auto& bus = net_.buses[b];
            if (set.voltage) {
                for (int p = 0; p < kPhases; ++p) {
                    QuadraticExpr e;
                    e.add(L.u_re[b][p], L.u_re[b][p], 1.0).add(L.u_im[b][p], L.u_im[b][p], 1.0);
                    add_ineq(RowKind::voltage_limit, int(b), p, slot, std::move(e), bus.vmin * bus.vmin,
                             bus.vmax * bus.vmax);
                }
            }
            if (set.vuf) {
                add_ineq(RowKind::vuf_limit, int(b), -1, slot, vuf_expr(L, int(b), bus.vuf_max), -kInf, 0.0);
            }
        }
        if (spec_.objective == Objective::reactive_margin) {
            for (std::size_t g = 0; g < net_.generators.size(); ++g)
                for (int p = 0; p < kPhases; ++p) {
                    if (L.q_aux[g][p] < 0) continue;
                    QuadraticExpr plus, minus;
                    plus.add(L.q_aux[g][p], 1.0).add(L.q_plus[g][p], -1.0);
                    minus.add(L.q_aux[g][p], 1.0).add(L.q_minus[g][p], -1.0);
                    add_ineq(RowKind::margin_plus, int(g), p, slot, std::move(plus), -kInf, 0.0);
                    add_ineq(RowKind::margin_minus, int(g), p, slot, std::move(minus), -kInf, 0.0);
                }
        }
    }

    // scale * (sum coef_k x_k)^2 expanded into quadratic terms
    static void add_square(QuadraticExpr& e, const std::vector<LinearTerm>& lin, double scale) {
        for (std::size_t a = 0; a < lin.size(); ++a) {
            e.add(lin[a].var, lin[a].var, scale * lin[a].coef * lin[a].coef);
            for (std::size_t b = a + 1; b < lin.size(); ++b)
                e.add(lin[a].var, lin[b].var, 2.0 * scale * lin[a].coef * lin[b].coef);
        }
    }

    // |U2|^2 - vuf_max^2 |U1|^2 with the un-normalized sequence squares.
    static QuadraticExpr vuf_expr(const PeriodLayout& L, int bus, double vuf_max) {
        const double h = std::sqrt(3.0) / 2.0;
        const auto& re = L.u_re[bus];
        const auto& im = L.u_im[bus];
        const std::vector<LinearTerm> neg_re{{re[0], 1.0}, {re[1], -0.5}, {re[2], -0.5}, {im[1], h}, {im[2], -h}};
        const std::vector<LinearTerm> neg_im{{im[0], 1.0}, {im[1], -0.5}, {im[2], -0.5}, {re[1], -h}, {re[2], h}};
        const std::vector<LinearTerm> pos_re{{re[0], 1.0}, {re[1], -0.5}, {re[2], -0.5}, {im[1], -h}, {im[2], h}};
        const std::vector<LinearTerm> pos_im{{im[0], 1.0}, {im[1], -0.5}, {im[2], -0.5}, {re[1], h}, {re[2], -h}};
        QuadraticExpr e;
        add_square(e, neg_re, 1.0);
        add_square(e, neg_im, 1.0);
        const double w = vuf_max * vuf_max;
        add_square(e, pos_re, -w);
        add_square(e, pos_im, -w);
        return e;
    }

    void objective() {
        QuadraticExpr obj;
        for (const auto& L : problem_.layout.slots) {
            const auto& table = spec_.objective == Objective::active_export ? L.gen_p : L.q_aux;
            for (const auto& idx : table)
                for (int v : idx)
                    if (v >= 0) obj.add(v, 1.0);
        }
        problem_.objective = std::move(obj);
        problem_.maximize = true;
    }

    const NetworkCase& net_;
    const ProblemSpec& spec_;
    NlpProblem problem_;
    std::vector<ConstraintRow> eq_rows_;
    std::vector<ConstraintRow> ineq_rows_;
};

}  // namespace

NlpProblem build_problem(const NetworkCase& net, const ProblemSpec& spec, std::span<const int> periods) {
    if (net.units != UnitSystem::per_unit) throw InputError("build_problem expects a per-unit case");
    return Builder(net, spec).build(periods);
}

NlpProblem build_problem(const NetworkCase& net, const ProblemSpec& spec, int period) {
    const int periods[] = {period};
    return build_problem(net, spec, std::span<const int>(periods));
}

NlpProblem build_problem(const NetworkCase& net, const ScenarioSpec& scenario, int period) {
    return build_problem(net, problem_spec(scenario), period);
}

std::vector<double> row_values(const NlpProblem& problem, std::span<const double> x) {
    std::vector<double> out;
    out.reserve(problem.rows.size());
    for (const auto& row : problem.rows) out.push_back(row.expr.value(x));
    return out;
}

std::vector<double> eval_constraints(const NlpProblem& problem, std::span<const double> x) {
    std::vector<double> out = row_values(problem, x);
    for (std::size_t r = std::size_t(problem.n_equalities); r < out.size(); ++r) {
        const auto& row = problem.rows[r];
        out[r] = std::min(out[r] - row.lower, row.upper - out[r]);
    }
    return out;
}

ObjectiveEval eval_objective(const NlpProblem& problem, std::span<const double> x) {
    ObjectiveEval e;
    e.value = problem.objective.value(x);
    e.gradient.assign(std::size_t(problem.n_vars()), 0.0);
    problem.objective.add_gradient(x, 1.0, e.gradient);
    return e;
}

std::vector<JacobianEntry> jacobian(const NlpProblem& problem, std::span<const double> x) {
    std::vector<JacobianEntry> out;
    std::vector<LinearTerm> grad;
    for (std::size_t r = 0; r < problem.rows.size(); ++r) {
        grad.clear();
        problem.rows[r].expr.gradient(x, grad);
        for (const auto& g : grad) out.push_back({int(r), g.var, g.coef});
    }
    return out;
}

PhasorState decode_state(const NlpProblem& problem, const NetworkCase& net, std::span<const double> x, int slot) {
    const auto& L = problem.layout.slots.at(std::size_t(slot));
    PhasorState s = PhasorState::zeros(net);
    auto get = [&](const std::vector<Index3>& re, const std::vector<Index3>& im, std::vector<PhaseVec>& out) {
        for (std::size_t k = 0; k < out.size(); ++k)
            for (int p = 0; p < kPhases; ++p)
                if (re[k][p] >= 0) out[k][p] = Complex(x[re[k][p]], x[im[k][p]]);
    };
    get(L.u_re, L.u_im, s.bus_voltage);
    get(L.i_re, L.i_im, s.branch_current);
    get(L.load_re, L.load_im, s.load_current);
    get(L.gen_re, L.gen_im, s.gen_current);
    return s;
}

void encode_state(const NlpProblem& problem, const PhasorState& state, int slot, std::span<double> x) {
    const auto& L = problem.layout.slots.at(std::size_t(slot));
    auto put = [&](const std::vector<Index3>& re, const std::vector<Index3>& im, const std::vector<PhaseVec>& in) {
        for (std::size_t k = 0; k < in.size(); ++k)
            for (int p = 0; p < kPhases; ++p)
                if (re[k][p] >= 0) {
                    x[re[k][p]] = in[k][p].real();
                    x[im[k][p]] = in[k][p].imag();
                }
    };
    put(L.u_re, L.u_im, state.bus_voltage);
    put(L.i_re, L.i_im, state.branch_current);
    put(L.load_re, L.load_im, state.load_current);
    put(L.gen_re, L.gen_im, state.gen_current);
}

}  // namespace doe

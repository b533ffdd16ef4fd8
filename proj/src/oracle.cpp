#include "doe/oracle.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

namespace doe::oracle {

InjectionSet InjectionSet::from_case(const NetworkCase& net) {
    InjectionSet inj;
    const auto T = std::size_t(net.horizon());
    inj.load.assign(T, std::vector<std::array<PowerPQ, 3>>(net.loads.size()));
    inj.gen.assign(T, std::vector<std::array<PowerPQ, 3>>(net.generators.size()));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t l = 0; l < net.loads.size(); ++l)
            for (int p = 0; p < kPhases; ++p)
                if (net.loads[l].phases.has(p))
                    inj.load[t][l][std::size_t(p)] = {net.loads[l].p[std::size_t(p)][t],
                                                      net.loads[l].q[std::size_t(p)][t]};
    return inj;
}

void InjectionSet::set_generator(const NetworkCase& net, int period, int g, PowerPQ per_phase) {
    for (int p = 0; p < kPhases; ++p)
        if (net.generators[std::size_t(g)].phases.has(p))
            gen[std::size_t(period)][std::size_t(g)][std::size_t(p)] = per_phase;
}

namespace {

// Unknown numbering: non-slack bus voltages, branch currents, connected element
// currents; each as a (re, im) pair.
struct Unknowns {
    std::vector<std::array<int, 3>> bus, branch, load, gen;
    int n = 0;

    explicit Unknowns(const NetworkCase& net) {
        auto take = [&](bool on) {
            if (!on) return -1;
            const int k = n;
            n += 2;
            return k;
        };
        for (std::size_t b = 0; b < net.buses.size(); ++b) {
            const bool free = int(b) != net.slack;
            bus.push_back({take(free), take(free), take(free)});
        }
        for (std::size_t k = 0; k < net.branches.size(); ++k) branch.push_back({take(true), take(true), take(true)});
        for (const auto& ld : net.loads)
            load.push_back({take(ld.phases.has(0)), take(ld.phases.has(1)), take(ld.phases.has(2))});
        for (const auto& g : net.generators)
            gen.push_back({take(g.phases.has(0)), take(g.phases.has(1)), take(g.phases.has(2))});
    }
};

Complex read(const Eigen::VectorXd& x, int k) { return {x[k], x[k + 1]}; }

PhasorState to_state(const NetworkCase& net, const Unknowns& u, const Eigen::VectorXd& x, const PhaseVec& ref) {
    PhasorState s = PhasorState::zeros(net);
    for (std::size_t b = 0; b < net.buses.size(); ++b)
        for (std::size_t p = 0; p < 3; ++p)
            s.bus_voltage[b][p] = u.bus[b][p] >= 0 ? read(x, u.bus[b][p]) : ref[p];
    for (std::size_t k = 0; k < net.branches.size(); ++k)
        for (std::size_t p = 0; p < 3; ++p) s.branch_current[k][p] = read(x, u.branch[k][p]);
    for (std::size_t l = 0; l < net.loads.size(); ++l)
        for (std::size_t p = 0; p < 3; ++p)
            if (u.load[l][p] >= 0) s.load_current[l][p] = read(x, u.load[l][p]);
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        for (std::size_t p = 0; p < 3; ++p)
            if (u.gen[g][p] >= 0) s.gen_current[g][p] = read(x, u.gen[g][p]);
    return s;
}

class Newton {
  public:
    Newton(const NetworkCase& net, const Unknowns& u) : net_(net), u_(u) {}

    // F(x) and its Jacobian. Rows are numbered in the same blocks as the unknowns:
    // drop pairs per branch phase, KCL pairs per non-slack bus phase, power pairs
    // per element phase.
    void evaluate(const PhasorState& s, const std::vector<std::array<PowerPQ, 3>>& load,
                  const std::vector<std::array<PowerPQ, 3>>& gen, Eigen::VectorXd& f,
                  std::vector<Eigen::Triplet<double>>& jac) const {
        f.setZero(u_.n);
        jac.clear();
        int row = 0;
        auto voltage_col = [&](int bus, std::size_t p) { return u_.bus[std::size_t(bus)][p]; };

        for (std::size_t k = 0; k < net_.branches.size(); ++k) {
            const auto& br = net_.branches[k];
            for (std::size_t p = 0; p < 3; ++p, row += 2) {
                const auto r = voltage_drop_residual(net_, s, int(k), int(p));
                f[row] = r.re;
                f[row + 1] = r.im;
                if (const int c = voltage_col(br.to_bus, p); c >= 0) {
                    jac.emplace_back(row, c, 1.0);
                    jac.emplace_back(row + 1, c + 1, 1.0);
                }
                if (const int c = voltage_col(br.from_bus, p); c >= 0) {
                    jac.emplace_back(row, c, -1.0);
                    jac.emplace_back(row + 1, c + 1, -1.0);
                }
                for (std::size_t q = 0; q < 3; ++q) {
                    const int c = u_.branch[k][q];
                    jac.emplace_back(row, c, br.r[p][q]);
                    jac.emplace_back(row, c + 1, -br.x[p][q]);
                    jac.emplace_back(row + 1, c, br.x[p][q]);
                    jac.emplace_back(row + 1, c + 1, br.r[p][q]);
                }
            }
        }

        for (std::size_t b = 0; b < net_.buses.size(); ++b) {
            if (int(b) == net_.slack) continue;
            for (std::size_t p = 0; p < 3; ++p, row += 2) {
                const auto r = kcl_residual(net_, s, int(b), int(p));
                f[row] = r.re;
                f[row + 1] = r.im;
                auto add = [&](int c, double sign) {
                    if (c < 0) return;
                    jac.emplace_back(row, c, sign);
                    jac.emplace_back(row + 1, c + 1, sign);
                };
                for (std::size_t l = 0; l < net_.loads.size(); ++l)
                    if (net_.loads[l].bus == int(b)) add(u_.load[l][p], 1.0);
                for (std::size_t g = 0; g < net_.generators.size(); ++g)
                    if (net_.generators[g].bus == int(b)) add(u_.gen[g][p], -1.0);
                for (std::size_t k = 0; k < net_.branches.size(); ++k) {
                    if (net_.branches[k].to_bus == int(b)) add(u_.branch[k][p], -1.0);
                    if (net_.branches[k].from_bus == int(b)) add(u_.branch[k][p], 1.0);
                }
            }
        }

        auto power_rows = [&](int bus, std::size_t p, Complex i, int ic, PowerPQ target) {
            const Complex v = s.bus_voltage[std::size_t(bus)][p];
            const auto pq = power_from_phasors(v, i);
            f[row] = pq.p - target.p;
            f[row + 1] = pq.q - target.q;
            if (const int c = voltage_col(bus, p); c >= 0) {
                jac.emplace_back(row, c, i.real());
                jac.emplace_back(row, c + 1, i.imag());
                jac.emplace_back(row + 1, c, -i.imag());
                jac.emplace_back(row + 1, c + 1, i.real());
            }
            jac.emplace_back(row, ic, v.real());
            jac.emplace_back(row, ic + 1, v.imag());
            jac.emplace_back(row + 1, ic, v.imag());
            jac.emplace_back(row + 1, ic + 1, -v.real());
            row += 2;
        };
        for (std::size_t l = 0; l < net_.loads.size(); ++l)
            for (std::size_t p = 0; p < 3; ++p)
                if (u_.load[l][p] >= 0)
                    power_rows(net_.loads[l].bus, p, s.load_current[l][p], u_.load[l][p], load[l][p]);
        for (std::size_t g = 0; g < net_.generators.size(); ++g)
            for (std::size_t p = 0; p < 3; ++p)
                if (u_.gen[g][p] >= 0)
                    power_rows(net_.generators[g].bus, p, s.gen_current[g][p], u_.gen[g][p], gen[g][p]);
    }

  private:
    const NetworkCase& net_;
    const Unknowns& u_;
};

}  // namespace

PhasorState solve_pf(const NetworkCase& net, const InjectionSet& injections, int period,
                     const PowerFlowOptions& options, int* iterations) {
    if (period < 0 || period >= int(injections.load.size()) || period >= int(injections.gen.size()))
        throw std::out_of_range("period " + std::to_string(period) + " outside the injection set");
    const Unknowns u(net);
    const PhaseVec ref = balanced_set(net.buses[std::size_t(net.slack)].v_ref);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(u.n);
    for (const auto& b : u.bus)
        for (std::size_t p = 0; p < 3; ++p)
            if (b[p] >= 0) {
                x[b[p]] = ref[p].real();
                x[b[p] + 1] = ref[p].imag();
            }

    const auto& load = injections.load[std::size_t(period)];
    const auto& gen = injections.gen[std::size_t(period)];
    Newton newton(net, u);
    Eigen::VectorXd f;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseMatrix<double> J(u.n, u.n);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;

    for (int it = 0;; ++it) {
        const PhasorState s = to_state(net, u, x, ref);
        newton.evaluate(s, load, gen, f, trip);
        const double err = f.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(err)) throw PowerFlowError("power flow diverged (non-finite residual)");
        if (err <= options.tol) {
            if (iterations) *iterations = it;
            return s;
        }
        if (it >= options.max_iter)
            throw PowerFlowError("power flow did not converge in " + std::to_string(options.max_iter) +
                                 " iterations (residual " + std::to_string(err) + ")");
        J.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) throw PowerFlowError("singular power-flow Jacobian");
        const Eigen::VectorXd dx = lu.solve(f);
        x -= dx;
    }
}

double doe_bisection(const NetworkCase& net, int gen, ConstraintSet set, int period, const InjectionSet& others,
                     const BisectionOptions& options) {
    if (gen < 0 || gen >= int(net.generators.size())) throw std::out_of_range("generator index out of range");
    const double top = options.upper.value_or(10.0 * net.generators[std::size_t(gen)].p_cap_gridcode);

    auto feasible = [&](double p) {
        InjectionSet inj = others;
        inj.set_generator(net, period, gen, {p, 0.0});
        try {
            const PhasorState s = solve_pf(net, inj, period);
            return check_limits(s, net, set, period, options.limit_tolerance).empty();
        } catch (const PowerFlowError&) {
            return false;
        }
    };

    if (!feasible(0.0))
        throw std::runtime_error("generator " + net.generators[std::size_t(gen)].id +
                                 ": limits are violated at zero export");
    if (feasible(top)) return top;
    double lo = 0.0, hi = top;
    while (hi - lo > options.tol) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

double doe_bisection(const NetworkCase& net, int gen, ConstraintSet set, int period) {
    return doe_bisection(net, gen, set, period, InjectionSet::from_case(net));
}

bool ValidationReport::ok() const {
    if (!violations.empty()) return false;
    for (const auto& p : periods)
        if (!p.converged) return false;
    return max_voltage_deviation <= deviation_tol;
}

namespace {

PeriodCheck check_period(const NetworkCase& net, const InjectionSet& inj, int period, ConstraintSet set,
                         double limit_tol, const PhasorState* reference, std::vector<Violation>& out) {
    PeriodCheck pc;
    pc.period = period;
    PhasorState s;
    try {
        s = solve_pf(net, inj, period);
    } catch (const PowerFlowError& e) {
        pc.error = e.what();
        return pc;
    }
    pc.converged = true;
    const auto res = max_residuals(net, s);
    pc.max_drop_residual = res.max_voltage_drop;
    pc.max_kcl_residual = res.max_kcl;
    if (reference) {
        for (std::size_t b = 0; b < net.buses.size(); ++b)
            for (std::size_t p = 0; p < 3; ++p)
                pc.max_voltage_deviation = std::max(
                    pc.max_voltage_deviation, std::abs(s.bus_voltage[b][p] - reference->bus_voltage[b][p]));
    }
    auto v = check_limits(s, net, set, period, limit_tol);
    out.insert(out.end(), v.begin(), v.end());
    return pc;
}

}  // namespace

ValidationReport validate_injections(const NetworkCase& net, const InjectionSet& injections, ConstraintSet set,
                                     double limit_tol) {
    ValidationReport report;
    for (int t = 0; t < int(injections.load.size()); ++t)
        report.periods.push_back(check_period(net, injections, t, set, limit_tol, nullptr, report.violations));
    return report;
}

ValidationReport validate_solution(const NetworkCase& net, const NlpProblem& problem, const Solution& solution,
                                   double limit_tol) {
    ValidationReport report;
    InjectionSet inj = InjectionSet::from_case(net);
    const auto& layout = problem.layout;
    for (std::size_t slot = 0; slot < layout.slots.size(); ++slot) {
        const int period = layout.periods[slot];
        const auto& pl = layout.slots[slot];
        for (std::size_t g = 0; g < net.generators.size(); ++g)
            for (std::size_t p = 0; p < 3; ++p)
                if (pl.gen_p[g][p] >= 0)
                    inj.gen[std::size_t(period)][g][p] = {solution.x[std::size_t(pl.gen_p[g][p])],
                                                          solution.x[std::size_t(pl.gen_q[g][p])]};
        const PhasorState ref = decode_state(problem, net, solution.x, int(slot));
        auto pc = check_period(net, inj, period, problem.spec.constraints, limit_tol, &ref, report.violations);
        report.max_voltage_deviation = std::max(report.max_voltage_deviation, pc.max_voltage_deviation);
        report.periods.push_back(pc);
    }
    return report;
}

}  // namespace doe::oracle

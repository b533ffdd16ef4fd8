#include "doe/envelope.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace doe {
namespace {

struct PeriodOutcome {
    std::vector<std::array<double, 3>> p, q;  // per generator, per-unit
    std::vector<PeriodDiagnostics> diag;
    double stage1_p = 0.0;
    double margin = 0.0;
    std::optional<ScenarioError> error;
};

PeriodDiagnostics diagnose(const Solution& s, int period, int stage) {
    PeriodDiagnostics d;
    d.period = period;
    d.stage = stage;
    d.status = s.status;
    d.iterations = s.iterations;
    d.objective = s.objective;
    d.max_kkt_residual = s.max_kkt_residual;
    d.message = s.message;
    return d;
}

// Keeps the optimal candidate with the larger objective; the first one wins ties.
bool better(const Solution& cand, const Solution& best) {
    if (cand.status != SolveStatus::optimal) return false;
    if (best.status != SolveStatus::optimal) return true;
    return cand.objective > best.objective;
}

// Stage-1 voltages, currents and generator powers as a start for the
// reactive-margin problem.
std::vector<double> margin_start(const NetworkCase& net, const NlpProblem& from, const Solution& sol,
                                 const NlpProblem& to) {
    std::vector<double> x = to.start;
    encode_state(to, decode_state(from, net, sol.x), 0, x);
    const auto& a = from.layout.slots[0];
    const auto& b = to.layout.slots[0];
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        for (int ph = 0; ph < kPhases; ++ph) {
            if (b.gen_q[g][ph] < 0) continue;
            const double p = sol.x[a.gen_p[g][ph]];
            const double q = sol.x[a.gen_q[g][ph]];
            x[b.gen_p[g][ph]] = std::clamp(p, to.lower[b.gen_p[g][ph]], to.upper[b.gen_p[g][ph]]);
            x[b.gen_q[g][ph]] = q;
            x[b.q_plus[g][ph]] = std::max(q, 0.0);
            x[b.q_minus[g][ph]] = std::max(-q, 0.0);
            x[b.q_aux[g][ph]] = 0.0;
        }
    }
    return x;
}

void read_powers(const NetworkCase& net, const NlpProblem& problem, const Solution& sol, PeriodOutcome& out) {
    const auto& L = problem.layout.slots[0];
    out.p.assign(net.generators.size(), {0.0, 0.0, 0.0});
    out.q.assign(net.generators.size(), {0.0, 0.0, 0.0});
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        for (int ph = 0; ph < kPhases; ++ph) {
            if (L.gen_p[g][ph] < 0) continue;
            out.p[g][ph] = sol.x[L.gen_p[g][ph]];
            out.q[g][ph] = sol.x[L.gen_q[g][ph]];
        }
    }
}

ScenarioError failure(int period, int stage, const Solution& s) {
    return ScenarioError(period, s.status,
                         "period " + std::to_string(period) + " stage " + std::to_string(stage) + ": " +
                             to_string(s.status) + (s.message.empty() ? "" : " (" + s.message + ")"));
}

PeriodOutcome solve_period(const NetworkCase& net, const ScenarioSpec& spec, int t, const RunOptions& opt) {
    PeriodOutcome out;
    const int sc = spec.scenario;
    const ProblemSpec active = problem_spec(ScenarioSpec{sc, Objective::active_export});
    const NlpProblem p1 = build_problem(net, active, t);
    Solution s1 = solve(p1, opt.solver);
    PeriodDiagnostics d1 = diagnose(s1, t, 1);

    if (opt.nested_start && sc >= 2 && sc <= 4) {
        const NlpProblem p5 = build_problem(net, problem_spec(ScenarioSpec{5, Objective::active_export}), t);
        const Solution s5 = solve(p5, opt.solver);
        if (s5.status == SolveStatus::optimal) {
            NlpProblem seeded = p1;
            seeded.start = s5.x;
            // The small initial barrier keeps the iterates near the seed; the
            // default one lets them move to a different (sometimes better) point.
            for (double mu : {opt.solver.mu_init, 1e-4}) {
                SolverOptions warm = opt.solver;
                warm.mu_init = std::min(warm.mu_init, mu);
                Solution alt = solve(seeded, warm);
                if (better(alt, s1)) {
                    s1 = std::move(alt);
                    d1 = diagnose(s1, t, 1);
                    d1.nested = true;
                }
            }
        }
    }
    out.diag.push_back(d1);
    if (s1.status != SolveStatus::optimal) {
        out.error = failure(t, 1, s1);
        return out;
    }
    read_powers(net, p1, s1, out);
    for (const auto& g : out.p)
        for (double v : g) out.stage1_p += v;
    if (spec.objective == Objective::active_export) return out;

    ProblemSpec margin = problem_spec(ScenarioSpec{sc, Objective::reactive_margin});
    if (!opt.free_active) {
        ActiveSchedule sched(static_cast<std::size_t>(net.horizon()));
        sched[std::size_t(t)] = out.p;
        margin.fixed_active = std::move(sched);
        margin.fixed_active_band = opt.active_band;
    }
    const NlpProblem p2 = build_problem(net, margin, t);
    Solution s2 = solve(p2, opt.solver);
    if (s2.status != SolveStatus::optimal) {
        NlpProblem warm = p2;
        warm.start = margin_start(net, p1, s1, p2);
        Solution alt = solve(warm, opt.solver);
        if (better(alt, s2)) s2 = std::move(alt);
    }
    out.diag.push_back(diagnose(s2, t, 2));
    if (s2.status != SolveStatus::optimal) {
        out.error = failure(t, 2, s2);
        return out;
    }
    read_powers(net, p2, s2, out);
    out.margin = s2.objective;
    return out;
}

}  // namespace

double round6(double v) {
    const double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;  // no "-0.000000"
}

EnvelopeResult run_scenario(const NetworkCase& net, const ScenarioSpec& spec, const RunOptions& options) {
    if (net.units != UnitSystem::per_unit) throw InputError("run_scenario expects a per-unit case");
    scenario_constraints(spec.scenario);  // rejects unknown scenarios
    options.solver.check();

    const int T = net.horizon();
    const double s_kva = net.base.s_kva;
    std::vector<PeriodOutcome> outcomes(static_cast<std::size_t>(T));

    if (spec.scenario == 1) {
        for (auto& o : outcomes) {
            o.p.assign(net.generators.size(), {0.0, 0.0, 0.0});
            o.q.assign(net.generators.size(), {0.0, 0.0, 0.0});
            for (std::size_t g = 0; g < net.generators.size(); ++g)
                for (int ph = 0; ph < kPhases; ++ph)
                    if (net.generators[g].phases.has(ph)) o.p[g][ph] = net.generators[g].p_cap_gridcode;
        }
    } else {
        int workers = options.threads > 0 ? options.threads : int(std::thread::hardware_concurrency());
        if (options.solver.trace) workers = 1;
        workers = std::clamp(workers, 1, std::max(T, 1));
        std::atomic<int> next{0};
        std::exception_ptr crash;
        std::mutex crash_mutex;
        auto work = [&] {
            for (int t = next++; t < T; t = next++) {
                try {
                    outcomes[std::size_t(t)] = solve_period(net, spec, t, options);
                } catch (...) {
                    std::lock_guard lock(crash_mutex);
                    if (!crash) crash = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
        for (auto& th : pool) th.join();
        if (crash) std::rethrow_exception(crash);
    }

    EnvelopeResult res;
    res.spec = spec;
    res.period_hours = net.base.period_hours;
    res.export_kw.assign(std::size_t(T), 0.0);
    for (int t = 0; t < T; ++t) {
        auto& o = outcomes[std::size_t(t)];
        if (o.error) throw *o.error;
        for (auto& d : o.diag) res.diagnostics.push_back(d);
        res.stage1_active_kwh += o.stage1_p * s_kva * res.period_hours;
        res.margin_kvarh += o.margin * s_kva * res.period_hours;
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        for (int ph = 0; ph < kPhases; ++ph) {
            if (!net.generators[g].phases.has(ph)) continue;
            for (int t = 0; t < T; ++t) {
                const auto& o = outcomes[std::size_t(t)];
                EnvelopeEntry e{int(g), ph, t, round6(o.p[g][ph] * s_kva), round6(o.q[g][ph] * s_kva)};
                res.entries.push_back(e);
            }
        }
    }
    // Totals from the rounded entries so they can be recomputed from the CSV.
    for (const auto& e : res.entries) {
        res.active_kwh += e.p_kw * res.period_hours;
        res.reactive_kvarh += e.q_kvar * res.period_hours;
        res.export_kw[std::size_t(e.period)] += e.p_kw;
    }
    if (spec.objective == Objective::active_export) {
        res.stage1_active_kwh = res.active_kwh;
        res.margin_kvarh = 0.0;
    } else if (spec.scenario == 1) {
        res.stage1_active_kwh = res.active_kwh;
    }
    return res;
}

}  // namespace doe

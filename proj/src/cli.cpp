#include "doe/cli.h"

#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "doe/envelope.h"
#include "doe/oracle.h"
#include "doe/report.h"

namespace doe {
namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kSolverFailure = 2;

std::string kw(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", round6(v));
    return buf;
}

struct Args {
    std::string network, loads, out, result, generator;
    std::vector<int> scenarios{5};
    int scenario = 5;
    std::string objective = "active";
    double tol = SolverOptions{}.tol_kkt;
    int max_iter = SolverOptions{}.max_iter;
    double limit_tol = 1e-6;
    int threads = 0;
    int period = -1;
    bool trace = false;
};

int do_solve(const Args& a, std::ostream& out, std::ostream& err) {
    const NetworkCase net = load_network(a.network, a.loads);
    RunRecord record{a.network, a.loads, {}};
    record.options.solver.tol_kkt = a.tol;
    record.options.solver.max_iter = a.max_iter;
    record.options.threads = a.threads;
    if (a.trace) record.options.solver.trace = &err;
    const Objective objective = parse_objective(a.objective);

    std::vector<EnvelopeResult> results;
    for (int sc : std::set<int>(a.scenarios.begin(), a.scenarios.end())) {
        try {
            results.push_back(run_scenario(net, ScenarioSpec{sc, objective}, record.options));
        } catch (const ScenarioError& e) {
            err << "scenario " << sc << " failed: " << e.what() << "\n";
            return kSolverFailure;
        }
        const auto& r = results.back();
        out << "scenario " << sc << " (" << to_string(objective) << "): " << kw(r.active_kwh) << " kWh, "
            << kw(r.reactive_kvarh) << " kVArh";
        if (objective == Objective::reactive_margin) out << ", margin " << kw(r.margin_kvarh) << " kVArh";
        out << "\n";
    }
    for (const auto& p : emit_results(net, results, a.out, record)) out << "wrote " << p.string() << "\n";
    return kOk;
}

int do_oracle(const Args& a, std::ostream& out) {
    const NetworkCase net = load_network(a.network, a.loads);
    const ConstraintSet set = scenario_constraints(a.scenario);
    std::vector<int> gens;
    if (a.generator.empty()) {
        for (std::size_t g = 0; g < net.generators.size(); ++g) gens.push_back(int(g));
    } else {
        const int g = net.find_generator(a.generator);
        if (g < 0) throw InputError("unknown generator '" + a.generator + "'");
        gens.push_back(g);
    }
    if (a.period >= net.horizon()) throw InputError("period " + std::to_string(a.period) + " outside horizon");
    const int t0 = a.period < 0 ? 0 : a.period;
    const int t1 = a.period < 0 ? net.horizon() : a.period + 1;
    const oracle::InjectionSet others = oracle::InjectionSet::from_case(net);

    std::string csv = "generator_id,period,p_kw_per_phase\n";
    for (int g : gens) {
        for (int t = t0; t < t1; ++t) {
            const double p = oracle::doe_bisection(net, g, set, t, others);
            csv += net.generators[std::size_t(g)].id + ',' + std::to_string(t) + ',' + kw(p * net.base.s_kva) + '\n';
        }
    }
    if (a.out.empty()) {
        out << csv;
    } else {
        write_text_file(a.out, csv);
        out << "wrote " << a.out << "\n";
    }
    return kOk;
}

int do_validate(const Args& a, std::ostream& out) {
    const NetworkCase net = load_network(a.network, a.loads);
    const auto rows = parse_envelopes_csv(read_text_file(a.result));
    std::map<int, oracle::InjectionSet> by_scenario;
    for (const auto& r : rows) {
        scenario_constraints(r.scenario);
        auto [it, fresh] = by_scenario.try_emplace(r.scenario);
        if (fresh) it->second = oracle::InjectionSet::from_case(net);
        const int g = net.find_generator(r.generator);
        if (g < 0) throw InputError("unknown generator '" + r.generator + "'");
        const PhaseMask ph = PhaseMask::parse(r.phase);
        const int p = ph.has(0) ? 0 : ph.has(1) ? 1 : 2;
        if (ph.count() != 1 || !net.generators[std::size_t(g)].phases.has(p))
            throw InputError("generator '" + r.generator + "' is not connected to phase '" + r.phase + "'");
        if (r.period < 0 || r.period >= net.horizon())
            throw InputError("period " + std::to_string(r.period) + " outside horizon");
        it->second.gen[std::size_t(r.period)][std::size_t(g)][p] = {r.p_kw / net.base.s_kva,
                                                                   r.q_kvar / net.base.s_kva};
    }

    bool ok = true;
    for (const auto& [sc, inj] : by_scenario) {
        const auto rep = oracle::validate_injections(net, inj, scenario_constraints(sc), a.limit_tol);
        int failed_pf = 0;
        for (const auto& p : rep.periods) {
            if (p.converged) continue;
            ++failed_pf;
            out << "scenario " << sc << " period " << p.period << ": power flow failed: " << p.error << "\n";
        }
        for (const auto& v : rep.violations)
            out << "scenario " << sc << " period " << v.period << ": " << describe(v, net) << "\n";
        out << "scenario " << sc << ": " << rep.periods.size() << " periods, " << rep.violations.size()
            << " violations, " << failed_pf << " power-flow failures\n";
        ok = ok && rep.violations.empty() && failed_pf == 0;
    }
    out << (ok ? "no violations\n" : "violations found\n");
    return ok ? kOk : kSolverFailure;
}

int do_plot(const Args& a, std::ostream& out) {
    const auto rows = parse_envelopes_csv(read_text_file(a.result));
    std::map<int, std::vector<double>> series;
    for (const auto& r : rows) {
        if (r.period < 0) throw InputError("negative period in envelopes CSV");
        auto& s = series[r.scenario];
        if (s.size() <= std::size_t(r.period)) s.resize(std::size_t(r.period) + 1, 0.0);
        s[std::size_t(r.period)] += r.p_kw;
    }
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) throw std::runtime_error("cannot create '" + a.out + "': " + ec.message());
    std::vector<ExportSeries> all;
    for (const auto& [sc, kw_series] : series) {
        all.push_back({"scenario " + std::to_string(sc), kw_series});
        const auto path = std::filesystem::path(a.out) / ("export_s" + std::to_string(sc) + ".svg");
        write_text_file(path, export_svg({all.back()}, "export, scenario " + std::to_string(sc)));
        out << "wrote " << path.string() << "\n";
    }
    const auto path = std::filesystem::path(a.out) / "export_all.svg";
    write_text_file(path, export_svg(all, "export per scenario"));
    out << "wrote " << path.string() << "\n";
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic operating envelopes for three-phase LV feeders"};
    app.require_subcommand(1);
    Args a;

    auto* solve_cmd = app.add_subcommand("solve", "compute envelopes for one or more scenarios");
    solve_cmd->add_option("--network", a.network, "network JSON")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--loads", a.loads, "load profile CSV")->check(CLI::ExistingFile);
    solve_cmd->add_option("--scenario", a.scenarios, "scenarios 1..5, comma separated")
        ->delimiter(',')
        ->check(CLI::Range(1, 5));
    solve_cmd->add_option("--objective", a.objective, "active or reactive-margin")
        ->check(CLI::IsMember({"active", "reactive-margin"}));
    solve_cmd->add_option("--out", a.out, "output directory")->required();
    solve_cmd->add_option("--tol", a.tol, "KKT tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iter", a.max_iter, "iteration limit per solve")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--threads", a.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    solve_cmd->add_flag("--trace", a.trace, "per-iteration solver log on stderr (single thread)");

    auto* oracle_cmd = app.add_subcommand("oracle", "bisection export limit per generator (power flow only)");
    oracle_cmd->add_option("--network", a.network, "network JSON")->required()->check(CLI::ExistingFile);
    oracle_cmd->add_option("--loads", a.loads, "load profile CSV")->check(CLI::ExistingFile);
    oracle_cmd->add_option("--scenario", a.scenario, "scenario 1..5 (selects the limits)")->check(CLI::Range(1, 5));
    oracle_cmd->add_option("--generator", a.generator, "generator id (default: all)");
    oracle_cmd->add_option("--period", a.period, "period (default: all)")->check(CLI::NonNegativeNumber);
    oracle_cmd->add_option("--out", a.out, "CSV file (default: stdout)");

    auto* validate_cmd = app.add_subcommand("validate", "re-solve the power flow at envelope injections");
    validate_cmd->add_option("--network", a.network, "network JSON")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--loads", a.loads, "load profile CSV")->check(CLI::ExistingFile);
    validate_cmd->add_option("--result", a.result, "envelopes.csv")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--tol", a.limit_tol, "limit tolerance, per-unit")->check(CLI::NonNegativeNumber);

    auto* plot_cmd = app.add_subcommand("plot", "SVG export plots from envelopes.csv");
    plot_cmd->add_option("--result", a.result, "envelopes.csv")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", a.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kInputError;
    }

    try {
        if (*solve_cmd) return do_solve(a, out, err);
        if (*oracle_cmd) return do_oracle(a, out);
        if (*validate_cmd) return do_validate(a, out);
        return do_plot(a, out);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const oracle::PowerFlowError& e) {
        err << "power flow failed: " << e.what() << "\n";
        return kSolverFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kSolverFailure;
    }
}

}  // namespace doe

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// when any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "doe/cli.h"
#include "doe/envelope.h"
#include "doe/oracle.h"
#include "support.h"

using namespace doe;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

const char* kFixtures[] = {"two_bus", "synth4", "phase_a", "croatian_style", "australian_style"};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome ac1() {
    std::string detail;
    bool pass = true;
    const std::pair<const char*, double> cases[] = {{"croatian_style", 3797.76}, {"australian_style", 7560.00}};
    for (const auto& [name, expected] : cases) {
        const NetworkCase net = testsupport::fixture(name);
        const auto t0 = Clock::now();
        const EnvelopeResult r = run_scenario(net, ScenarioSpec{1, Objective::active_export});
        const double dt = seconds_since(t0);
        const bool ok = std::abs(r.active_kwh - expected) <= 1e-6 && r.reactive_kvarh == 0.0 && dt < 1.0;
        pass = pass && ok;
        detail += fmt("%s %.6f kWh %.2f kVArh %.3f s; ", name, r.active_kwh, r.reactive_kvarh, dt);
    }
    return {pass, detail};
}

Outcome ac2() {
    std::string detail;
    bool pass = true;
    for (const char* name : kFixtures) {
        const NetworkCase net = testsupport::fixture(name);
        const auto t0 = Clock::now();
        int converged = 0, total = 0;
        double worst = 0.0;
        for (auto obj : {Objective::active_export, Objective::reactive_margin})
            for (int sc = 2; sc <= 5; ++sc)
                for (int t = 0; t < net.horizon(); ++t) {
                    const NlpProblem p = build_problem(net, ScenarioSpec{sc, obj}, t);
                    const Solution s = solve(p);
                    ++total;
                    if (s.status != SolveStatus::optimal) continue;
                    ++converged;
                    const auto r = max_residuals(net, decode_state(p, net, s.x));
                    worst = std::max({worst, r.max_kcl, r.max_voltage_drop});
                }
        const double dt = seconds_since(t0);
        pass = pass && worst <= 1e-8 && dt < 30.0;
        detail += fmt("%s %d/%d converged max %.1e %.1f s; ", name, converged, total, worst, dt);
    }
    return {pass, detail};
}

Outcome ac3() {
    const NetworkCase net = testsupport::fixture("two_bus");
    std::string detail;
    bool pass = true;
    for (const char* set : {"voltage", "current", "voltage,current,vuf"}) {
        ProblemSpec spec;
        spec.constraints = ConstraintSet::parse(set);
        spec.fix_reactive_zero = true;
        const Solution s = solve(build_problem(net, spec, 0));
        const double ref = oracle::doe_bisection(net, 0, spec.constraints, 0);
        const double rel = std::abs(s.objective - ref) / ref;
        pass = pass && s.status == SolveStatus::optimal && rel <= 0.005;
        detail += fmt("{%s} nlp %.6f bisection %.6f rel %.1e; ", set, s.objective, ref, rel);
    }
    return {pass, detail};
}

Outcome ac4() {
    std::string detail;
    bool pass = true;
    for (const char* name : {"synth4", "croatian_style", "australian_style"}) {
        const NetworkCase net = testsupport::fixture(name);
        std::vector<EnvelopeResult> r;
        for (int sc = 2; sc <= 5; ++sc) r.push_back(run_scenario(net, ScenarioSpec{sc, Objective::active_export}));
        int bad = 0;
        for (std::size_t t = 0; t < r[3].diagnostics.size(); ++t) {
            const double s5 = r[3].diagnostics[t].objective;
            const double floor = std::min({r[0].diagnostics[t].objective, r[1].diagnostics[t].objective,
                                           r[2].diagnostics[t].objective});
            if (s5 > floor + 1e-6) ++bad;
        }
        const bool blowup = r[0].active_kwh > r[3].active_kwh;
        pass = pass && bad == 0 && blowup;
        detail += fmt("%s S2 %.2f S3 %.2f S4 %.2f S5 %.2f kWh, %d periods out of order; ", name, r[0].active_kwh,
                      r[1].active_kwh, r[2].active_kwh, r[3].active_kwh, bad);
    }
    return {pass, detail};
}

Outcome ac5() {
    const NetworkCase net = testsupport::fixture("phase_a");
    const EnvelopeResult s3 = run_scenario(net, ScenarioSpec{3, Objective::active_export});
    const EnvelopeResult s5 = run_scenario(net, ScenarioSpec{5, Objective::active_export});
    const double gain = s3.active_kwh / s5.active_kwh - 1.0;
    double max_vuf = 0.0;
    for (int t = 0; t < net.horizon(); ++t) {
        const NlpProblem p = build_problem(net, ScenarioSpec{3, Objective::active_export}, t);
        const Solution s = solve(p);
        if (s.status != SolveStatus::optimal) continue;
        const PhasorState st = decode_state(p, net, s.x);
        for (std::size_t b = 0; b < net.buses.size(); ++b)
            if (int(b) != net.slack) max_vuf = std::max(max_vuf, vuf(st, int(b)));
    }
    return {gain >= 0.01 && max_vuf > 0.02,
            fmt("S3 %.2f kWh S5 %.2f kWh (+%.1f%%), S3 max VUF %.4f", s3.active_kwh, s5.active_kwh, 100 * gain,
                max_vuf)};
}

Outcome ac6() {
    std::string detail;
    bool pass = true;
    std::mt19937_64 rng(2024);
    for (const char* name : kFixtures) {
        const NetworkCase net = testsupport::fixture(name);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const int t = int(rng() % std::uint64_t(net.horizon()));
            const auto obj = k % 2 ? Objective::reactive_margin : Objective::active_export;
            const NlpProblem p = build_problem(net, ScenarioSpec{5, obj}, t);
            std::uniform_real_distribution<double> u(-0.2, 0.2);
            std::vector<double> x(p.start);
            for (auto& v : x) v += u(rng);

            const std::size_t n = x.size(), m = p.rows.size();
            // dense analytic Jacobian, column-major
            std::vector<double> jac(n * m, 0.0);
            for (const auto& e : jacobian(p, x)) jac[std::size_t(e.var) * m + std::size_t(e.row)] += e.value;
            const auto grad = eval_objective(p, x).gradient;
            const double h = 1e-6;
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const auto cp = row_values(p, xp), cm = row_values(p, xm);
                for (std::size_t r = 0; r < m; ++r) {
                    const double fd = (cp[r] - cm[r]) / (2 * h), an = jac[i * m + r];
                    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
                }
                const double fd = (eval_objective(p, xp).value - eval_objective(p, xm).value) / (2 * h);
                worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
            }
        }
        pass = pass && worst <= 1e-6;
        detail += fmt("%s %.1e; ", name, worst);
    }
    return {pass, detail};
}

Outcome ac7() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(0.5, 1.5), ang(-std::numbers::pi, std::numbers::pi), skew(-0.3, 0.3);
    const double shift = 2.0 * std::numbers::pi / 3.0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double a = ang(rng);
        const PhaseVec u{std::polar(mag(rng), a + skew(rng)), std::polar(mag(rng), a - shift + skew(rng)),
                         std::polar(mag(rng), a + shift + skew(rng))};
        const double ref = testsupport::fortescue_vuf(u);
        worst = std::max(worst, std::abs(vuf(u) - ref) / std::max(ref, 1e-300));
    }
    int nonzero = 0;
    for (int k = 0; k < 1000; ++k) {
        const double m = mag(rng), a = ang(rng);
        const PhaseVec u{std::polar(m, a), std::polar(m, a - shift), std::polar(m, a + shift)};
        if (vuf(u) != 0.0) ++nonzero;
    }
    return {worst <= 1e-12 && nonzero == 0,
            fmt("max relative difference %.1e over 1000 triples, %d/1000 balanced triples nonzero", worst, nonzero)};
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "doe_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_cli(int(argv.size()), argv.data(), out, err);
}

Outcome ac8() {
    const fs::path base = fs::temp_directory_path() / "doe_acceptance";
    fs::remove_all(base);
    std::string bytes[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path dir = base / std::to_string(k);
        const int code = cli({"solve", "--network", testsupport::data("croatian_style.json").string(), "--scenario",
                              "1,2,3,4,5", "--out", dir.string()});
        if (code != 0) return {false, fmt("solve exited %d", code)};
        std::ifstream in(dir / "envelopes.csv", std::ios::binary);
        bytes[k].assign(std::istreambuf_iterator<char>(in), {});
    }
    fs::remove_all(base);
    return {!bytes[0].empty() && bytes[0] == bytes[1], fmt("%zu bytes, identical: %s", bytes[0].size(),
                                                           bytes[0] == bytes[1] ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> checks[] = {
        {"AC1 scenario 1 cap totals", ac1},     {"AC2 physics residuals", ac2},
        {"AC3 bisection equivalence", ac3},     {"AC4 constraint-set ordering", ac4},
        {"AC5 VUF materiality", ac5},           {"AC6 derivatives vs finite differences", ac6},
        {"AC7 VUF vs complex transform", ac7},  {"AC8 deterministic envelopes", ac8},
    };
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        if (o.detail.ends_with("; ")) o.detail.resize(o.detail.size() - 2);
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

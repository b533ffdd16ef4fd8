#include <doctest.h>

#include <map>
#include <random>

#include "doe/nlp.h"
#include "support.h"

using namespace doe;

namespace {

// slack -> n1 with one phase-a load and one phase-a generator, no-load profile.
NetworkCase small_case(double load_kw = 0.0) {
    NetworkCase net;
    net.name = "small";
    net.base.periods = 2;
    net.buses.push_back(Bus{"s", 0.9, 1.1, 0.02, true, 1.0});
    net.buses.push_back(Bus{"n1", 0.9, 1.1, 0.02, false, 1.0});
    Branch br;
    br.id = "l1";
    br.from_bus = 0;
    br.to_bus = 1;
    const auto z = seq_to_phase_impedance({0.08, 0.03}, {0.3, 0.12});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            br.r[i][j] = z[i][j].real();
            br.x[i][j] = z[i][j].imag();
        }
    br.i_max = 100.0;
    net.branches.push_back(br);
    Load ld;
    ld.id = "h";
    ld.bus = 1;
    ld.phases = PhaseMask::parse("a");
    ld.p[0] = {load_kw, load_kw};
    ld.q[0] = {0.0, 0.0};
    net.loads.push_back(ld);
    net.generators.push_back(Generator{"g", 1, PhaseMask::parse("a"), 5.0, 2.0});
    validate(net);
    return to_per_unit(net);
}

std::map<RowKind, int> count_rows(const NlpProblem& p) {
    std::map<RowKind, int> n;
    for (const auto& r : p.rows) ++n[r.kind];
    return n;
}

std::vector<double> random_point(const NlpProblem& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(std::size_t(p.n_vars()));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = p.start[i] + 0.3 * u(rng);
    return x;
}

// Row value recomputed from phasecalc on the decoded state.
double reference_row(const NlpProblem& p, const NetworkCase& net, const std::vector<double>& x, const ConstraintRow& r) {
    const PhasorState s = decode_state(p, net, x, r.slot);
    const auto& L = p.layout.slots[std::size_t(r.slot)];
    const auto g = std::size_t(r.object);
    const auto ph = std::size_t(r.phase);
    const int t = p.layout.periods[std::size_t(r.slot)];
    switch (r.kind) {
        case RowKind::voltage_drop_re: return voltage_drop_residual(net, s, r.object, r.phase).re;
        case RowKind::voltage_drop_im: return voltage_drop_residual(net, s, r.object, r.phase).im;
        case RowKind::kcl_re: return kcl_residual(net, s, r.object, r.phase).re;
        case RowKind::kcl_im: return kcl_residual(net, s, r.object, r.phase).im;
        case RowKind::gen_p: return x[std::size_t(L.gen_p[g][ph])] - gen_power(net, s, r.object, r.phase).p;
        case RowKind::gen_q: return x[std::size_t(L.gen_q[g][ph])] - gen_power(net, s, r.object, r.phase).q;
        case RowKind::load_p:
            return load_power(net, s, r.object, r.phase).p - net.loads[g].p[ph][std::size_t(t)];
        case RowKind::load_q:
            return load_power(net, s, r.object, r.phase).q - net.loads[g].q[ph][std::size_t(t)];
        case RowKind::reactive_split:
            return x[std::size_t(L.gen_q[g][ph])] - x[std::size_t(L.q_plus[g][ph])] + x[std::size_t(L.q_minus[g][ph])];
        case RowKind::current_limit: return std::norm(s.branch_current[g][ph]);
        case RowKind::voltage_limit: return std::norm(s.bus_voltage[g][ph]);
        case RowKind::vuf_limit: {
            const auto sq = sequence_squares(s.bus_voltage[g]);
            const double w = net.buses[g].vuf_max;
            return sq.negative - w * w * sq.positive;
        }
        case RowKind::margin_plus: return x[std::size_t(L.q_aux[g][ph])] - x[std::size_t(L.q_plus[g][ph])];
        case RowKind::margin_minus: return x[std::size_t(L.q_aux[g][ph])] - x[std::size_t(L.q_minus[g][ph])];
    }
    return 0.0;
}

}  // namespace

TEST_CASE("quadratic expressions") {
    QuadraticExpr e;
    e.add_constant(1.5).add(0, 2.0).add(0, 1, 3.0).add(1, 1, -1.0);
    const std::vector<double> x{2.0, -1.0};
    CHECK(e.value(x) == doctest::Approx(1.5 + 4.0 - 6.0 - 1.0));
    std::vector<double> g(2, 0.0);
    e.add_gradient(x, 1.0, g);
    CHECK(g[0] == doctest::Approx(2.0 + 3.0 * -1.0));
    CHECK(g[1] == doctest::Approx(3.0 * 2.0 - 2.0 * -1.0));
    double h01 = 0, h11 = 0;
    for (const auto& h : e.hessian()) {
        CHECK(h.row >= h.col);
        if (h.row == 1 && h.col == 0) h01 += h.value;
        if (h.row == 1 && h.col == 1) h11 += h.value;
    }
    CHECK(h01 == doctest::Approx(3.0));
    CHECK(h11 == doctest::Approx(-2.0));
    CHECK(e.max_var() == 1);
    CHECK_FALSE(e.is_affine());
}

TEST_CASE("row counts by enumeration") {
    const NetworkCase net = small_case();
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
    auto n = count_rows(p);
    // one branch x 3 phases x (re, im)
    CHECK(n[RowKind::voltage_drop_re] + n[RowKind::voltage_drop_im] == 6);
    // one non-slack bus x 3 phases x (re, im)
    CHECK(n[RowKind::kcl_re] + n[RowKind::kcl_im] == 6);
    CHECK(n[RowKind::gen_p] == 1);
    CHECK(n[RowKind::gen_q] == 1);
    CHECK(n[RowKind::load_p] == 1);
    CHECK(n[RowKind::load_q] == 1);
    CHECK(n[RowKind::current_limit] == 3);
    CHECK(n[RowKind::voltage_limit] == 3);
    CHECK(n[RowKind::vuf_limit] == 1);
    CHECK(p.n_equalities == 16);
    CHECK(p.n_inequalities() == 7);
    // variables: 2 buses x 3 x 2, branch 3 x 2, load 1 x 2, gen 1 x 2, P, Q
    CHECK(p.n_vars() == 12 + 6 + 2 + 2 + 2);
    for (int i = 0; i < p.n_equalities; ++i) CHECK(p.rows[std::size_t(i)].is_equality());

    const NlpProblem m = build_problem(net, ScenarioSpec{5, Objective::reactive_margin}, 0);
    auto nm = count_rows(m);
    CHECK(nm[RowKind::reactive_split] == 1);
    CHECK(nm[RowKind::margin_plus] == 1);
    CHECK(nm[RowKind::margin_minus] == 1);
    CHECK(m.n_vars() == p.n_vars() + 3);
}

TEST_CASE("scenario row sets") {
    const NetworkCase net = testsupport::fixture("synth4");
    auto rows = [&](int sc) { return count_rows(build_problem(net, ScenarioSpec{sc, Objective::active_export}, 3)); };
    auto s1 = rows(1), s2 = rows(2), s3 = rows(3), s4 = rows(4), s5 = rows(5);
    CHECK(s1[RowKind::current_limit] + s1[RowKind::voltage_limit] + s1[RowKind::vuf_limit] == 0);
    CHECK(s2[RowKind::current_limit] == 0);
    CHECK(s2[RowKind::vuf_limit] == s5[RowKind::vuf_limit]);
    CHECK(s2[RowKind::voltage_limit] == s5[RowKind::voltage_limit]);
    // S3 is S5 without the VUF rows
    CHECK(s3[RowKind::vuf_limit] == 0);
    CHECK(s3[RowKind::current_limit] == s5[RowKind::current_limit]);
    CHECK(s3[RowKind::voltage_limit] == s5[RowKind::voltage_limit]);
    CHECK(s4[RowKind::voltage_limit] == 0);
    CHECK(s4[RowKind::vuf_limit] == s5[RowKind::vuf_limit]);
    CHECK(s5[RowKind::vuf_limit] == 3);  // non-slack buses
    CHECK(s5[RowKind::current_limit] == 9);

    const NlpProblem p1 = build_problem(net, ScenarioSpec{1, Objective::active_export}, 0);
    const auto& L = p1.layout.slots[0];
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        for (int ph = 0; ph < 3; ++ph)
            if (L.gen_p[g][ph] >= 0) CHECK(p1.upper[std::size_t(L.gen_p[g][ph])] == net.generators[g].p_cap_gridcode);

    CHECK_THROWS_AS(scenario_constraints(0), std::invalid_argument);
    CHECK_THROWS_AS(scenario_constraints(6), std::invalid_argument);
    CHECK(scenario_constraints(4) == ConstraintSet{false, true, true});
}

TEST_CASE("slack voltages are fixed by bounds") {
    const NetworkCase net = testsupport::fixture("synth4");
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
    const auto& L = p.layout.slots[0];
    const auto ref = balanced_set(1.0);
    for (int ph = 0; ph < 3; ++ph) {
        const auto re = std::size_t(L.u_re[std::size_t(net.slack)][ph]);
        const auto im = std::size_t(L.u_im[std::size_t(net.slack)][ph]);
        CHECK(p.lower[re] == p.upper[re]);
        CHECK(p.lower[im] == p.upper[im]);
        CHECK(p.lower[re] == doctest::Approx(ref[std::size_t(ph)].real()));
        CHECK(p.lower[im] == doctest::Approx(ref[std::size_t(ph)].imag()));
    }
}

TEST_CASE("flat start of a no-load case satisfies every equality") {
    const NetworkCase net = small_case(0.0);
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
    const auto c = eval_constraints(p, p.start);
    for (int i = 0; i < p.n_equalities; ++i) CHECK(std::abs(c[std::size_t(i)]) <= 1e-12);
}

TEST_CASE("row values agree with phasecalc") {
    std::mt19937_64 rng(5);
    for (const char* name : {"synth4", "phase_a"}) {
        const NetworkCase net = testsupport::fixture(name);
        for (auto obj : {Objective::active_export, Objective::reactive_margin}) {
            const NlpProblem p = build_problem(net, ScenarioSpec{5, obj}, 7);
            for (int k = 0; k < 5; ++k) {
                const auto x = random_point(p, rng);
                const auto v = row_values(p, x);
                for (std::size_t r = 0; r < p.rows.size(); ++r) {
                    const double ref = reference_row(p, net, x, p.rows[r]);
                    CHECK(std::abs(v[r] - ref) <= 1e-14 * std::max(1.0, std::abs(ref)));
                }
            }
        }
    }
}

TEST_CASE("Jacobian is the first-order change of the residuals") {
    const NetworkCase net = testsupport::fixture("synth4");
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::reactive_margin}, 2);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 10; ++k) {
        const auto x = random_point(p, rng);
        std::vector<double> d(x.size());
        for (auto& v : d) v = n01(rng);
        std::vector<double> jd(p.rows.size(), 0.0);
        for (const auto& e : jacobian(p, x)) jd[std::size_t(e.row)] += e.value * d[std::size_t(e.var)];
        const auto c0 = row_values(p, x);
        double prev = 0.0;
        for (double h : {1e-2, 1e-3}) {
            std::vector<double> xh = x;
            for (std::size_t i = 0; i < x.size(); ++i) xh[i] += h * d[i];
            const auto ch = row_values(p, xh);
            double err = 0.0;
            for (std::size_t r = 0; r < ch.size(); ++r) err = std::max(err, std::abs(ch[r] - c0[r] - h * jd[r]));
            // quadratic rows: the remainder scales exactly with h^2
            if (prev > 0.0) CHECK(err / prev == doctest::Approx(1e-2).epsilon(1e-3));
            prev = err;
        }
    }
}

TEST_CASE("Hessians are constant") {
    const NetworkCase net = testsupport::fixture("synth4");
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> n01;
    std::vector<double> d(std::size_t(p.n_vars()));
    for (auto& v : d) v = n01(rng);
    auto second_difference = [&](const std::vector<double>& x) {
        const double h = 1e-3;
        std::vector<double> xp = x, xm = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            xp[i] += h * d[i];
            xm[i] -= h * d[i];
        }
        const auto cp = row_values(p, xp), c0 = row_values(p, x), cm = row_values(p, xm);
        std::vector<double> out(c0.size());
        for (std::size_t r = 0; r < c0.size(); ++r) out[r] = (cp[r] - 2 * c0[r] + cm[r]) / (h * h);
        return out;
    };
    const auto a = second_difference(random_point(p, rng));
    const auto b = second_difference(random_point(p, rng));
    for (std::size_t r = 0; r < a.size(); ++r) CHECK(a[r] == doctest::Approx(b[r]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("objectives") {
    const NetworkCase net = small_case();
    SUBCASE("active export") {
        const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
        std::vector<double> x = p.start;
        x[std::size_t(p.layout.slots[0].gen_p[0][0])] = 0.5;
        const auto e = eval_objective(p, x);
        CHECK(e.value == doctest::Approx(0.5));
        CHECK(p.maximize);
    }
    SUBCASE("reactive margin") {
        const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::reactive_margin}, 0);
        const auto& L = p.layout.slots[0];
        std::vector<double> x = p.start;
        x[std::size_t(L.q_plus[0][0])] = 0.3;
        x[std::size_t(L.q_minus[0][0])] = 0.3;
        x[std::size_t(L.q_aux[0][0])] = 0.3;
        CHECK(eval_objective(p, x).value == doctest::Approx(0.3));
        const auto c = eval_constraints(p, x);
        for (std::size_t r = std::size_t(p.n_equalities); r < p.rows.size(); ++r)
            if (p.rows[r].kind == RowKind::margin_plus || p.rows[r].kind == RowKind::margin_minus)
                CHECK(c[r] == doctest::Approx(0.0));
        // Q+ and Q- are boxed by the reactive capability
        CHECK(p.upper[std::size_t(L.q_plus[0][0])] == doctest::Approx(net.generators[0].q_abs_max));
        CHECK(p.upper[std::size_t(L.q_minus[0][0])] == doctest::Approx(net.generators[0].q_abs_max));
    }
    SUBCASE("gradient matches central differences") {
        for (auto obj : {Objective::active_export, Objective::reactive_margin}) {
            const NlpProblem p = build_problem(net, ScenarioSpec{5, obj}, 0);
            std::mt19937_64 rng(17);
            const auto x = random_point(p, rng);
            const auto e = eval_objective(p, x);
            for (std::size_t i = 0; i < x.size(); ++i) {
                std::vector<double> xp = x, xm = x;
                xp[i] += 1e-6;
                xm[i] -= 1e-6;
                const double fd = (eval_objective(p, xp).value - eval_objective(p, xm).value) / 2e-6;
                CHECK(std::abs(fd - e.gradient[i]) <= 1e-8);
            }
        }
    }
}

TEST_CASE("fixed active schedule") {
    const NetworkCase net = testsupport::fixture("synth4");
    ActiveSchedule sched(std::size_t(net.horizon()),
                         std::vector<std::array<double, 3>>(net.generators.size(), {0.01, 0.01, 0.01}));
    ProblemSpec spec = problem_spec(ScenarioSpec{5, Objective::reactive_margin});
    spec.fixed_active = sched;
    const NlpProblem exact = build_problem(net, spec, 4);
    spec.fixed_active_band = 0.1;
    const NlpProblem band = build_problem(net, spec, 4);
    const auto& L = exact.layout.slots[0];
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        for (int ph = 0; ph < 3; ++ph) {
            const int v = L.gen_p[g][ph];
            if (v < 0) continue;
            CHECK(exact.lower[std::size_t(v)] == 0.01);
            CHECK(exact.upper[std::size_t(v)] == 0.01);
            CHECK(band.lower[std::size_t(v)] == doctest::Approx(0.009));
            CHECK(band.upper[std::size_t(v)] == 0.01);
        }
}

TEST_CASE("state encode/decode round trip") {
    const NetworkCase net = testsupport::fixture("synth4");
    const NlpProblem p = build_problem(net, ScenarioSpec{5, Objective::active_export}, 0);
    std::mt19937_64 rng(21);
    const auto x = random_point(p, rng);
    const PhasorState s = decode_state(p, net, x);
    std::vector<double> y(x.size(), 0.0);
    encode_state(p, s, 0, y);
    const auto& L = p.layout.slots[0];
    for (std::size_t b = 0; b < net.buses.size(); ++b)
        for (int ph = 0; ph < 3; ++ph) CHECK(y[std::size_t(L.u_re[b][ph])] == x[std::size_t(L.u_re[b][ph])]);
}

TEST_CASE("multi-period problems stack independent slots") {
    const NetworkCase net = testsupport::fixture("synth4");
    const int periods[] = {3, 9};
    const NlpProblem joint = build_problem(net, problem_spec(ScenarioSpec{5, Objective::active_export}), periods);
    const NlpProblem a = build_problem(net, ScenarioSpec{5, Objective::active_export}, 3);
    const NlpProblem b = build_problem(net, ScenarioSpec{5, Objective::active_export}, 9);
    CHECK(joint.n_vars() == a.n_vars() + b.n_vars());
    CHECK(joint.n_rows() == a.n_rows() + b.n_rows());
    CHECK(joint.layout.slots.size() == 2);
    // no row touches both slots
    const int split = a.n_vars();
    for (const auto& r : joint.rows) {
        bool lo = false, hi = false;
        for (const auto& t : r.expr.linear) (t.var < split ? lo : hi) = true;
        for (const auto& t : r.expr.quadratic) (t.i < split ? lo : hi) = true;
        CHECK_FALSE((lo && hi));
    }
}

TEST_CASE("objective names") {
    CHECK(parse_objective("active") == Objective::active_export);
    CHECK(parse_objective("reactive-margin") == Objective::reactive_margin);
    CHECK_THROWS_AS(parse_objective("both"), InputError);
}

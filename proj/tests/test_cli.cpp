#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "doe/cli.h"
#include "doe/envelope.h"
#include "doe/report.h"
#include "support.h"

using namespace doe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "doe_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("doe_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("rounding") {
    CHECK(round6(1.23456749) == 1.234567);
    CHECK(round6(-0.0000004) == 0.0);
    CHECK(round6(2.5e-6) == doctest::Approx(3e-6));
}

TEST_CASE("scenario 1 totals are the caps") {
    const NetworkCase net = testsupport::fixture("synth4");
    const EnvelopeResult r = run_scenario(net, ScenarioSpec{1, Objective::active_export});
    double caps_kw = 0.0;
    for (const auto& g : net.generators) caps_kw += g.p_cap_gridcode * net.base.s_kva * double(g.phases.count());
    CHECK(r.active_kwh == doctest::Approx(caps_kw * net.horizon() * net.base.period_hours));
    CHECK(r.reactive_kvarh == 0.0);
    for (const auto& e : r.entries) CHECK(e.q_kvar == 0.0);
}

TEST_CASE("aggregation identity") {
    const NetworkCase net = testsupport::fixture("synth4");
    const EnvelopeResult r = run_scenario(net, ScenarioSpec{3, Objective::active_export});
    double sum = 0.0;
    std::map<int, double> per_period;
    for (const auto& e : r.entries) {
        sum += e.p_kw * r.period_hours;
        per_period[e.period] += e.p_kw;
        CHECK(e.p_kw == round6(e.p_kw));
    }
    CHECK(std::abs(sum - r.active_kwh) <= 1e-9);
    REQUIRE(r.export_kw.size() == std::size_t(net.horizon()));
    for (const auto& [t, kw] : per_period) CHECK(std::abs(r.export_kw[std::size_t(t)] - kw) <= 1e-9);

    // entries are sorted by generator, phase, period
    for (std::size_t i = 1; i < r.entries.size(); ++i) {
        const auto& a = r.entries[i - 1];
        const auto& b = r.entries[i];
        CHECK(std::tie(a.gen, a.phase, a.period) < std::tie(b.gen, b.phase, b.period));
    }
}

TEST_CASE("reactive margin runs in two stages") {
    const NetworkCase net = testsupport::fixture("synth4");
    const EnvelopeResult a = run_scenario(net, ScenarioSpec{5, Objective::active_export});
    const EnvelopeResult m = run_scenario(net, ScenarioSpec{5, Objective::reactive_margin});
    CHECK(m.stage1_active_kwh == doctest::Approx(a.active_kwh).epsilon(1e-6));
    CHECK(m.active_kwh <= m.stage1_active_kwh + 1e-6);
    CHECK(m.active_kwh >= (1.0 - 1e-4) * m.stage1_active_kwh - 1e-6);
    CHECK(m.margin_kvarh >= 0.0);
    bool stage2 = false;
    for (const auto& d : m.diagnostics) stage2 = stage2 || d.stage == 2;
    CHECK(stage2);
}

TEST_CASE("report text") {
    const NetworkCase net = testsupport::fixture("synth4");
    CHECK(envelopes_csv(net, {}) == "scenario,generator_id,phase,period,p_kw,q_kvar\n");

    const EnvelopeResult r = run_scenario(net, ScenarioSpec{1, Objective::active_export});
    const std::string csv = envelopes_csv(net, {r});
    const auto rows = parse_envelopes_csv(csv);
    CHECK(rows.size() == r.entries.size());
    CHECK(rows[0].scenario == 1);
    CHECK(rows[0].p_kw == doctest::Approx(r.entries[0].p_kw));
    CHECK_THROWS_AS(parse_envelopes_csv("bad,header\n"), InputError);

    const json summary = json::parse(summary_json(net, {r}));
    REQUIRE(summary["scenarios"].size() == 1);
    CHECK(summary["scenarios"][0]["active_energy_kwh"].get<double>() == doctest::Approx(r.active_kwh));
    CHECK(summary["periods"] == net.horizon());

    const std::string svg = export_svg({export_series(r), {"flat", std::vector<double>(24, 1.0)}, {"x", {0, 2}}}, "t");
    std::size_t count = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
    CHECK(count == 3);
    CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("emit_results writes a manifest with hashes") {
    const NetworkCase net = testsupport::fixture("synth4");
    const EnvelopeResult r = run_scenario(net, ScenarioSpec{1, Objective::active_export});
    const fs::path dir = scratch_dir("emit");
    const auto written = emit_results(net, {r}, dir, RunRecord{testsupport::data("synth4.json"), {}, {}});
    for (const char* f : {"envelopes.csv", "summary.json", "manifest.json", "export_s1.svg"})
        CHECK(fs::exists(dir / f));
    CHECK_FALSE(fs::exists(dir / "export_all.svg"));
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["outputs"].size() >= 3);
    bool found = false;
    for (const auto& o : manifest["outputs"])
        if (o["path"] == "envelopes.csv") {
            found = true;
            CHECK(o["sha256"] == sha256_hex(slurp(dir / "envelopes.csv")));
        }
    CHECK(found);
    CHECK(written.size() >= 4);
    fs::remove_all(dir);
}

TEST_CASE("command line") {
    const std::string network = testsupport::data("synth4.json").string();
    const std::string loads = testsupport::data("synth4_loads.csv").string();
    const fs::path dir = scratch_dir("solve");

    SUBCASE("solve, validate, plot") {
        auto r = run({"solve", "--network", network, "--loads", loads, "--scenario", "1,3", "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(fs::exists(dir / "envelopes.csv"));
        CHECK(fs::exists(dir / "export_all.svg"));
        const auto rows = parse_envelopes_csv(slurp(dir / "envelopes.csv"));
        CHECK_FALSE(rows.empty());

        r = run({"validate", "--network", network, "--loads", loads, "--result", (dir / "envelopes.csv").string()});
        CHECK(r.code == 0);

        const fs::path plots = dir / "plots";
        r = run({"plot", "--result", (dir / "envelopes.csv").string(), "--out", plots.string()});
        CHECK(r.code == 0);
        CHECK(fs::exists(plots / "export_s3.svg"));
    }
    SUBCASE("oracle") {
        const auto r = run({"oracle", "--network", testsupport::data("two_bus.json").string(), "--scenario", "2"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("generator_id,period,p_kw_per_phase\n", 0) == 0);
    }
    SUBCASE("usage errors exit 1") {
        CHECK(run({"solve", "--network", network, "--scenario", "9", "--out", dir.string()}).code == 1);
        CHECK(run({"solve", "--network", network, "--out", dir.string(), "--bogus"}).code == 1);
        CHECK(run({"solve", "--out", dir.string()}).code == 1);
        CHECK(run({"solve", "--network", "/nonexistent.json", "--out", dir.string()}).code == 1);
        CHECK(run({}).code == 1);
        const auto r = run({"solve", "--network", network, "--objective", "both", "--out", dir.string()});
        CHECK(r.code == 1);
        CHECK_FALSE(r.err.empty());
    }
    SUBCASE("help exits 0") { CHECK(run({"--help"}).code == 0); }
    fs::remove_all(dir);
}

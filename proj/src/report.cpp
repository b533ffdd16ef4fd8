#include "doe/report.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#ifndef DOE_VERSION
#define DOE_VERSION "0.0.0"
#endif

namespace doe {
namespace {

using nlohmann::ordered_json;

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", round6(v));
    return buf;
}

// Totals are sums of 6-decimal entries; this only strips the summation noise.
double round9(double v) {
    const double r = std::round(v * 1e9) / 1e9;
    return r == 0.0 ? 0.0 : r;
}

std::vector<std::string> split(const std::string& line) {
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

template <class T>
T parse_number(const std::string& s, int line) {
    std::size_t used = 0;
    T v{};
    try {
        if constexpr (std::is_same_v<T, int>)
            v = std::stoi(s, &used);
        else
            v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size())
        throw InputError("envelopes CSV line " + std::to_string(line) + ": not a number '" + s + "'");
    return v;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json file_record(const std::string& role, const std::filesystem::path& path) {
    return {{"role", role}, {"path", path.string()}, {"sha256", sha256_hex(read_text_file(path))}};
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string envelopes_csv(const NetworkCase& net, const std::vector<EnvelopeResult>& results) {
    std::string out = "scenario,generator_id,phase,period,p_kw,q_kvar\n";
    for (const auto& r : results) {
        for (const auto& e : r.entries) {
            out += std::to_string(r.spec.scenario) + ',' + net.generators.at(std::size_t(e.gen)).id + ',' +
                   phase_name(e.phase) + ',' + std::to_string(e.period) + ',' + fixed6(e.p_kw) + ',' +
                   fixed6(e.q_kvar) + '\n';
        }
    }
    return out;
}

std::string summary_json(const NetworkCase& net, const std::vector<EnvelopeResult>& results) {
    ordered_json doc;
    doc["network"] = net.name;
    doc["periods"] = net.horizon();
    doc["period_hours"] = net.base.period_hours;
    int gen_phases = 0;
    for (const auto& g : net.generators) gen_phases += g.phases.count();
    doc["generator_phases"] = gen_phases;
    doc["scenarios"] = ordered_json::array();
    for (const auto& r : results) {
        ordered_json s;
        s["scenario"] = r.spec.scenario;
        s["objective"] = to_string(r.spec.objective);
        s["constraints"] = scenario_constraints(r.spec.scenario).to_string();
        s["active_energy_kwh"] = round9(r.active_kwh);
        s["reactive_energy_kvarh"] = round9(r.reactive_kvarh);
        if (r.spec.objective == Objective::reactive_margin) {
            s["reactive_margin_kvarh"] = round6(r.margin_kvarh);
            s["stage1_active_energy_kwh"] = round6(r.stage1_active_kwh);
        }
        int iterations = 0, nested = 0;
        for (const auto& d : r.diagnostics) {
            iterations += d.iterations;
            nested += d.nested ? 1 : 0;
        }
        s["solves"] = r.diagnostics.size();
        s["iterations"] = iterations;
        s["nested_starts_kept"] = nested;
        ordered_json per = ordered_json::array();
        for (double kw : r.export_kw) per.push_back(round6(kw));
        s["export_kw"] = per;
        doc["scenarios"].push_back(s);
    }
    return doc.dump(2) + "\n";
}

ExportSeries export_series(const EnvelopeResult& result) {
    return {"scenario " + std::to_string(result.spec.scenario), result.export_kw};
}

std::string export_svg(const std::vector<ExportSeries>& series, const std::string& title) {
    const double W = 720, H = 420, left = 70, right = 150, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    std::size_t n = 0;
    double ymax = 0.0;
    for (const auto& s : series) {
        n = std::max(n, s.kw.size());
        for (double v : s.kw) ymax = std::max(ymax, v);
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double xspan = n > 1 ? double(n - 1) : 1.0;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = top + ph - ph * k / 4.0;
        o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed6(ymax * k / 4.0)
          << "</text>\n";
    }
    for (std::size_t t = 0; t < n; t += std::max<std::size_t>(1, n / 8)) {
        const double x = left + pw * double(t) / xspan;
        o << "<text x=\"" << x << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << t << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">period</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\">export (kW)</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* c = colors[i % 6];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (std::size_t t = 0; t < series[i].kw.size(); ++t) {
            const double x = left + pw * double(t) / xspan;
            const double y = top + ph - ph * series[i].kw[t] / ymax;
            o << (t ? " " : "") << x << ',' << y;
        }
        o << "\"/>\n";
        const double ly = top + 10 + 18 * double(i);
        o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
          << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << series[i].label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<std::filesystem::path> emit_results(const NetworkCase& net, const std::vector<EnvelopeResult>& results,
                                                const std::filesystem::path& out_dir, const RunRecord& record) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());

    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& text) {
        write_text_file(out_dir / name, text);
        written.push_back(out_dir / name);
    };
    put("envelopes.csv", envelopes_csv(net, results));
    put("summary.json", summary_json(net, results));

    std::vector<ExportSeries> all;
    for (const auto& r : results) {
        all.push_back(export_series(r));
        put("export_s" + std::to_string(r.spec.scenario) + ".svg",
            export_svg({all.back()}, net.name + ": export, scenario " + std::to_string(r.spec.scenario)));
    }
    if (results.size() > 1) put("export_all.svg", export_svg(all, net.name + ": export per scenario"));

    ordered_json m;
    m["tool"] = "doe";
    m["version"] = DOE_VERSION;
    m["created_utc"] = utc_timestamp();
    m["inputs"] = ordered_json::array();
    m["inputs"].push_back(file_record("network", record.network));
    if (!record.loads.empty()) m["inputs"].push_back(file_record("loads", record.loads));
    m["scenarios"] = ordered_json::array();
    for (const auto& r : results)
        m["scenarios"].push_back({{"scenario", r.spec.scenario}, {"objective", to_string(r.spec.objective)}});
    const auto& so = record.options.solver;
    m["solver"] = {{"tol_kkt", so.tol_kkt},           {"max_iter", so.max_iter},
                   {"mu_init", so.mu_init},           {"mu_shrink", so.mu_shrink},
                   {"step_fraction", so.step_fraction}, {"regularization_min", so.regularization_min},
                   {"infeasibility_tol", so.infeasibility_tol}};
    m["runner"] = {{"nested_start", record.options.nested_start},
                   {"active_band", record.options.active_band},
                   {"free_active", record.options.free_active}};
    m["outputs"] = ordered_json::array();
    for (const auto& p : written) {
        auto rec = file_record("output", p);
        rec["path"] = p.filename().string();  // relative to the output directory
        m["outputs"].push_back(rec);
    }
    put("manifest.json", m.dump(2) + "\n");
    return written;
}

std::vector<EnvelopeRow> parse_envelopes_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("envelopes CSV: empty file");
    const auto header = split(line);
    const std::vector<std::string> expect{"scenario", "generator_id", "phase", "period", "p_kw", "q_kvar"};
    if (header != expect) throw InputError("envelopes CSV: unexpected header '" + line + "'");
    std::vector<EnvelopeRow> rows;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto c = split(line);
        if (c.size() != 6) throw InputError("envelopes CSV line " + std::to_string(n) + ": expected 6 fields");
        EnvelopeRow r;
        r.scenario = parse_number<int>(c[0], n);
        r.generator = c[1];
        r.phase = c[2];
        r.period = parse_number<int>(c[3], n);
        r.p_kw = parse_number<double>(c[4], n);
        r.q_kvar = parse_number<double>(c[5], n);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace doe

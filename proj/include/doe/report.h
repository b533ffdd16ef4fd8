#pragma once

// Output files of a run: envelopes.csv, summary.json, manifest.json and SVG
// plots of the aggregate export per period.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "doe/envelope.h"
#include "doe/netmodel.h"

namespace doe {

/// Where the inputs came from and how the run was configured.
struct RunRecord {
    std::filesystem::path network;
    std::filesystem::path loads;  // empty when profiles are inline
    RunOptions options;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// scenario,generator_id,phase,period,p_kw,q_kvar with 6 decimals.
std::string envelopes_csv(const NetworkCase& net, const std::vector<EnvelopeResult>& results);

/// Daily totals per scenario, one entry per result.
std::string summary_json(const NetworkCase& net, const std::vector<EnvelopeResult>& results);

struct ExportSeries {
    std::string label;
    std::vector<double> kw;  // per period
};

/// Line plot, one polyline per series.
std::string export_svg(const std::vector<ExportSeries>& series, const std::string& title);

/// Aggregate export series of a result, labelled "scenario N".
ExportSeries export_series(const EnvelopeResult& result);

/// Writes all output files into `out_dir` (created when missing). Returns the
/// paths written. Throws std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_results(const NetworkCase& net, const std::vector<EnvelopeResult>& results,
                                                const std::filesystem::path& out_dir, const RunRecord& record);

/// One parsed envelopes.csv line.
struct EnvelopeRow {
    int scenario = 0;
    std::string generator;
    std::string phase;
    int period = 0;
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

/// Parses envelopes.csv. Throws InputError on malformed content.
std::vector<EnvelopeRow> parse_envelopes_csv(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace doe

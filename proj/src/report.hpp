// Deterministic artifact serialization: JSON report envelopes with a
// versioned schema and config hash, RFC 4180 CSV tables, and minimal SVG 1.1
// line plots.  Everything here is byte-stable for identical inputs: fixed
// number formatting, insertion-ordered JSON keys, no timestamps or locale
// dependence.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ws::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "wavescope-report/1";
inline constexpr const char* kConfigSchema = "wavescope-config/1";

// FNV-1a 64-bit hash of a byte string, rendered as fixed-width hex.
std::uint64_t fnv1a(const std::string& bytes);
std::string fnv1a_hex(const std::string& bytes);

// Fixed %.17g rendering used by CSV cells (round-trips doubles exactly).
std::string format_double(double value);

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF records, quote-doubling, '.' decimal)

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& table);

// ---------------------------------------------------------------------------
// SVG 1.1 line plots: one polyline per series over a shared linear frame.

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);

// ---------------------------------------------------------------------------
// Report envelope

// One declared assertion outcome; failed assertions drive the exit status.
struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

Json assertion_json(const Assertion& a);

// Envelope with schema version, command, config echo and hash, results, and
// the assertion list.
Json report_envelope(const std::string& command, const Json& config, const Json& results,
                     const std::vector<Assertion>& assertions);

// ---------------------------------------------------------------------------
// Files

void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ws::report

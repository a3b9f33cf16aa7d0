#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ws::report {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fnv1a_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string(buf);
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf);
}

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\r\n") != std::string::npos;
}

std::string csv_field(const std::string& field) {
    if (!needs_quoting(field)) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

void append_record(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_field(fields[i]);
    }
    out += "\r\n";
}

}  // namespace

std::string to_csv(const CsvTable& table) {
    std::string out;
    append_record(out, table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw std::invalid_argument("to_csv: row width differs from the header");
        append_record(out, row);
    }
    return out;
}

namespace {

struct Frame {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    static constexpr double width = 640.0, height = 400.0;
    static constexpr double left = 60.0, right = 20.0, top = 40.0, bottom = 40.0;

    double px(double x) const {
        return left + (x - x_min) / (x_max - x_min) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
    }
};

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
    Frame frame;
    bool any = false;
    for (const Series& s : series) {
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("line_plot_svg: series x/y size mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!any) {
                frame.x_min = frame.x_max = s.x[i];
                frame.y_min = frame.y_max = s.y[i];
                any = true;
            } else {
                frame.x_min = std::min(frame.x_min, s.x[i]);
                frame.x_max = std::max(frame.x_max, s.x[i]);
                frame.y_min = std::min(frame.y_min, s.y[i]);
                frame.y_max = std::max(frame.y_max, s.y[i]);
            }
        }
    }
    if (!any) {
        frame.x_min = frame.y_min = 0.0;
        frame.x_max = frame.y_max = 1.0;
    }
    if (frame.x_max - frame.x_min < 1e-300) frame.x_max = frame.x_min + 1.0;
    if (frame.y_max - frame.y_min < 1e-300) frame.y_max = frame.y_min + 1.0;

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" "
           "height=\"400\" viewBox=\"0 0 640 400\">\n"
        << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n"
        << "  <text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"14\">"
        << escape_xml(title) << "</text>\n"
        << "  <line x1=\"" << coord(Frame::left) << "\" y1=\"" << coord(400.0 - Frame::bottom)
        << "\" x2=\"" << coord(640.0 - Frame::right) << "\" y2=\""
        << coord(400.0 - Frame::bottom) << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << coord(Frame::left) << "\" y1=\"" << coord(Frame::top)
        << "\" x2=\"" << coord(Frame::left) << "\" y2=\"" << coord(400.0 - Frame::bottom)
        << "\" stroke=\"black\"/>\n"
        << "  <text x=\"320\" y=\"392\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"12\">"
        << escape_xml(x_label) << " [" << format_double(frame.x_min) << ", "
        << format_double(frame.x_max) << "]</text>\n"
        << "  <text x=\"14\" y=\"200\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"12\" transform=\"rotate(-90 14 200)\">"
        << escape_xml(y_label) << " [" << format_double(frame.y_min) << ", "
        << format_double(frame.y_max) << "]</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        svg << "  <polyline fill=\"none\" stroke=\"" << kColors[k % 6]
            << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!first) svg << ' ';
            svg << coord(frame.px(s.x[i])) << ',' << coord(frame.py(s.y[i]));
            first = false;
        }
        svg << "\"/>\n";
        svg << "  <text x=\"" << coord(640.0 - Frame::right - 4.0) << "\" y=\""
            << coord(Frame::top + 16.0 * static_cast<double>(k + 1))
            << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" fill=\""
            << kColors[k % 6] << "\">" << escape_xml(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

Json assertion_json(const Assertion& a) {
    Json j;
    j["name"] = a.name;
    j["passed"] = a.passed;
    j["detail"] = a.detail;
    return j;
}

Json report_envelope(const std::string& command, const Json& config, const Json& results,
                     const std::vector<Assertion>& assertions) {
    Json doc;
    doc["schema"] = kReportSchema;
    doc["command"] = command;
    doc["config_hash"] = fnv1a_hex(config.dump());
    doc["config"] = config;
    doc["results"] = results;
    Json list = Json::array();
    std::size_t failures = 0;
    for (const Assertion& a : assertions) {
        list.push_back(assertion_json(a));
        if (!a.passed) ++failures;
    }
    doc["assertions"] = list;
    doc["failures"] = failures;
    return doc;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_file: cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_file: short write to " + path.string());
}

}  // namespace ws::report

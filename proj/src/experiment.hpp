// JSON-configured experiment runner.  One invocation parses a config,
// dispatches to a command handler (simulate | dn | linearize | gauge-check |
// trace | frames | coeffs | recover | time-independence), evaluates the
// command's declared assertions, and buffers deterministic artifacts (a JSON
// report plus command-specific CSV/SVG files).  Nothing touches the
// filesystem until write_artifacts, so a failed run leaves no partial output.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "report.hpp"

namespace ws::experiment {

// Config schema violation, carrying the JSON-pointer path of the offending
// (or missing) field.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string pointer, const std::string& what)
        : std::runtime_error(what + " (at " + (pointer.empty() ? "/" : pointer) + ")"),
          pointer_(std::move(pointer)) {}

    const std::string& pointer() const { return pointer_; }

  private:
    std::string pointer_;
};

// Command-line overrides applied on top of the config document.
struct Overrides {
    std::optional<std::string> command;   // must match the config when both given
    std::optional<std::string> out_dir;
    std::optional<int> grid_refine;       // gauge-check: halve the ladder N more times
    std::optional<unsigned> seed;
    bool strict = false;
};

struct Artifact {
    std::string name;   // file name relative to the output directory
    std::string bytes;
};

struct RunReport {
    report::Json document;            // the full JSON report
    std::vector<Artifact> artifacts;  // includes report.json
    std::size_t failures = 0;         // failed declared assertions
    std::string out_dir;              // resolved output directory
};

// Parses, validates, dispatches, and buffers artifacts.
/// Throws ConfigError on schema violations; module errors propagate typed.
RunReport run_experiment(const std::string& config_text, const Overrides& overrides = {});

// Writes every buffered artifact under report.out_dir (created if needed).
/// Throws std::runtime_error on I/O failure.
void write_artifacts(const RunReport& report);

// The command names run_experiment accepts.
const std::vector<std::string>& command_names();

}  // namespace ws::experiment

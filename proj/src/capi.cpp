#include "wavescope/wavescope.h"

#include <optional>
#include <stdexcept>
#include <string>

#include "experiment.hpp"
#include "solver.hpp"

struct ws_experiment {
    std::string config;
    ws::experiment::Overrides overrides;
    std::optional<ws::experiment::RunReport> report;
    std::string report_text;
    std::string last_error;
};

namespace {

constexpr const char* kVersion = "0.1.0";

// Runs `body`, mapping exceptions onto status codes and recording the message.
template <typename F>
ws_status guarded(ws_experiment* exp, F&& body, ws_status io_status = WS_ERR_NUMERICS) {
    try {
        body();
        exp->last_error.clear();
        return WS_OK;
    } catch (const ws::experiment::ConfigError& e) {
        exp->last_error = e.what();
        return WS_ERR_CONFIG;
    } catch (const std::invalid_argument& e) {
        exp->last_error = e.what();
        return WS_ERR_NUMERICS;
    } catch (const std::domain_error& e) {
        exp->last_error = e.what();
        return WS_ERR_NUMERICS;
    } catch (const std::runtime_error& e) {
        // Solver divergence, degenerate geometry, recovery failures; for the
        // artifact writer this is an I/O failure instead.
        exp->last_error = e.what();
        return io_status;
    } catch (const std::exception& e) {
        exp->last_error = e.what();
        return WS_ERR_INTERNAL;
    } catch (...) {
        exp->last_error = "unknown error";
        return WS_ERR_INTERNAL;
    }
}

}  // namespace

extern "C" {

const char* ws_version(void) { return kVersion; }

const char* ws_status_name(ws_status status) {
    switch (status) {
        case WS_OK: return "WS_OK";
        case WS_ERR_INVALID_ARGUMENT: return "WS_ERR_INVALID_ARGUMENT";
        case WS_ERR_CONFIG: return "WS_ERR_CONFIG";
        case WS_ERR_NUMERICS: return "WS_ERR_NUMERICS";
        case WS_ERR_IO: return "WS_ERR_IO";
        case WS_ERR_INTERNAL: return "WS_ERR_INTERNAL";
    }
    return "WS_ERR_UNKNOWN";
}

const char* ws_command_names(void) {
    static const std::string joined = [] {
        std::string out;
        for (const auto& name : ws::experiment::command_names())
            out += (out.empty() ? "" : " ") + name;
        return out;
    }();
    return joined.c_str();
}

ws_status ws_experiment_create(const char* config_json, ws_experiment** out) {
    if (!config_json || !out) return WS_ERR_INVALID_ARGUMENT;
    *out = nullptr;
    try {
        auto* exp = new ws_experiment;
        exp->config = config_json;
        *out = exp;
        return WS_OK;
    } catch (...) {
        return WS_ERR_INTERNAL;
    }
}

void ws_experiment_destroy(ws_experiment* exp) { delete exp; }

ws_status ws_experiment_set_command(ws_experiment* exp, const char* command) {
    if (!exp || !command) return WS_ERR_INVALID_ARGUMENT;
    exp->overrides.command = command;
    return WS_OK;
}

ws_status ws_experiment_set_out_dir(ws_experiment* exp, const char* dir) {
    if (!exp || !dir) return WS_ERR_INVALID_ARGUMENT;
    exp->overrides.out_dir = dir;
    return WS_OK;
}

ws_status ws_experiment_set_seed(ws_experiment* exp, unsigned seed) {
    if (!exp) return WS_ERR_INVALID_ARGUMENT;
    exp->overrides.seed = seed;
    return WS_OK;
}

ws_status ws_experiment_set_grid_refine(ws_experiment* exp, int levels) {
    if (!exp || levels < 0 || levels > 6) return WS_ERR_INVALID_ARGUMENT;
    exp->overrides.grid_refine = levels;
    return WS_OK;
}

ws_status ws_experiment_set_strict(ws_experiment* exp, int strict) {
    if (!exp) return WS_ERR_INVALID_ARGUMENT;
    exp->overrides.strict = strict != 0;
    return WS_OK;
}

ws_status ws_experiment_run(ws_experiment* exp) {
    if (!exp) return WS_ERR_INVALID_ARGUMENT;
    exp->report.reset();
    exp->report_text.clear();
    return guarded(exp, [exp] {
        exp->report = ws::experiment::run_experiment(exp->config, exp->overrides);
        exp->report_text = exp->report->document.dump(2);
        exp->report_text.push_back('\n');
    });
}

const char* ws_experiment_report(const ws_experiment* exp) {
    if (!exp || !exp->report) return nullptr;
    return exp->report_text.c_str();
}

long ws_experiment_failures(const ws_experiment* exp) {
    if (!exp || !exp->report) return -1;
    return static_cast<long>(exp->report->failures);
}

ws_status ws_experiment_write_artifacts(const ws_experiment* exp) {
    if (!exp) return WS_ERR_INVALID_ARGUMENT;
    auto* mut = const_cast<ws_experiment*>(exp);
    if (!exp->report) {
        mut->last_error = "no report: run the experiment first";
        return WS_ERR_INVALID_ARGUMENT;
    }
    return guarded(mut, [exp] { ws::experiment::write_artifacts(*exp->report); }, WS_ERR_IO);
}

const char* ws_experiment_last_error(const ws_experiment* exp) {
    return exp ? exp->last_error.c_str() : "";
}

}  // extern "C"

// wavescope: JSON-configured experiments for the damped nonlinear wave
// laboratory, driven entirely through the C API of the shared library.
//
// Exit codes: 0 all declared assertions passed, 1 assertion failures,
// 2 config error, 3 numerical failure, 4 I/O failure, 5 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavescope/wavescope.h"

namespace {

int exit_code_for(ws_status status) {
    switch (status) {
        case WS_OK: return 0;
        case WS_ERR_CONFIG: return 2;
        case WS_ERR_NUMERICS: return 3;
        case WS_ERR_IO: return 4;
        case WS_ERR_INVALID_ARGUMENT:
        case WS_ERR_INTERNAL: return 5;
    }
    return 5;
}

// Machine-readable failure record on stdout, human summary on stderr.
int fail(ws_status status, const std::string& message) {
    nlohmann::ordered_json record;
    record["schema"] = "wavescope-error/1";
    record["status"] = ws_status_name(status);
    record["message"] = message;
    std::cout << record.dump(2) << "\n";
    std::cerr << "wavescope: " << message << "\n";
    return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavescope: gauge, linearization, and recovery experiments for "
                 "damped nonlinear acoustic waves"};
    app.set_version_flag("--version", ws_version());

    std::string command;
    std::string config_path;
    std::string out_dir;
    int grid_refine = -1;
    long long seed = -1;
    bool strict = false;
    bool no_artifacts = false;

    app.add_option("command", command, std::string("one of: ") + ws_command_names())
        ->required();
    app.add_option("--config", config_path, "path to the JSON config")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--grid-refine", grid_refine, "extra grid-halving levels (gauge-check)")
        ->check(CLI::Range(0, 6));
    app.add_option("--seed", seed, "random seed (overrides the config)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", strict, "enable the tightened assertion set");
    app.add_flag("--no-artifacts", no_artifacts, "print the report without writing files");

    CLI11_PARSE(app, argc, argv);

    std::ifstream in(config_path, std::ios::binary);
    if (!in)
        return fail(WS_ERR_IO, "cannot open config file '" + config_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string config_text = buffer.str();

    ws_experiment* exp = nullptr;
    ws_status st = ws_experiment_create(config_text.c_str(), &exp);
    if (st != WS_OK)
        return fail(st, "cannot allocate the experiment handle");

    ws_experiment_set_command(exp, command.c_str());
    if (!out_dir.empty()) ws_experiment_set_out_dir(exp, out_dir.c_str());
    if (grid_refine >= 0) ws_experiment_set_grid_refine(exp, grid_refine);
    if (seed >= 0) ws_experiment_set_seed(exp, static_cast<unsigned>(seed));
    if (strict) ws_experiment_set_strict(exp, 1);

    st = ws_experiment_run(exp);
    if (st != WS_OK) {
        const int code = fail(st, ws_experiment_last_error(exp));
        ws_experiment_destroy(exp);
        return code;
    }

    std::cout << ws_experiment_report(exp);
    const long failures = ws_experiment_failures(exp);

    if (!no_artifacts) {
        st = ws_experiment_write_artifacts(exp);
        if (st != WS_OK) {
            const int code = fail(st, ws_experiment_last_error(exp));
            ws_experiment_destroy(exp);
            return code;
        }
    }

    if (failures > 0)
        std::cerr << "wavescope: " << failures << " declared assertion(s) failed\n";
    ws_experiment_destroy(exp);
    return failures > 0 ? 1 : 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "wavescope/wavescope.h"

namespace {

constexpr const char* kCoeffsConfig = R"({
    "schema": "wavescope-config/1",
    "command": "coeffs",
    "phi": 1.5707963267948966,
    "theta": 1.0471975511965976
})";

struct Handle {
    ws_experiment* exp = nullptr;
    explicit Handle(const char* config) { REQUIRE(ws_experiment_create(config, &exp) == WS_OK); }
    ~Handle() { ws_experiment_destroy(exp); }
};

}  // namespace

TEST_CASE("library strings are sane") {
    CHECK(std::strlen(ws_version()) >= 5);
    CHECK(std::string(ws_status_name(WS_OK)) == "WS_OK");
    CHECK(std::string(ws_status_name(WS_ERR_CONFIG)) == "WS_ERR_CONFIG");
    CHECK(std::string(ws_command_names()).find("recover") != std::string::npos);
    CHECK(std::string(ws_command_names()).find("gauge-check") != std::string::npos);
}

TEST_CASE("null arguments are rejected without crashing") {
    CHECK(ws_experiment_create(nullptr, nullptr) == WS_ERR_INVALID_ARGUMENT);
    ws_experiment* exp = nullptr;
    CHECK(ws_experiment_create(kCoeffsConfig, nullptr) == WS_ERR_INVALID_ARGUMENT);
    CHECK(ws_experiment_run(nullptr) == WS_ERR_INVALID_ARGUMENT);
    CHECK(ws_experiment_report(nullptr) == nullptr);
    CHECK(ws_experiment_failures(nullptr) == -1);
    CHECK(std::string(ws_experiment_last_error(nullptr)).empty());
    ws_experiment_destroy(nullptr);  // must be a no-op
    (void)exp;
}

TEST_CASE("a full lifecycle runs a command and exposes the report") {
    Handle h(kCoeffsConfig);
    CHECK(ws_experiment_failures(h.exp) == -1);
    CHECK(ws_experiment_report(h.exp) == nullptr);

    REQUIRE(ws_experiment_run(h.exp) == WS_OK);
    CHECK(ws_experiment_failures(h.exp) == 0);

    const char* text = ws_experiment_report(h.exp);
    REQUIRE(text != nullptr);
    const auto doc = nlohmann::json::parse(text);
    CHECK(doc.at("schema") == "wavescope-report/1");
    CHECK(doc.at("command") == "coeffs");
    CHECK(doc.at("results").at("i3_closed").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("config failures map to WS_ERR_CONFIG with a message") {
    Handle bad("this is not json");
    CHECK(ws_experiment_run(bad.exp) == WS_ERR_CONFIG);
    CHECK(std::string(ws_experiment_last_error(bad.exp)).find("JSON") != std::string::npos);

    Handle mismatch(kCoeffsConfig);
    REQUIRE(ws_experiment_set_command(mismatch.exp, "frames") == WS_OK);
    CHECK(ws_experiment_run(mismatch.exp) == WS_ERR_CONFIG);
    CHECK(std::string(ws_experiment_last_error(mismatch.exp)).find("/command") !=
          std::string::npos);
}

TEST_CASE("numerical failures map to WS_ERR_NUMERICS") {
    const char* diverging = R"({
        "schema": "wavescope-config/1",
        "command": "simulate",
        "medium": {"n_cells": 64, "beta2": 3.0},
        "source": {"tau": 0.3, "amplitude": 5.0},
        "t_final": 0.5
    })";
    Handle h(diverging);
    CHECK(ws_experiment_run(h.exp) == WS_ERR_NUMERICS);
    CHECK(!std::string(ws_experiment_last_error(h.exp)).empty());
}

TEST_CASE("setter validation") {
    Handle h(kCoeffsConfig);
    CHECK(ws_experiment_set_grid_refine(h.exp, -1) == WS_ERR_INVALID_ARGUMENT);
    CHECK(ws_experiment_set_grid_refine(h.exp, 99) == WS_ERR_INVALID_ARGUMENT);
    CHECK(ws_experiment_set_grid_refine(h.exp, 2) == WS_OK);
    CHECK(ws_experiment_set_command(h.exp, nullptr) == WS_ERR_INVALID_ARGUMENT);
    CHECK(ws_experiment_set_seed(h.exp, 7u) == WS_OK);
    CHECK(ws_experiment_set_strict(h.exp, 1) == WS_OK);
}

TEST_CASE("artifacts are written only after a run") {
    Handle h(kCoeffsConfig);
    CHECK(ws_experiment_write_artifacts(h.exp) == WS_ERR_INVALID_ARGUMENT);

    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "ws_capi_test_out";
    std::filesystem::remove_all(dir);
    REQUIRE(ws_experiment_set_out_dir(h.exp, dir.string().c_str()) == WS_OK);
    REQUIRE(ws_experiment_run(h.exp) == WS_OK);
    REQUIRE(ws_experiment_write_artifacts(h.exp) == WS_OK);
    CHECK(std::filesystem::exists(dir / "report.json"));
    std::filesystem::remove_all(dir);
}

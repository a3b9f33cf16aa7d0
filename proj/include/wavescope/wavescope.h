// C interface to the wavescope experiment runner.
//
// Usage: create a handle from a JSON config string, adjust overrides, run,
// then read the JSON report and write the buffered artifacts.  All functions
// are safe to call with NULL handles (they report WS_ERR_INVALID_ARGUMENT);
// every failure leaves a human-readable message on the handle, retrievable
// with ws_experiment_last_error.  Handles are not thread-safe; use one per
// thread.

#ifndef WAVESCOPE_WAVESCOPE_H
#define WAVESCOPE_WAVESCOPE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__) || defined(__clang__)
#define WS_API __attribute__((visibility("default")))
#else
#define WS_API
#endif

typedef enum ws_status {
    WS_OK = 0,
    WS_ERR_INVALID_ARGUMENT = 1,  // NULL handle/pointer or out-of-range setter value
    WS_ERR_CONFIG = 2,            // config parse or schema violation
    WS_ERR_NUMERICS = 3,          // solver/geometry/recovery failure (diverged, degenerate, ...)
    WS_ERR_IO = 4,                // artifact write failure
    WS_ERR_INTERNAL = 5           // anything else
} ws_status;

// Opaque experiment handle.
typedef struct ws_experiment ws_experiment;

// Library version, "major.minor.patch".
WS_API const char* ws_version(void);

// Stable name of a status code ("WS_OK", ...).
WS_API const char* ws_status_name(ws_status status);

// Space-separated list of the accepted command names.
WS_API const char* ws_command_names(void);

// Allocates a handle holding the config text.  The config is validated at run
// time, not here; only allocation and argument checks can fail.  On success
// *out owns the handle until ws_experiment_destroy.
WS_API ws_status ws_experiment_create(const char* config_json, ws_experiment** out);
WS_API void ws_experiment_destroy(ws_experiment* exp);

// Overrides applied on top of the config document (all optional).
WS_API ws_status ws_experiment_set_command(ws_experiment* exp, const char* command);
WS_API ws_status ws_experiment_set_out_dir(ws_experiment* exp, const char* dir);
WS_API ws_status ws_experiment_set_seed(ws_experiment* exp, unsigned seed);
WS_API ws_status ws_experiment_set_grid_refine(ws_experiment* exp, int levels);
WS_API ws_status ws_experiment_set_strict(ws_experiment* exp, int strict);

// Parses, validates, and runs the configured command, buffering the report
// and artifacts on the handle.  Returns WS_OK even when declared assertions
// fail; inspect ws_experiment_failures for that.  Nothing is written to disk.
WS_API ws_status ws_experiment_run(ws_experiment* exp);

// The JSON report of the last successful run (NUL-terminated, owned by the
// handle, valid until the next run or destroy).  NULL before a run.
WS_API const char* ws_experiment_report(const ws_experiment* exp);

// Number of failed declared assertions in the last run, or -1 before a run.
WS_API long ws_experiment_failures(const ws_experiment* exp);

// Writes report.json and the command's CSV/SVG artifacts under the resolved
// output directory (created if needed).
WS_API ws_status ws_experiment_write_artifacts(const ws_experiment* exp);

// Message of the last failure on this handle ("" when none).
WS_API const char* ws_experiment_last_error(const ws_experiment* exp);

#ifdef __cplusplus
}
#endif

#endif  // WAVESCOPE_WAVESCOPE_H

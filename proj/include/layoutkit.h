/* layoutkit — text+layout document-model training toolkit.
 *
 * C interface of the shared library. All heavy lifting happens behind the
 * opaque run handle: open a run from a JSON config file plus optional
 * dotted-path overrides, execute subcommands against it, read back the
 * summary text, and close it. Every entry point returns an lk_status; the
 * failure message of the most recent call on this thread is available via
 * lk_last_error().
 */
#ifndef LAYOUTKIT_H
#define LAYOUTKIT_H

#include <stddef.h>

#if defined(_WIN32)
#define LK_API __declspec(dllexport)
#else
#define LK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lk_status {
    LK_OK = 0,
    /* Invalid configuration, unknown keys, malformed or missing inputs.
     * Matches the CLI exit code. */
    LK_CONFIG_ERROR = 2,
    /* Failures while executing a validated run (divergence, I/O, ...). */
    LK_RUNTIME_ERROR = 3
} lk_status;

typedef struct lk_run lk_run;

LK_API const char* lk_version(void);

/* Thread-local message describing the most recent failure; empty string if
 * the last call on this thread succeeded. The pointer stays valid until the
 * next layoutkit call on the same thread. */
LK_API const char* lk_last_error(void);

/* Loads and validates a run configuration.
 *   config_path  JSON config file; NULL or "" starts from built-in defaults.
 *   overrides    n_overrides dotted-path assignments, e.g. "pretrain.steps=100".
 *   out_dir      output root; NULL defers to $LAYOUTKIT_RUN_DIR, then the
 *                config's run_dir, then "runs".
 * On success *out_run owns the run context (release with lk_run_close). */
LK_API lk_status lk_run_open(const char* config_path, const char* const* overrides,
                             size_t n_overrides, const char* out_dir, lk_run** out_run);

/* Executes one subcommand: "gen-corpus", "pretrain", "finetune", "eval",
 * "robustness", "sweep", or "inspect". Outputs are written under
 * <out_root>/<command>/, which is append-only. When out_text is non-NULL it
 * receives the human-readable summary (free with lk_text_free). */
LK_API lk_status lk_run_exec(lk_run* run, const char* command, char** out_text);

/* The resolved output root of this run. Valid while the run is open. */
LK_API const char* lk_run_out_dir(const lk_run* run);

LK_API void lk_run_close(lk_run* run);

LK_API void lk_text_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* LAYOUTKIT_H */

#include "layoutkit.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "layoutkit/config.hpp"
#include "layoutkit/errors.hpp"
#include "layoutkit/runner.hpp"

struct lk_run {
    layoutkit::RunConfig config;
    std::string out_root;
};

namespace {

thread_local std::string g_last_error;

lk_status fail(lk_status code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <typename Fn>
lk_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LK_OK;
    } catch (const layoutkit::ConfigError& e) {
        return fail(LK_CONFIG_ERROR, e.what());
    } catch (const std::exception& e) {
        return fail(LK_RUNTIME_ERROR, e.what());
    } catch (...) {
        return fail(LK_RUNTIME_ERROR, "unknown error");
    }
}

char* dup_text(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* lk_version(void) { return "0.1.0"; }

const char* lk_last_error(void) { return g_last_error.c_str(); }

lk_status lk_run_open(const char* config_path, const char* const* overrides,
                      size_t n_overrides, const char* out_dir, lk_run** out_run) {
    if (!out_run) return fail(LK_CONFIG_ERROR, "out_run must not be NULL");
    *out_run = nullptr;
    return guarded([&] {
        std::vector<std::string> ovs;
        for (size_t i = 0; i < n_overrides; ++i) {
            if (!overrides || !overrides[i]) {
                throw layoutkit::ConfigError("override " + std::to_string(i) + " is NULL");
            }
            ovs.emplace_back(overrides[i]);
        }
        auto run = std::make_unique<lk_run>();
        run->config = layoutkit::load_run_config(config_path ? config_path : "", ovs);
        run->out_root =
            layoutkit::resolve_run_root(run->config, out_dir ? out_dir : "");
        *out_run = run.release();
    });
}

lk_status lk_run_exec(lk_run* run, const char* command, char** out_text) {
    if (out_text) *out_text = nullptr;
    if (!run) return fail(LK_CONFIG_ERROR, "run handle is NULL");
    if (!command) return fail(LK_CONFIG_ERROR, "command is NULL");
    return guarded([&] {
        const std::string text =
            layoutkit::run_command(run->config, command, run->out_root);
        if (out_text) *out_text = dup_text(text);
    });
}

const char* lk_run_out_dir(const lk_run* run) {
    return run ? run->out_root.c_str() : "";
}

void lk_run_close(lk_run* run) { delete run; }

void lk_text_free(char* text) { std::free(text); }

}  // extern "C"

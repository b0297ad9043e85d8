// Command-line front end. Talks to the core exclusively through the C API in
// layoutkit.h; all behavior lives in the shared library.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layoutkit.h"

namespace {

struct CommonArgs {
    std::string config;
    std::string out_dir;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config, "JSON run configuration file");
    cmd->add_option("-o,--out", args.out_dir,
                    "Output root (default: $LAYOUTKIT_RUN_DIR, then config run_dir, then ./runs)");
    cmd->add_option("-s,--set", args.sets,
                    "Override a config value by dotted path, e.g. --set pretrain.steps=100")
        ->take_all();
}

int execute(const CommonArgs& args, const std::string& command) {
    std::vector<const char*> overrides;
    overrides.reserve(args.sets.size());
    for (const auto& s : args.sets) overrides.push_back(s.c_str());

    lk_run* run = nullptr;
    lk_status st = lk_run_open(args.config.empty() ? nullptr : args.config.c_str(),
                               overrides.data(), overrides.size(),
                               args.out_dir.empty() ? nullptr : args.out_dir.c_str(), &run);
    if (st != LK_OK) {
        std::fprintf(stderr, "layoutkit: %s\n", lk_last_error());
        return static_cast<int>(st);
    }
    char* text = nullptr;
    st = lk_run_exec(run, command.c_str(), &text);
    if (st != LK_OK) {
        std::fprintf(stderr, "layoutkit %s: %s\n", command.c_str(), lk_last_error());
    } else if (text && *text) {
        std::fputs(text, stdout);
    }
    lk_text_free(text);
    lk_run_close(run);
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layoutkit — pre-training and evaluation toolkit for text+layout document models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lk_version()));

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"gen-corpus", "Generate the synthetic labeled corpus (train/dev/test JSONL + stats)"},
        {"pretrain", "Pre-train an encoder on data.train; writes checkpoint.bin and trace.csv"},
        {"finetune", "Fine-tune a checkpoint for entities or classification; keeps the dev-best"},
        {"eval", "Evaluate a fine-tuned checkpoint on a split; writes F1/accuracy reports"},
        {"robustness", "Segment-swap robustness table over robustness.p_swap levels"},
        {"sweep", "Pretrain+finetune grid along one axis (position, strategy, p_mlm, p_mpm)"},
        {"inspect", "Print tokens, 1D positions, boxes, and mask actions for one document"},
    };

    std::vector<std::pair<std::string, CommonArgs>> invocations;
    invocations.reserve(std::size(subs));
    for (const auto& sub : subs) {
        invocations.emplace_back(sub.name, CommonArgs{});
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        CommonArgs& args = invocations.back().second;
        add_common(cmd, args);
        if (std::string(sub.name) == "finetune") {
            cmd->add_option_function<std::string>(
                "--checkpoint",
                [&args](const std::string& v) { args.sets.push_back("finetune.checkpoint=" + v); },
                "Checkpoint to start from (same as --set finetune.checkpoint=...)");
        } else if (std::string(sub.name) == "eval") {
            cmd->add_option_function<std::string>(
                "--checkpoint",
                [&args](const std::string& v) { args.sets.push_back("eval.checkpoint=" + v); },
                "Checkpoint to evaluate");
            cmd->add_option_function<std::string>(
                "--split",
                [&args](const std::string& v) { args.sets.push_back("eval.split=" + v); },
                "Split to evaluate: train, dev, or test");
        } else if (std::string(sub.name) == "robustness") {
            cmd->add_option_function<std::string>(
                "--checkpoint",
                [&args](const std::string& v) { args.sets.push_back("robustness.checkpoint=" + v); },
                "Checkpoint to probe");
        } else if (std::string(sub.name) == "inspect") {
            cmd->add_option_function<std::string>(
                "--doc",
                [&args](const std::string& v) { args.sets.push_back("inspect.doc_id=" + v); },
                "doc_id to inspect");
            cmd->add_flag_function(
                "--json",
                [&args](int64_t) { args.sets.push_back("inspect.json=true"); },
                "Also dump the token/mask table as JSONL into the run directory");
        } else if (std::string(sub.name) == "sweep") {
            cmd->add_option_function<int>(
                "--jobs",
                [&args](int v) { args.sets.push_back("jobs=" + std::to_string(v)); },
                "Worker threads for independent grid points");
        }
        cmd->add_option_function<uint64_t>(
            "--seed", [&args](uint64_t v) { args.sets.push_back("seed=" + std::to_string(v)); },
            "Global seed (same as --set seed=N)");
    }

    CLI11_PARSE(app, argc, argv);

    for (auto& [name, args] : invocations) {
        if (app.get_subcommand(name)->parsed()) return execute(args, name);
    }
    std::fprintf(stderr, "layoutkit: no subcommand\n");
    return 2;
}

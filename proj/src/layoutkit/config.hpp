#pragma once

#include <string>
#include <vector>

#include "layoutkit/synth.hpp"
#include "layoutkit/train.hpp"

namespace layoutkit {

// Fully resolved run configuration. Loaded from one JSON document; CLI
// overrides are dotted paths applied before validation; unknown keys are
// rejected with the offending path.
struct RunConfig {
    uint64_t seed = 1;
    std::string run_dir;  // output root; may be overridden by env/CLI
    int jobs = 1;

    struct Data {
        std::string train;
        std::string dev;
        std::string test;
    } data;

    GenSpec corpus;
    PretrainConfig pretrain;  // pretrain.model carries the architecture

    FinetuneConfig finetune;
    std::string finetune_checkpoint;

    std::string eval_checkpoint;
    std::string eval_split = "test";
    FinetuneTask eval_task = FinetuneTask::kEntities;

    std::string robustness_checkpoint;
    std::vector<double> robustness_p_swap = {0.0, 0.1, 0.2, 0.3};
    uint64_t robustness_seed = 0;

    SweepConfig sweep;

    struct Inspect {
        std::string corpus;  // path; falls back to data.train
        std::string doc_id;  // empty: use doc_index
        int doc_index = 0;
        OneDMode one_d = OneDMode::kLocal;
        TwoDMode two_d = TwoDMode::kSegment;
        std::string mask = "none";  // none | mlm | mpm | both
        double p_mlm = 0.25;
        double p_mpm = 0.15;
        uint64_t seed = 0;
        bool json = false;
    } inspect;

    // The resolved document, reusable as a --config file for exact reruns.
    std::string resolved_json;
};

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides);

// Parses a config document given as text (path "<inline>" in errors).
RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides);

}  // namespace layoutkit

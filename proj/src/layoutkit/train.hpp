#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "layoutkit/masking.hpp"
#include "layoutkit/metrics.hpp"
#include "layoutkit/model.hpp"
#include "layoutkit/optim.hpp"
#include "layoutkit/synth.hpp"

namespace layoutkit {

struct PretrainConfig {
    OneDMode one_d = OneDMode::kLocal;
    TwoDMode two_d = TwoDMode::kSegment;
    MlmStrategy strategy = MlmStrategy::kWwmLam;
    bool enable_mpm = true;
    double p_mlm = 0.25;
    double p_mpm = 0.15;
    double lambda = 1.0;
    int steps = 600;
    int batch_size = 8;
    AdamConfig adam{};
    uint64_t seed = 1;
    ModelConfig model;  // vocab_size/num_tags/num_classes are filled from data

    void validate() const;
};

struct TraceRow {
    int step = 0;
    double mlm = 0.0;
    double mpm = 0.0;
    double total = 0.0;
};

std::string trace_to_csv(const std::vector<TraceRow>& trace);

struct PretrainResult {
    Checkpoint checkpoint;
    std::vector<TraceRow> trace;
};

// Pre-trains from random initialization on the corpus; the checkpoint
// manifest records position modes, strategy, probabilities, seed, vocab, and
// label schema so downstream runs stay consistent.
PretrainResult pretrain(const PretrainConfig& cfg, const std::vector<Document>& corpus,
                        const std::vector<std::string>& entity_tags,
                        const std::vector<std::string>& doc_classes);

// Builds the checkpoint a fine-tune-from-scratch baseline starts from:
// identical manifest, freshly initialized weights, no pre-training steps.
Checkpoint random_checkpoint(const PretrainConfig& cfg, const std::vector<Document>& corpus,
                             const std::vector<std::string>& entity_tags,
                             const std::vector<std::string>& doc_classes);

// A checkpoint unpacked for running tasks: encoder plus everything needed to
// featurize documents the same way its training run did.
struct TaskModel {
    LayoutEncoder encoder;
    OneDMode one_d = OneDMode::kLocal;
    TwoDMode two_d = TwoDMode::kSegment;
    Vocabulary vocab;
    BioLabels bio;
    std::vector<std::string> doc_classes;
    std::string meta_json;

    static TaskModel from_checkpoint(const Checkpoint& ckpt);
    Checkpoint to_checkpoint() const;

    TokenSequence featurize(const Document& doc) const;
};

enum class FinetuneTask { kEntities, kClassification };
FinetuneTask parse_task(const std::string& s);

struct FinetuneConfig {
    FinetuneTask task = FinetuneTask::kEntities;
    int steps = 300;
    int batch_size = 8;
    AdamConfig adam{};
    int eval_every = 50;
    int max_train_docs = 0;  // 0 = use the whole labeled set
    uint64_t seed = 1;

    void validate() const;
};

struct FinetuneResult {
    TaskModel model;  // dev-best weights
    std::vector<std::pair<int, double>> dev_curve;  // (step, dev metric)
    double best_dev = 0.0;
    int best_step = -1;
};

FinetuneResult finetune(const FinetuneConfig& cfg, const Checkpoint& start,
                        const std::vector<Document>& train_docs,
                        const std::vector<Document>& dev_docs);

// Per-word argmax of first-token logits, BIO-decoded with repairs.
std::vector<EntitySpan> predict_entities(const TaskModel& model, const Document& doc);
std::string predict_class(const TaskModel& model, const Document& doc);

// Entity evaluation at both levels over a document set.
struct EntityEval {
    EvalReport word_level;
    EvalReport entity_level;
};
EntityEval evaluate_entities(const TaskModel& model, const std::vector<Document>& docs);
EvalReport evaluate_classification(const TaskModel& model, const std::vector<Document>& docs);

// Reverses the segment order of randomly chosen multi-segment lines in the
// serialization; geometry, words, and local 1D positions are untouched.
// Line draws are coupled across p_swap values (a line swapped at p is also
// swapped at any p' > p) for low-variance trend comparisons.
Document segment_swap(const Document& doc, double p_swap, uint64_t seed);

RobustnessTable robustness_report(const TaskModel& model, const std::vector<Document>& docs,
                                  const std::vector<double>& p_swap_levels, uint64_t seed);

// ---- sweeps ----

enum class SweepAxis { kPosition, kStrategy, kPMlm, kPMpm };
SweepAxis parse_sweep_axis(const std::string& s);

struct SweepPoint {
    std::string name;
    PretrainConfig cfg;
};

// Expands a grid along one axis of the base config. For kPosition the grid
// is the four 1D/2D combinations; for kStrategy the five pre-training
// settings (naive, wwm, wwm+lam, wwm+mpm, wwm+lam+mpm); for the probability
// axes the numeric grid values.
std::vector<SweepPoint> sweep_points(SweepAxis axis, const std::vector<double>& grid,
                                     const PretrainConfig& base);

struct SweepRow {
    std::string name;
    std::vector<double> seed_scores;  // entity-level overall F1 per fine-tune seed
    double mean = 0.0;
    double stddev = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string table() const;
    std::string to_csv() const;
    std::string to_json() const;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::kStrategy;
    std::vector<double> grid;
    int finetune_seeds = 5;
    int jobs = 1;
};

SweepResult ablation_sweep(const SweepConfig& sweep, const PretrainConfig& base,
                           const FinetuneConfig& ft, const CorpusSplits& corpus,
                           const std::vector<std::string>& entity_tags,
                           const std::vector<std::string>& doc_classes);

// Runs fn(0..n-1) across `jobs` worker threads; items are independent.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace layoutkit

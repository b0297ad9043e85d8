#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "layoutkit/geometry.hpp"
#include "layoutkit/masking.hpp"
#include "layoutkit/tensor.hpp"
#include "layoutkit/tokenize.hpp"

namespace layoutkit {

struct ModelConfig {
    int vocab_size = 0;           // filled from the vocabulary
    int hidden_size = 128;
    int layers = 2;
    int heads = 4;
    int ffn_size = 256;
    int max_len = 512;
    int max_1d_position = 512;
    int coordinate_bins = kCoordBins;
    int relative_bias_buckets = 32;  // per axis (1D, x-center, y-center)
    double dropout = 0.1;
    int num_tags = 0;             // BIO label count for the token classifier
    int num_classes = 0;          // document classes

    void validate() const;
};

// All learnable tensors, iterable in a fixed order for the optimizer and the
// checkpoint writer.
class Parameters {
public:
    Parameters() = default;
    static Parameters init(const ModelConfig& cfg, uint64_t seed);

    ad::Tensor& get(const std::string& name);
    const ad::Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;
    ad::Tensor& add(const std::string& name, ad::Tensor t);

    std::vector<std::pair<std::string, ad::Tensor>>& items() { return items_; }
    const std::vector<std::pair<std::string, ad::Tensor>>& items() const { return items_; }

    void zero_grads();
    void check_finite() const;  // throws RuntimeError naming the parameter
    Parameters clone() const;   // deep copy of values, fresh grads

private:
    std::vector<std::pair<std::string, ad::Tensor>> items_;
    std::map<std::string, size_t> index_;
};

// Signed log-scale bucketing of a relative offset. Offsets up to
// num_buckets/4 in magnitude get exact buckets per sign; beyond that the
// bucket grows logarithmically up to max_offset and clamps at the extremes.
int relative_bucket(int offset, int num_buckets, int max_offset);

struct EncodeOptions {
    bool training = false;
    uint64_t dropout_seed = 0;
    int valid_len = -1;  // < 0: whole sequence; otherwise mask attention beyond it
};

class LayoutEncoder {
public:
    LayoutEncoder() = default;
    LayoutEncoder(const ModelConfig& cfg, Parameters params)
        : cfg_(cfg), params_(std::move(params)) {}

    const ModelConfig& config() const { return cfg_; }
    Parameters& params() { return params_; }
    const Parameters& params() const { return params_; }

    // Token + 1D + 2D embeddings, layer-normed (and dropped out in training).
    ad::Tensor embed_inputs(const TokenSequence& seq, const EncodeOptions& opt = {}) const;

    // Additive per-head attention bias [heads, L, L] from relative 1D
    // positions and box-center offsets.
    ad::Tensor attention_bias(const TokenSequence& seq) const;

    // Full pre-norm transformer stack; returns contextual states [L, hidden].
    ad::Tensor encode(const TokenSequence& seq, const EncodeOptions& opt = {}) const;

    // Heads
    ad::Tensor mlm_logits(const ad::Tensor& states) const;                    // [L, V]
    ad::Tensor mpm_predict(const ad::Tensor& states,
                           const std::vector<int>& masked_positions) const;   // [N, 4] boxes
    ad::Tensor tag_logits(const ad::Tensor& states) const;                    // [L, num_tags]
    ad::Tensor class_logits(const ad::Tensor& states) const;                  // [1, num_classes]

private:
    ModelConfig cfg_;
    Parameters params_;
};

// ---- losses ----

// Mean cross entropy over labeled positions (labels[i] == kIgnoreLabel
// skipped). Errors when nothing is labeled.
ad::Tensor cross_entropy_mean(const ad::Tensor& logits, const std::vector<int>& labels);

ad::Tensor mlm_loss(const ad::Tensor& mlm_logits, const std::vector<int>& labels);

// Negative mean GIoU of predicted vs. truth boxes, both [N, 4] in [0,1].
// In [-1, 1]; -1 exactly when every prediction matches its truth.
ad::Tensor giou_loss(const ad::Tensor& predicted, const ad::Tensor& truth);

ad::Tensor total_loss(const ad::Tensor& l_mlm, const ad::Tensor& l_mpm, double lambda);

// ---- checkpointing ----

struct Checkpoint {
    ModelConfig config;
    Parameters params;
    std::string manifest_json;  // config + run metadata, format-versioned
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

ad::Tensor boxes_to_tensor(const std::vector<BBox>& boxes);

}  // namespace layoutkit

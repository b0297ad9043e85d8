#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layoutkit/tokenize.hpp"

namespace layoutkit {

enum class MlmStrategy { kNaive, kWwm, kWwmLam };

MlmStrategy parse_mlm_strategy(const std::string& s);
std::string to_string(MlmStrategy s);

enum class MaskAction { kNone, kReplaceWithMask, kReplaceWithRandom, kKeep };

// Ignore marker for label vectors (positions not contributing to a loss).
inline constexpr int kIgnoreLabel = -1;

struct MlmPlan {
    std::vector<int> masked_token_indices;   // ascending
    std::vector<MaskAction> actions;         // per token; kNone when unmasked
    std::vector<int> labels;                 // per token; original id or kIgnoreLabel
    MlmStrategy strategy = MlmStrategy::kWwm;

    bool is_masked_token(int t) const { return labels[static_cast<size_t>(t)] != kIgnoreLabel; }
    std::vector<int> masked_word_ids(const TokenSequence& seq) const;
};

// Fractions for how masked positions are rewritten: MASK token / random
// vocab id / original id kept. Assigned per whole word.
struct ReplacementPolicy {
    double mask_fraction = 0.8;
    double random_fraction = 0.1;
    double keep_fraction = 0.1;

    void validate() const;
};

// Draws the MLM mask plan. naive masks tokens independently; wwm masks whole
// words; wwm_lam raises the probability of each segment's first and last
// word to min(3*p, 1). A word that is both first and last gets the elevated
// probability once.
MlmPlan plan_mlm(const TokenSequence& seq, MlmStrategy strategy, double p_mlm, uint64_t seed);

struct MaskedSequence {
    TokenSequence seq;        // tokens rewritten; positions and boxes unchanged
    std::vector<int> labels;  // original ids at masked positions, kIgnoreLabel elsewhere
};

// Rewrites masked positions per the policy, annotating the plan with the
// chosen per-word actions. Random replacements draw non-special vocab ids.
MaskedSequence apply_mlm(const TokenSequence& seq, MlmPlan& plan, const ReplacementPolicy& policy,
                         int vocab_size, uint64_t seed);

struct MpmSelection {
    std::vector<int> selected_word_ids;  // pairwise distinct
    std::vector<int> pseudo_heights;     // one distinct value in [1, kCoordBins] per word
    std::vector<BBox> target_boxes;      // original word boxes in [0,1]
};

// Selects words for 2D-position masking: each word independently with
// p_mpm, skipping duplicates and any word in `excluded_word_ids` (the MLM
// plan of the same step). Pseudo heights are drawn without replacement.
MpmSelection select_mpm(const TokenSequence& seq, double p_mpm, uint64_t seed,
                        const std::vector<int>& excluded_word_ids = {});

// Splits every selected word out of its segment: the word becomes a one-word
// piece, flanking words form their own pieces, local 1D positions restart at
// 1 in every piece, and each piece's box becomes the tight union of its
// member word boxes. Requires local-1D / segment-2D features.
TokenSequence split_segments(const TokenSequence& seq, const MpmSelection& sel);

struct BoxLabels {
    // Original word box at each selected word's first token, empty elsewhere.
    std::vector<std::optional<BBox>> at;

    std::vector<int> labeled_positions() const;
};

// Replaces each selected word's box with the pseudo box [0,0,0,n/1000] and
// emits the regression targets. Requires split_segments applied first.
std::pair<TokenSequence, BoxLabels> apply_box_masks(const TokenSequence& seq,
                                                    const MpmSelection& sel);

}  // namespace layoutkit

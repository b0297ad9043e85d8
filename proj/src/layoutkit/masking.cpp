#include "layoutkit/masking.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

MlmStrategy parse_mlm_strategy(const std::string& s) {
    if (s == "naive") return MlmStrategy::kNaive;
    if (s == "wwm") return MlmStrategy::kWwm;
    if (s == "wwm_lam") return MlmStrategy::kWwmLam;
    throw ConfigError("unknown masking strategy '" + s + "' (expected 'naive', 'wwm', or 'wwm_lam')");
}

std::string to_string(MlmStrategy s) {
    switch (s) {
        case MlmStrategy::kNaive: return "naive";
        case MlmStrategy::kWwm: return "wwm";
        case MlmStrategy::kWwmLam: return "wwm_lam";
    }
    return "?";
}

std::vector<int> MlmPlan::masked_word_ids(const TokenSequence& seq) const {
    std::vector<int> ids;
    for (int t : masked_token_indices) {
        int w = seq.word_index[static_cast<size_t>(t)];
        if (w >= 0 && (ids.empty() || ids.back() != w)) ids.push_back(w);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

void ReplacementPolicy::validate() const {
    if (mask_fraction < 0 || random_fraction < 0 || keep_fraction < 0 ||
        std::abs(mask_fraction + random_fraction + keep_fraction - 1.0) > 1e-9) {
        throw ConfigError("replacement policy fractions must be non-negative and sum to 1");
    }
}

MlmPlan plan_mlm(const TokenSequence& seq, MlmStrategy strategy, double p_mlm, uint64_t seed) {
    if (!(p_mlm > 0.0 && p_mlm < 1.0)) {
        throw ConfigError("p_mlm must be in (0,1), got " + std::to_string(p_mlm));
    }
    MlmPlan plan;
    plan.strategy = strategy;
    plan.actions.assign(static_cast<size_t>(seq.length()), MaskAction::kNone);
    plan.labels.assign(static_cast<size_t>(seq.length()), kIgnoreLabel);

    Rng rng(derive_seed(seed, "mlm-plan"));
    auto mask_token = [&](int t) {
        plan.masked_token_indices.push_back(t);
        plan.labels[static_cast<size_t>(t)] = seq.tokens[static_cast<size_t>(t)];
    };

    if (strategy == MlmStrategy::kNaive) {
        for (int t = 0; t < seq.length(); ++t) {
            if (seq.special_mask[static_cast<size_t>(t)]) continue;
            if (rng.bernoulli(p_mlm)) mask_token(t);
        }
        return plan;
    }

    // Word-level draws, in kept-word order, one uniform per word.
    const std::vector<bool> boundary = seq.boundary_word_mask();
    std::vector<bool> masked_word(static_cast<size_t>(seq.num_words()), false);
    for (int w = 0; w < seq.num_words(); ++w) {
        double p = p_mlm;
        if (strategy == MlmStrategy::kWwmLam && boundary[static_cast<size_t>(w)]) {
            p = std::min(3.0 * p_mlm, 1.0);
        }
        masked_word[static_cast<size_t>(w)] = rng.bernoulli(p);
    }
    for (int t = 0; t < seq.length(); ++t) {
        int w = seq.word_index[static_cast<size_t>(t)];
        if (w >= 0 && masked_word[static_cast<size_t>(w)]) mask_token(t);
    }
    return plan;
}

MaskedSequence apply_mlm(const TokenSequence& seq, MlmPlan& plan, const ReplacementPolicy& policy,
                         int vocab_size, uint64_t seed) {
    policy.validate();
    if (static_cast<int>(plan.labels.size()) != seq.length()) {
        throw RuntimeError("mlm plan length " + std::to_string(plan.labels.size()) +
                           " does not match sequence length " + std::to_string(seq.length()));
    }
    if (vocab_size <= Vocabulary::kNumSpecials) {
        throw ConfigError("vocab too small for random replacement");
    }

    MaskedSequence out;
    out.seq = seq;
    out.labels = plan.labels;

    Rng rng(derive_seed(seed, "mlm-apply"));
    const int n_plain = vocab_size - Vocabulary::kNumSpecials;

    // One action per masked word (specials can't be masked, so every masked
    // token belongs to a word under wwm; under naive each token is treated
    // as its own unit within the word draw below).
    std::vector<MaskAction> word_action(static_cast<size_t>(seq.num_words()), MaskAction::kNone);
    auto draw_action = [&]() {
        const double u = rng.uniform();
        if (u < policy.mask_fraction) return MaskAction::kReplaceWithMask;
        if (u < policy.mask_fraction + policy.random_fraction) return MaskAction::kReplaceWithRandom;
        return MaskAction::kKeep;
    };
    std::set<int> seen_words;
    for (int t : plan.masked_token_indices) {
        const int w = seq.word_index[static_cast<size_t>(t)];
        if (w >= 0 && seen_words.insert(w).second) {
            word_action[static_cast<size_t>(w)] = draw_action();
        }
    }
    for (int t : plan.masked_token_indices) {
        const int w = seq.word_index[static_cast<size_t>(t)];
        const MaskAction action = word_action[static_cast<size_t>(w)];
        plan.actions[static_cast<size_t>(t)] = action;
        auto& tok = out.seq.tokens[static_cast<size_t>(t)];
        switch (action) {
            case MaskAction::kReplaceWithMask:
                tok = Vocabulary::kMask;
                break;
            case MaskAction::kReplaceWithRandom:
                tok = Vocabulary::kNumSpecials + static_cast<int>(rng.below(static_cast<uint64_t>(n_plain)));
                break;
            default:
                break;  // keep original id
        }
    }
    return out;
}

MpmSelection select_mpm(const TokenSequence& seq, double p_mpm, uint64_t seed,
                        const std::vector<int>& excluded_word_ids) {
    if (!(p_mpm > 0.0 && p_mpm < 1.0)) {
        throw ConfigError("p_mpm must be in (0,1), got " + std::to_string(p_mpm));
    }
    const std::set<int> excluded(excluded_word_ids.begin(), excluded_word_ids.end());
    Rng rng(derive_seed(seed, "mpm-select"));

    MpmSelection sel;
    for (int w = 0; w < seq.num_words(); ++w) {
        const bool take = rng.bernoulli(p_mpm);  // one draw per word, kept-word order
        if (take && !excluded.count(w)) sel.selected_word_ids.push_back(w);
    }
    if (sel.selected_word_ids.size() > static_cast<size_t>(kCoordBins)) {
        throw RuntimeError("mpm selection of " + std::to_string(sel.selected_word_ids.size()) +
                           " words cannot receive distinct pseudo heights from " +
                           std::to_string(kCoordBins) + " bins");
    }
    std::set<int> used_heights;
    for (int w : sel.selected_word_ids) {
        int n;
        do {
            n = 1 + static_cast<int>(rng.below(kCoordBins));
        } while (!used_heights.insert(n).second);
        sel.pseudo_heights.push_back(n);
        sel.target_boxes.push_back(seq.word_boxes[static_cast<size_t>(w)]);
    }
    return sel;
}

TokenSequence split_segments(const TokenSequence& seq, const MpmSelection& sel) {
    if (seq.one_d != OneDMode::kLocal || seq.two_d != TwoDMode::kSegment) {
        throw RuntimeError("split_segments requires local-1D / segment-2D features");
    }
    std::set<int> selected;
    for (int w : sel.selected_word_ids) {
        if (w < 0 || w >= seq.num_words()) {
            throw RuntimeError("mpm selection references word " + std::to_string(w) +
                               " outside the kept sequence");
        }
        selected.insert(w);
    }

    TokenSequence out = seq;
    out.segment_boxes.clear();

    // Walk kept segments; cut a new piece at every selected word and at the
    // token after it.
    const auto by_seg = seq.words_by_segment();
    std::vector<int> word_piece(static_cast<size_t>(seq.num_words()), -1);
    std::vector<int> word_local(static_cast<size_t>(seq.num_words()), 0);
    for (const auto& seg_words : by_seg) {
        size_t i = 0;
        while (i < seg_words.size()) {
            size_t j = i;
            std::vector<int> piece;
            if (selected.count(seg_words[i])) {
                piece.push_back(seg_words[i]);
                j = i + 1;
            } else {
                while (j < seg_words.size() && !selected.count(seg_words[j])) {
                    piece.push_back(seg_words[j]);
                    ++j;
                }
            }
            const int piece_id = out.num_segments();
            BBox piece_box = seq.word_boxes[static_cast<size_t>(piece.front())];
            int local = 1;
            for (int w : piece) {
                piece_box = BBox::join(piece_box, seq.word_boxes[static_cast<size_t>(w)]);
                word_piece[static_cast<size_t>(w)] = piece_id;
                word_local[static_cast<size_t>(w)] = local++;
            }
            out.segment_boxes.push_back(piece_box);
            i = j;
        }
    }

    for (int t = 0; t < out.length(); ++t) {
        const int w = out.word_index[static_cast<size_t>(t)];
        if (w < 0) continue;
        out.segment_index[static_cast<size_t>(t)] = word_piece[static_cast<size_t>(w)];
        out.pos_1d[static_cast<size_t>(t)] = word_local[static_cast<size_t>(w)];
        out.box_2d[static_cast<size_t>(t)] =
            out.segment_boxes[static_cast<size_t>(word_piece[static_cast<size_t>(w)])];
    }
    out.check_consistent();
    return out;
}

std::vector<int> BoxLabels::labeled_positions() const {
    std::vector<int> pos;
    for (int t = 0; t < static_cast<int>(at.size()); ++t) {
        if (at[static_cast<size_t>(t)].has_value()) pos.push_back(t);
    }
    return pos;
}

std::pair<TokenSequence, BoxLabels> apply_box_masks(const TokenSequence& seq,
                                                    const MpmSelection& sel) {
    std::set<int> heights(sel.pseudo_heights.begin(), sel.pseudo_heights.end());
    if (heights.size() != sel.pseudo_heights.size()) {
        throw RuntimeError("mpm selection has duplicate pseudo heights");
    }
    TokenSequence out = seq;
    BoxLabels labels;
    labels.at.assign(static_cast<size_t>(seq.length()), std::nullopt);

    const auto first_token = seq.word_first_token();
    for (size_t k = 0; k < sel.selected_word_ids.size(); ++k) {
        const int w = sel.selected_word_ids[k];
        const int n = sel.pseudo_heights[k];
        const BBox pseudo{0.0, 0.0, 0.0, static_cast<double>(n) / kCoordBins};
        for (int t = 0; t < out.length(); ++t) {
            if (out.word_index[static_cast<size_t>(t)] == w) {
                out.box_2d[static_cast<size_t>(t)] = pseudo;
            }
        }
        // The piece holding a selected word is that word alone, so its
        // segment box is masked with it.
        const int piece = out.segment_index[static_cast<size_t>(first_token[static_cast<size_t>(w)])];
        out.segment_boxes[static_cast<size_t>(piece)] = pseudo;
        labels.at[static_cast<size_t>(first_token[static_cast<size_t>(w)])] = sel.target_boxes[k];
    }
    return {std::move(out), std::move(labels)};
}

}  // namespace layoutkit

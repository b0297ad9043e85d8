#pragma once

#include <string>
#include <vector>

#include "layoutkit/synth.hpp"

namespace layoutkit {

// O plus B-/I- labels for a fixed tag set, in stable order.
class BioLabels {
public:
    BioLabels() = default;
    explicit BioLabels(std::vector<std::string> tags);

    int num_labels() const { return 1 + 2 * static_cast<int>(tags_.size()); }
    int o_label() const { return 0; }
    int begin_label(const std::string& tag) const;
    int inside_label(const std::string& tag) const;
    bool is_begin(int label) const { return label > 0 && label % 2 == 1; }
    bool is_inside(int label) const { return label > 0 && label % 2 == 0; }
    const std::string& tag_of(int label) const;
    std::string name_of(int label) const;  // "O", "B-x", "I-x"
    const std::vector<std::string>& tags() const { return tags_; }

private:
    std::vector<std::string> tags_;
};

// Decodes per-word BIO labels (in serialized order, with their document
// references) into spans. An I-without-B, or an I whose tag differs from the
// open span, starts a new span.
std::vector<EntitySpan> decode_bio(const BioLabels& bio, const std::vector<int>& word_labels,
                                   const std::vector<std::pair<int, int>>& word_refs);

enum class MatchLevel { kWord, kEntity };

struct MetricRow {
    std::string name;
    int gold = 0;
    int predicted = 0;
    int matched = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassAccuracyRow {
    std::string label;
    int total = 0;
    int correct = 0;
};

struct EvalReport {
    std::string level;  // "word", "entity", or "classification"
    std::vector<MetricRow> per_tag;
    MetricRow overall;  // micro-averaged

    double accuracy = -1.0;  // classification only
    std::vector<ClassAccuracyRow> per_class;

    std::string table() const;
    std::string to_csv() const;
    std::string to_json() const;
};

// Span-match F1 over aligned per-document span lists. Word level compares
// per-word tags (O excluded); entity level requires exact (tag, word set)
// match. Tags absent from either side still get a zero row.
EvalReport span_f1(const std::vector<std::vector<EntitySpan>>& gold,
                   const std::vector<std::vector<EntitySpan>>& predicted, MatchLevel level,
                   const std::vector<std::string>& tags);

EvalReport classification_report(const std::vector<std::string>& gold,
                                 const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& classes);

// One robustness row per segment-swap probability.
struct RobustnessRow {
    double p_swap = 0.0;
    EvalReport word_level;
    EvalReport entity_level;
};

struct RobustnessTable {
    std::vector<RobustnessRow> rows;
    std::string table() const;
    std::string to_csv() const;
    std::string to_json() const;
};

}  // namespace layoutkit

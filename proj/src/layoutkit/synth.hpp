#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutkit/document.hpp"

namespace layoutkit {

// Declarative recipe for the synthetic labeled corpus. Documents are
// key-value forms with a multi-line address block, a company line, date and
// total pairs, duplicate-value distractor lines, and filler text, laid out
// on a row grid with one or two segments per line.
struct GenSpec {
    int doc_count = 2000;
    double train_fraction = 0.8;
    double dev_fraction = 0.1;     // remainder is the test split

    double page_width = 1000.0;
    double page_height = 1400.0;
    int grid_rows = 12;
    int grid_cols = 2;

    std::vector<std::string> filler_words;
    std::vector<std::string> name_words;     // address/company building blocks
    std::vector<std::string> amount_values;  // total-like value pool
    std::vector<std::string> date_values;

    std::vector<std::string> entity_tags = {"address", "company", "date", "total"};
    std::vector<std::string> doc_classes = {"invoice", "receipt", "letter"};

    double multi_segment_prob = 0.7;   // address spans 2-3 consecutive lines
    double distractor_prob = 1.0;      // duplicate of the total value elsewhere
    double cross_context_prob = 0.35;  // value left of / above its key
    double vertical_pair_prob = 0.5;   // fraction of cross-context pairs stacked vertically
    double jitter = 2.0;               // px jitter applied to word boxes

    // Ambiguity knobs: how often filler text borrows entity-like surfaces, so
    // word identity alone cannot decide a tag and context/layout must.
    double name_in_filler_prob = 0.35;  // filler word drawn from the name pool
    double loose_value_prob = 0.5;      // doc gets an unlabeled date/amount in filler

    // Co-occurrence structure. Address/company lines draw from one cluster of
    // consecutive name_words, and filler follows a fixed bigram graph, so
    // masked words are predictable from context (in-cluster words, chain
    // successors) but individual surfaces stay ambiguous.
    int name_cluster_size = 8;

    uint64_t seed = 1;

    static GenSpec defaults();
    void validate() const;
};

struct CorpusSplits {
    std::vector<Document> train;
    std::vector<Document> dev;
    std::vector<Document> test;
};

CorpusSplits generate_corpus(const GenSpec& spec);

struct TagStats {
    std::string tag;
    int entities = 0;
    int words = 0;
    int multi_segment = 0;  // entities spanning >= 2 segments
};

struct CorpusStats {
    int docs = 0;
    int segments = 0;
    int words = 0;
    std::vector<TagStats> per_tag;
    double multi_segment_fraction = 0.0;   // over tags that can span
    double distractor_fraction = 0.0;      // docs with a duplicate unlabeled value
    std::string table() const;
    std::string to_json() const;
};

CorpusStats corpus_stats(const std::vector<Document>& docs,
                         const std::vector<std::string>& entity_tags);

// Gold entity span: tag plus the (segment, word) references of its words in
// canonical reading order.
struct EntitySpan {
    std::string tag;
    std::vector<std::pair<int, int>> words;  // (segment index, word index)

    bool operator==(const EntitySpan&) const = default;
    bool operator<(const EntitySpan& o) const {
        if (tag != o.tag) return tag < o.tag;
        return words < o.words;
    }
};

// Derives gold spans as maximal same-tag runs of words along the canonical
// reading order of the (unperturbed) document.
std::vector<EntitySpan> gold_spans(const Document& doc);

}  // namespace layoutkit

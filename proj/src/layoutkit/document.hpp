#pragma once

#include <optional>
#include <string>
#include <vector>

#include "layoutkit/geometry.hpp"

namespace layoutkit {

enum class OneDMode { kGlobal, kLocal };
enum class TwoDMode { kWord, kSegment };

OneDMode parse_one_d_mode(const std::string& s);
TwoDMode parse_two_d_mode(const std::string& s);
std::string to_string(OneDMode m);
std::string to_string(TwoDMode m);

struct Word {
    std::string text;
    BBox box;                          // pixels on load, [0,1] after normalize
    std::string entity_label;          // empty = no entity
    int pos_1d = 0;                    // filled by assign_positions
};

struct Segment {
    std::vector<Word> words;
    BBox box;
    int segment_id = 0;                // unique within the document
};

struct Document {
    std::string doc_id;
    double page_width = 0.0;
    double page_height = 0.0;
    std::vector<Segment> segments;
    std::string doc_class;             // empty = unlabeled
    bool normalized = false;

    // Segment indices in serialization order. Normally derived from geometry
    // by the reading-order rule; segment_swap installs a perturbed order here.
    std::vector<int> serial_order;

    int word_count() const;
};

// Validates structural invariants (non-empty text, box ordering, boxes within
// the page, segment boxes containing their words within one bin, unique
// segment ids). Throws ConfigError naming the doc_id on violation.
void validate_document(const Document& doc);

// Pixel boxes -> [0,1] fractions of page width/height.
Document normalize_document(const Document& doc);

// Groups segments into visual lines: segments whose y-intervals overlap by
// more than 50% of the smaller interval share a line (transitively). Lines
// are ordered top-to-bottom by mean y-center, segments within a line
// left-to-right by x1. Requires a normalized document.
std::vector<std::vector<int>> group_lines(const Document& doc);

// Reading order: concatenation of the grouped lines.
std::vector<int> reading_order(const Document& doc);

// Fills per-word 1D positions and the serialization order. Global mode
// numbers words 1..W across the serialized order; local mode restarts at 1
// inside every segment. An existing serial_order (e.g. from segment_swap) is
// kept; otherwise the reading-order rule derives it.
Document assign_positions(const Document& doc, OneDMode mode);

// JSONL corpus I/O. One document object per line; boxes in pixels.
std::vector<Document> load_corpus(const std::string& path);
std::vector<Document> parse_corpus_jsonl(const std::string& text, const std::string& origin);
void save_corpus(const std::vector<Document>& docs, const std::string& path);
std::string corpus_to_jsonl(const std::vector<Document>& docs);

bool documents_equal(const Document& a, const Document& b);

}  // namespace layoutkit

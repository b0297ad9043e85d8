#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "layoutkit/document.hpp"
#include "layoutkit/geometry.hpp"

namespace layoutkit {

// Width of the fixed chunking rule: words are cut into consecutive 3-char
// pieces, the final piece may be shorter. Guarantees multi-token words so
// word-level masking differs from token-level masking.
inline constexpr int kChunkWidth = 3;

std::vector<std::string> chunk_word(const std::string& text);

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr int kMask = 4;
    static constexpr int kNumSpecials = 5;

    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> pieces);  // non-special pieces, sorted

    // Collects every chunk producible from the documents' words.
    static Vocabulary build(const std::vector<Document>& docs);
    static Vocabulary build_from_words(const std::vector<std::string>& words);

    int size() const { return static_cast<int>(id_to_piece_.size()); }
    int id_of(const std::string& piece) const;  // kUnk when absent
    const std::string& piece_of(int id) const;
    bool is_special(int id) const { return id < kNumSpecials; }

    const std::vector<std::string>& pieces() const { return id_to_piece_; }

private:
    std::vector<std::string> id_to_piece_;
    std::unordered_map<std::string, int> piece_to_id_;
};

// Flat token stream of one document with word/segment alignment, 1D
// positions, and resolved per-token boxes. Indices refer to kept words and
// kept segment pieces after truncation; specials carry index -1.
struct TokenSequence {
    std::vector<int> tokens;
    std::vector<int> word_index;
    std::vector<int> segment_index;
    std::vector<int> pos_1d;
    std::vector<BBox> box_2d;
    std::vector<bool> special_mask;

    OneDMode one_d = OneDMode::kLocal;
    TwoDMode two_d = TwoDMode::kSegment;

    // Per kept word: word-level box, text, entity label, and the position of
    // the word in the source document (segment index, word index).
    std::vector<BBox> word_boxes;
    std::vector<std::string> word_texts;
    std::vector<std::string> word_labels;
    std::vector<std::pair<int, int>> word_doc_ref;

    // Per kept segment piece: segment-level box.
    std::vector<BBox> segment_boxes;

    std::string doc_id;

    int length() const { return static_cast<int>(tokens.size()); }
    int num_words() const { return static_cast<int>(word_boxes.size()); }
    int num_segments() const { return static_cast<int>(segment_boxes.size()); }

    // First token position of each kept word.
    std::vector<int> word_first_token() const;
    // Kept word indices grouped by kept segment.
    std::vector<std::vector<int>> words_by_segment() const;
    // Per kept word: first or last inside its segment piece.
    std::vector<bool> boundary_word_mask() const;
    bool is_boundary_word(int word_id) const;

    void check_consistent() const;  // throws RuntimeError on broken alignment
};

// Serializes a positioned, normalized document into tokens. CLS is prepended
// (pos 0, zero box), SEP appended (pos 0 in local mode, max+1 in global
// mode). Sequences longer than max_len are truncated by dropping whole
// trailing segments; an empty result is an error.
TokenSequence tokenize(const Document& doc, const Vocabulary& vocab, OneDMode one_d,
                       int max_len);

// Re-resolves per-token boxes from word or segment level. Specials keep the
// zero box.
TokenSequence resolve_token_boxes(const TokenSequence& seq, TwoDMode two_d);

}  // namespace layoutkit

#include "layoutkit/tokenize.hpp"

#include <algorithm>
#include <set>

#include "layoutkit/errors.hpp"

namespace layoutkit {

std::vector<std::string> chunk_word(const std::string& text) {
    std::vector<std::string> chunks;
    for (size_t i = 0; i < text.size(); i += kChunkWidth) {
        chunks.push_back(text.substr(i, kChunkWidth));
    }
    return chunks;
}

Vocabulary::Vocabulary(std::vector<std::string> pieces) {
    id_to_piece_ = {"<pad>", "<unk>", "<cls>", "<sep>", "<mask>"};
    std::sort(pieces.begin(), pieces.end());
    pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
    for (auto& p : pieces) id_to_piece_.push_back(std::move(p));
    for (int i = 0; i < static_cast<int>(id_to_piece_.size()); ++i) {
        piece_to_id_[id_to_piece_[i]] = i;
    }
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs) {
    std::set<std::string> pieces;
    for (const auto& d : docs) {
        for (const auto& seg : d.segments) {
            for (const auto& w : seg.words) {
                for (auto& c : chunk_word(w.text)) pieces.insert(std::move(c));
            }
        }
    }
    return Vocabulary(std::vector<std::string>(pieces.begin(), pieces.end()));
}

Vocabulary Vocabulary::build_from_words(const std::vector<std::string>& words) {
    std::set<std::string> pieces;
    for (const auto& w : words) {
        for (auto& c : chunk_word(w)) pieces.insert(std::move(c));
    }
    return Vocabulary(std::vector<std::string>(pieces.begin(), pieces.end()));
}

int Vocabulary::id_of(const std::string& piece) const {
    auto it = piece_to_id_.find(piece);
    return it == piece_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::piece_of(int id) const {
    if (id < 0 || id >= size()) throw RuntimeError("token id out of range: " + std::to_string(id));
    return id_to_piece_[static_cast<size_t>(id)];
}

std::vector<int> TokenSequence::word_first_token() const {
    std::vector<int> first(word_boxes.size(), -1);
    for (int t = 0; t < length(); ++t) {
        int w = word_index[static_cast<size_t>(t)];
        if (w >= 0 && first[static_cast<size_t>(w)] < 0) first[static_cast<size_t>(w)] = t;
    }
    return first;
}

std::vector<std::vector<int>> TokenSequence::words_by_segment() const {
    std::vector<std::vector<int>> by_seg(segment_boxes.size());
    int prev_word = -1;
    for (int t = 0; t < length(); ++t) {
        int w = word_index[static_cast<size_t>(t)];
        int s = segment_index[static_cast<size_t>(t)];
        if (w >= 0 && w != prev_word) {
            by_seg[static_cast<size_t>(s)].push_back(w);
            prev_word = w;
        }
    }
    return by_seg;
}

std::vector<bool> TokenSequence::boundary_word_mask() const {
    std::vector<bool> mask(static_cast<size_t>(num_words()), false);
    for (const auto& seg : words_by_segment()) {
        if (seg.empty()) continue;
        mask[static_cast<size_t>(seg.front())] = true;
        mask[static_cast<size_t>(seg.back())] = true;
    }
    return mask;
}

bool TokenSequence::is_boundary_word(int word_id) const {
    if (word_id < 0 || word_id >= num_words()) return false;
    return boundary_word_mask()[static_cast<size_t>(word_id)];
}

void TokenSequence::check_consistent() const {
    const size_t n = tokens.size();
    if (word_index.size() != n || segment_index.size() != n || pos_1d.size() != n ||
        box_2d.size() != n || special_mask.size() != n) {
        throw RuntimeError("token sequence '" + doc_id + "': per-token lists differ in length");
    }
    int prev_word = -1, prev_seg = -1;
    std::set<int> closed_words, closed_segs;
    for (size_t t = 0; t < n; ++t) {
        const int w = word_index[t];
        const int s = segment_index[t];
        if ((w < 0) != special_mask[t] || (s < 0) != special_mask[t]) {
            throw RuntimeError("token sequence '" + doc_id + "': special mask misaligned");
        }
        if (w >= 0 && w != prev_word) {
            if (closed_words.count(w)) {
                throw RuntimeError("token sequence '" + doc_id + "': word tokens not contiguous");
            }
            if (prev_word >= 0) closed_words.insert(prev_word);
            prev_word = w;
        }
        if (s >= 0 && s != prev_seg) {
            if (closed_segs.count(s)) {
                throw RuntimeError("token sequence '" + doc_id + "': segment tokens not contiguous");
            }
            if (prev_seg >= 0) closed_segs.insert(prev_seg);
            prev_seg = s;
        }
    }
}

TokenSequence tokenize(const Document& doc, const Vocabulary& vocab, OneDMode one_d,
                       int max_len) {
    if (!doc.normalized) throw RuntimeError("tokenize: document '" + doc.doc_id + "' not normalized");
    if (doc.serial_order.empty()) {
        throw RuntimeError("tokenize: document '" + doc.doc_id + "' has no positions assigned");
    }
    if (max_len < 3) throw ConfigError("max_len must be at least 3");

    TokenSequence seq;
    seq.doc_id = doc.doc_id;
    seq.one_d = one_d;
    seq.two_d = TwoDMode::kSegment;

    const BBox zero_box{};

    // CLS: position 0, zero box.
    seq.tokens.push_back(Vocabulary::kCls);
    seq.word_index.push_back(-1);
    seq.segment_index.push_back(-1);
    seq.pos_1d.push_back(0);
    seq.box_2d.push_back(zero_box);
    seq.special_mask.push_back(true);

    int budget = max_len - 2;  // room for CLS and SEP
    int kept_segments = 0;
    int max_pos = 0;
    for (int seg_idx : doc.serial_order) {
        const auto& seg = doc.segments[static_cast<size_t>(seg_idx)];
        int seg_tokens = 0;
        for (const auto& w : seg.words) {
            seg_tokens += static_cast<int>(chunk_word(w.text).size());
        }
        if (seg_tokens > budget) break;  // drop this segment and everything after it
        budget -= seg_tokens;

        const int piece_id = kept_segments++;
        seq.segment_boxes.push_back(seg.box);
        for (size_t wi = 0; wi < seg.words.size(); ++wi) {
            const auto& w = seg.words[wi];
            const int word_id = seq.num_words();
            seq.word_boxes.push_back(w.box);
            seq.word_texts.push_back(w.text);
            seq.word_labels.push_back(w.entity_label);
            seq.word_doc_ref.emplace_back(seg_idx, static_cast<int>(wi));
            max_pos = std::max(max_pos, w.pos_1d);
            for (const auto& chunk : chunk_word(w.text)) {
                seq.tokens.push_back(vocab.id_of(chunk));
                seq.word_index.push_back(word_id);
                seq.segment_index.push_back(piece_id);
                seq.pos_1d.push_back(w.pos_1d);
                seq.box_2d.push_back(seg.box);
                seq.special_mask.push_back(false);
            }
        }
    }
    if (kept_segments == 0) {
        throw ConfigError("document '" + doc.doc_id + "' is empty after truncation to max_len " +
                          std::to_string(max_len));
    }

    // SEP: zero box; local positions stay intra-segment so SEP gets 0 there.
    seq.tokens.push_back(Vocabulary::kSep);
    seq.word_index.push_back(-1);
    seq.segment_index.push_back(-1);
    seq.pos_1d.push_back(one_d == OneDMode::kGlobal ? max_pos + 1 : 0);
    seq.box_2d.push_back(zero_box);
    seq.special_mask.push_back(true);

    seq.check_consistent();
    return seq;
}

TokenSequence resolve_token_boxes(const TokenSequence& seq, TwoDMode two_d) {
    TokenSequence out = seq;
    out.two_d = two_d;
    for (int t = 0; t < out.length(); ++t) {
        if (out.special_mask[static_cast<size_t>(t)]) continue;
        if (two_d == TwoDMode::kWord) {
            out.box_2d[static_cast<size_t>(t)] =
                out.word_boxes[static_cast<size_t>(out.word_index[static_cast<size_t>(t)])];
        } else {
            out.box_2d[static_cast<size_t>(t)] =
                out.segment_boxes[static_cast<size_t>(out.segment_index[static_cast<size_t>(t)])];
        }
    }
    return out;
}

}  // namespace layoutkit

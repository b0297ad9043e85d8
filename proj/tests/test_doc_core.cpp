#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "layoutkit/document.hpp"
#include "layoutkit/errors.hpp"
#include "layoutkit/synth.hpp"
#include "layoutkit/tokenize.hpp"

using namespace layoutkit;

namespace {

Word make_word(const std::string& text, double x1, double y1, double x2, double y2,
               const std::string& label = "") {
    Word w;
    w.text = text;
    w.box = {x1, y1, x2, y2};
    w.entity_label = label;
    return w;
}

Segment make_segment(int id, std::vector<Word> words) {
    Segment s;
    s.segment_id = id;
    s.words = std::move(words);
    BBox b = s.words.front().box;
    for (const auto& w : s.words) b = BBox::join(b, w.box);
    s.box = b;
    return s;
}

// Two segments on one line ("TOTAL AMOUNT" | "193.00") as in a receipt row.
Document receipt_row_doc() {
    Document d;
    d.doc_id = "fig-style";
    d.page_width = 1000;
    d.page_height = 1000;
    d.segments.push_back(make_segment(
        0, {make_word("TOTAL", 100, 100, 200, 140), make_word("AMOUNT", 210, 100, 330, 140)}));
    d.segments.push_back(make_segment(1, {make_word("193.00", 600, 102, 700, 142)}));
    return d;
}

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() /
            (std::string(stem) + "-" + std::to_string(::getpid()) + ".jsonl"))
        .string();
}

}  // namespace

TEST_CASE("normalize_document divides by page dimensions") {
    Document d;
    d.doc_id = "n";
    d.page_width = 1000;
    d.page_height = 2000;
    d.segments.push_back(make_segment(0, {make_word("a", 50, 100, 150, 200)}));
    const Document n = normalize_document(d);
    CHECK(n.segments[0].words[0].box == BBox{0.05, 0.05, 0.15, 0.10});
    CHECK(quantize(n.segments[0].words[0].box) == QuantBox{50, 50, 150, 100});
    CHECK(n.page_width == 1000);

    Document full = d;
    full.segments[0] = make_segment(0, {make_word("a", 0, 0, 1000, 2000)});
    const Document nf = normalize_document(full);
    CHECK(nf.segments[0].words[0].box == BBox{0, 0, 1, 1});
    CHECK(quantize(nf.segments[0].words[0].box) == QuantBox{0, 0, 1000, 1000});

    Document bad = d;
    bad.page_height = 0;
    CHECK_THROWS_AS(normalize_document(bad), ConfigError);
}

TEST_CASE("validate rejects inverted and out-of-page boxes") {
    Document d;
    d.doc_id = "v";
    d.page_width = 100;
    d.page_height = 100;
    d.segments.push_back(make_segment(0, {make_word("ok", 10, 10, 30, 20)}));
    CHECK_NOTHROW(validate_document(d));

    Document inverted = d;
    inverted.segments[0].words[0].box = {30, 10, 10, 20};
    CHECK_THROWS_WITH_AS(validate_document(inverted),
                         doctest::Contains("'v'"), ConfigError);

    Document outside = d;
    outside.segments[0].words[0].box = {10, 10, 130, 20};
    outside.segments[0].box = {10, 10, 130, 20};
    CHECK_THROWS_AS(validate_document(outside), ConfigError);
}

TEST_CASE("local positions restart per segment, global positions keep counting") {
    const Document d = normalize_document(receipt_row_doc());

    const Document local = assign_positions(d, OneDMode::kLocal);
    CHECK(local.segments[0].words[0].pos_1d == 1);
    CHECK(local.segments[0].words[1].pos_1d == 2);
    CHECK(local.segments[1].words[0].pos_1d == 1);

    const Document global = assign_positions(d, OneDMode::kGlobal);
    CHECK(global.segments[0].words[0].pos_1d == 1);
    CHECK(global.segments[0].words[1].pos_1d == 2);
    CHECK(global.segments[1].words[0].pos_1d == 3);
}

TEST_CASE("single one-word segment: local == global == 1") {
    Document d;
    d.doc_id = "one";
    d.page_width = 100;
    d.page_height = 100;
    d.segments.push_back(make_segment(0, {make_word("x", 1, 1, 5, 3)}));
    const Document n = normalize_document(d);
    CHECK(assign_positions(n, OneDMode::kLocal).segments[0].words[0].pos_1d == 1);
    CHECK(assign_positions(n, OneDMode::kGlobal).segments[0].words[0].pos_1d == 1);
}

TEST_CASE("reading order: lines top-to-bottom, segments left-to-right") {
    Document d;
    d.doc_id = "ro";
    d.page_width = 100;
    d.page_height = 100;
    // second line first in storage; right segment stored before left
    d.segments.push_back(make_segment(0, {make_word("c", 10, 50, 20, 56)}));
    d.segments.push_back(make_segment(1, {make_word("b", 60, 10, 70, 16)}));
    d.segments.push_back(make_segment(2, {make_word("a", 10, 11, 20, 17)}));
    const Document n = normalize_document(d);
    CHECK(reading_order(n) == std::vector<int>{2, 1, 0});
}

TEST_CASE("position properties over a generated corpus") {
    GenSpec spec = GenSpec::defaults();
    spec.doc_count = 30;
    spec.train_fraction = 1.0;
    spec.dev_fraction = 0.0;
    for (const auto& doc : generate_corpus(spec).train) {
        const Document norm = normalize_document(doc);
        // global: word positions strictly increase along the serialization
        const Document g = assign_positions(norm, OneDMode::kGlobal);
        int prev = 0;
        for (int seg_idx : g.serial_order) {
            for (const auto& w : g.segments[static_cast<size_t>(seg_idx)].words) {
                CHECK(w.pos_1d == prev + 1);
                prev = w.pos_1d;
            }
        }
        // local: every segment starts over at 1
        const Document l = assign_positions(norm, OneDMode::kLocal);
        for (const auto& seg : l.segments) {
            for (size_t i = 0; i < seg.words.size(); ++i) {
                CHECK(seg.words[i].pos_1d == static_cast<int>(i) + 1);
            }
        }
    }
}

TEST_CASE("unknown chunks map to the UNK id") {
    Document d;
    d.doc_id = "unk";
    d.page_width = 100;
    d.page_height = 100;
    d.segments.push_back(make_segment(0, {make_word("known", 10, 10, 40, 20)}));
    const Document n = assign_positions(normalize_document(d), OneDMode::kLocal);
    const Vocabulary vocab = Vocabulary::build_from_words({"known"});

    Document other = d;
    other.segments[0] = make_segment(0, {make_word("zzzzz", 10, 10, 40, 20)});
    const Document no = assign_positions(normalize_document(other), OneDMode::kLocal);
    const TokenSequence seq = tokenize(no, vocab, OneDMode::kLocal, 64);
    CHECK(seq.tokens[1] == Vocabulary::kUnk);
    CHECK(seq.tokens[2] == Vocabulary::kUnk);
}

TEST_CASE("corpus JSONL round trip") {
    const std::string path = temp_path("lk-roundtrip");
    const std::string path2 = temp_path("lk-roundtrip2");

    GenSpec spec = GenSpec::defaults();
    spec.doc_count = 100;
    spec.train_fraction = 1.0;
    spec.dev_fraction = 0.0;
    const CorpusSplits splits = generate_corpus(spec);
    REQUIRE(splits.train.size() == 100);

    save_corpus(splits.train, path);
    const std::vector<Document> loaded = load_corpus(path);
    REQUIRE(loaded.size() == splits.train.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(documents_equal(loaded[i], splits.train[i]));
    }
    // byte stability: saving what we loaded reproduces the file exactly
    save_corpus(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("load_corpus names the offending line / document") {
    const std::string path = temp_path("lk-badline");
    {
        std::ofstream f(path);
        f << R"({"doc_id":"ok","page_width":100,"page_height":100,"segments":[{"box":[0,0,10,10],"words":[{"text":"a","box":[1,1,9,9]}]}]})"
          << "\n";
        f << "{not json\n";
    }
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains(":2"), ConfigError);
    std::filesystem::remove(path);

    const std::string path_inv = temp_path("lk-invbox");
    {
        std::ofstream f(path_inv);
        f << R"({"doc_id":"inv-1","page_width":100,"page_height":100,"segments":[{"box":[0,0,10,10],"words":[{"text":"a","box":[9,1,1,9]}]}]})"
          << "\n";
    }
    CHECK_THROWS_WITH_AS(load_corpus(path_inv), doctest::Contains("inv-1"), ConfigError);
    std::filesystem::remove(path_inv);

    const std::string path_out = temp_path("lk-outside");
    {
        std::ofstream f(path_out);
        f << R"({"doc_id":"out-1","page_width":100,"page_height":100,"segments":[{"box":[0,0,120,10],"words":[{"text":"a","box":[1,1,119,9]}]}]})"
          << "\n";
    }
    CHECK_THROWS_AS(load_corpus(path_out), ConfigError);
    std::filesystem::remove(path_out);

    const std::string path_unknown = temp_path("lk-unknownkey");
    {
        std::ofstream f(path_unknown);
        f << R"({"doc_id":"u","page_width":100,"page_height":100,"surprise":1,"segments":[]})"
          << "\n";
    }
    CHECK_THROWS_WITH_AS(load_corpus(path_unknown), doctest::Contains("surprise"), ConfigError);
    std::filesystem::remove(path_unknown);
}

TEST_CASE("chunking: fixed width 3, shorter tail") {
    CHECK(chunk_word("TOTAL") == std::vector<std::string>{"TOT", "AL"});
    CHECK(chunk_word("HI") == std::vector<std::string>{"HI"});
    CHECK(chunk_word("abcdef") == std::vector<std::string>{"abc", "def"});
}

TEST_CASE("tokenize aligns tokens to words and adds specials") {
    const Document d =
        assign_positions(normalize_document(receipt_row_doc()), OneDMode::kLocal);
    const Vocabulary vocab = Vocabulary::build({d});
    const TokenSequence seq = tokenize(d, vocab, OneDMode::kLocal, 512);

    // CLS + TOTAL(2) + AMOUNT(2) + 193.00(2) + SEP
    REQUIRE(seq.length() == 8);
    CHECK(seq.tokens.front() == Vocabulary::kCls);
    CHECK(seq.tokens.back() == Vocabulary::kSep);
    CHECK(seq.pos_1d.front() == 0);
    CHECK(seq.pos_1d.back() == 0);  // local mode keeps SEP at 0
    CHECK(seq.special_mask.front());
    CHECK(seq.special_mask.back());
    CHECK(seq.word_index == std::vector<int>{-1, 0, 0, 1, 1, 2, 2, -1});
    CHECK(seq.segment_index == std::vector<int>{-1, 0, 0, 0, 0, 1, 1, -1});
    CHECK(seq.pos_1d == std::vector<int>{0, 1, 1, 2, 2, 1, 1, 0});
    CHECK(seq.box_2d.front() == BBox{});

    const Document g =
        assign_positions(normalize_document(receipt_row_doc()), OneDMode::kGlobal);
    const TokenSequence gseq = tokenize(g, vocab, OneDMode::kGlobal, 512);
    CHECK(gseq.pos_1d == std::vector<int>{0, 1, 1, 2, 2, 3, 3, 4});  // SEP = max + 1
}

TEST_CASE("truncation drops whole trailing segments") {
    GenSpec spec = GenSpec::defaults();
    spec.doc_count = 4;
    spec.train_fraction = 1.0;
    spec.dev_fraction = 0.0;
    const CorpusSplits splits = generate_corpus(spec);
    const Vocabulary vocab = Vocabulary::build(splits.train);

    for (const auto& raw : splits.train) {
        const Document d = assign_positions(normalize_document(raw), OneDMode::kLocal);
        const int max_len = 24;
        const TokenSequence seq = tokenize(d, vocab, OneDMode::kLocal, max_len);
        CHECK(seq.length() <= max_len);
        seq.check_consistent();

        // oracle: walk serialized segments, counting chunk tokens, to find
        // exactly which segments fit in max_len - 2
        int budget = max_len - 2;
        std::vector<int> kept;
        for (int seg_idx : d.serial_order) {
            int t = 0;
            for (const auto& w : d.segments[static_cast<size_t>(seg_idx)].words) {
                t += static_cast<int>(chunk_word(w.text).size());
            }
            if (t > budget) break;
            budget -= t;
            kept.push_back(seg_idx);
        }
        REQUIRE(static_cast<int>(kept.size()) == seq.num_segments());
        // last kept segment is complete: token count of each kept piece
        // equals the chunk totals of its words
        const auto by_seg = seq.words_by_segment();
        for (size_t p = 0; p < kept.size(); ++p) {
            const auto& seg = d.segments[static_cast<size_t>(kept[p])];
            CHECK(by_seg[p].size() == seg.words.size());
        }
    }
}

TEST_CASE("tokenize fails when nothing fits") {
    const Document d =
        assign_positions(normalize_document(receipt_row_doc()), OneDMode::kLocal);
    const Vocabulary vocab = Vocabulary::build({d});
    CHECK_THROWS_AS(tokenize(d, vocab, OneDMode::kLocal, 3), ConfigError);
}

TEST_CASE("segment 2D sharing vs word boxes") {
    const Document d =
        assign_positions(normalize_document(receipt_row_doc()), OneDMode::kLocal);
    const Vocabulary vocab = Vocabulary::build({d});
    TokenSequence seq = tokenize(d, vocab, OneDMode::kLocal, 512);

    const TokenSequence seg_mode = resolve_token_boxes(seq, TwoDMode::kSegment);
    // both words of segment 0 share one identical box
    CHECK(seg_mode.box_2d[1] == seg_mode.box_2d[3]);
    CHECK(seg_mode.box_2d[1] == seg_mode.segment_boxes[0]);

    const TokenSequence word_mode = resolve_token_boxes(seq, TwoDMode::kWord);
    CHECK(word_mode.box_2d[1] == word_mode.word_boxes[0]);
    CHECK(word_mode.box_2d[3] == word_mode.word_boxes[1]);
    CHECK_FALSE(word_mode.box_2d[1] == word_mode.box_2d[3]);

    // distinct non-special boxes in segment mode == number of kept segments
    std::vector<BBox> distinct;
    for (int t = 0; t < seg_mode.length(); ++t) {
        if (seg_mode.special_mask[static_cast<size_t>(t)]) continue;
        bool seen = false;
        for (const auto& b : distinct) seen = seen || b == seg_mode.box_2d[static_cast<size_t>(t)];
        if (!seen) distinct.push_back(seg_mode.box_2d[static_cast<size_t>(t)]);
    }
    CHECK(static_cast<int>(distinct.size()) == seg_mode.num_segments());

    // one-word segment: word mode and segment mode agree there
    CHECK(word_mode.box_2d[5] == seg_mode.box_2d[5]);
}

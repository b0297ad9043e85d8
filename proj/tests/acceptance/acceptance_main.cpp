// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. The trend criteria (5-7) train desk-scale models and
// share their pre-training runs; everything else finishes in seconds.
//
//   acceptance [--only 1,2,...] [--jobs N] [--out DIR] [--write-golden]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "layoutkit/config.hpp"
#include "layoutkit/errors.hpp"
#include "layoutkit/masking.hpp"
#include "layoutkit/metrics.hpp"
#include "layoutkit/model.hpp"
#include "layoutkit/rng.hpp"
#include "layoutkit/runner.hpp"
#include "layoutkit/synth.hpp"
#include "layoutkit/tensor.hpp"
#include "layoutkit/train.hpp"

using namespace layoutkit;
using ad::Tensor;

namespace {

namespace fs = std::filesystem;

struct Outcome {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ------------------------------------------------------------ criterion 1

Tensor random_tensor(std::vector<int> shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform();
    return t;
}

Tensor box_from_raw(const Tensor& raw) {
    Tensor s = ad::sigmoid(raw);
    Tensor cx = ad::slice(s, 1, 0, 1), cy = ad::slice(s, 1, 1, 1);
    Tensor hw = ad::scale(ad::slice(s, 1, 2, 1), 0.5);
    Tensor hh = ad::scale(ad::slice(s, 1, 3, 1), 0.5);
    return ad::concat({ad::clamp(ad::sub(cx, hw), 0, 1), ad::clamp(ad::sub(cy, hh), 0, 1),
                       ad::clamp(ad::add(cx, hw), 0, 1), ad::clamp(ad::add(cy, hh), 0, 1)},
                      1);
}

Outcome criterion_gradients() {
    Outcome out{1, "gradient suite (primitives < 1e-6, losses < 1e-4)"};
    using Fn = std::function<Tensor(std::vector<Tensor>&)>;
    double worst_prim = 0, worst_loss = 0;

    auto prim = [&](const Fn& f, std::vector<Tensor> in) {
        worst_prim = std::max(worst_prim, ad::finite_diff_check(f, in));
    };
    prim([](auto& in) { return ad::sum(ad::sigmoid(in[0])); }, {random_tensor({3, 4}, 1)});
    prim([](auto& in) { return ad::sum(ad::tanh(in[0])); }, {random_tensor({3, 4}, 2)});
    prim([](auto& in) { return ad::sum(ad::exp(in[0])); }, {random_tensor({3, 4}, 3)});
    prim([](auto& in) { return ad::sum(ad::log(in[0])); }, {random_tensor({3, 4}, 4, 0.5, 2)});
    prim([](auto& in) { return ad::sum(ad::relu(in[0])); }, {random_tensor({3, 4}, 5, 0.1, 1)});
    prim([](auto& in) { return ad::sum(ad::mul(in[0], in[1])); },
         {random_tensor({2, 3}, 6), random_tensor({3}, 7)});
    prim([](auto& in) { return ad::sum(ad::div(in[0], in[1])); },
         {random_tensor({2, 3}, 8), random_tensor({2, 3}, 9, 0.5, 1.5)});
    prim([](auto& in) { return ad::sum(ad::sub(in[0], in[1])); },
         {random_tensor({2, 3}, 10), random_tensor({2, 3}, 11)});
    prim([](auto& in) { return ad::sum(ad::add(in[0], in[1])); },
         {random_tensor({2, 3}, 12), random_tensor({3}, 13)});
    prim([](auto& in) { return ad::sum(ad::minimum(in[0], in[1])); },
         {random_tensor({2, 3}, 14), random_tensor({2, 3}, 15)});
    prim([](auto& in) { return ad::sum(ad::maximum(in[0], in[1])); },
         {random_tensor({2, 3}, 16), random_tensor({2, 3}, 17)});
    prim([](auto& in) { return ad::sum(ad::matmul(in[0], in[1])); },
         {random_tensor({3, 4}, 18), random_tensor({4, 2}, 19)});
    prim([](auto& in) { return ad::sum(ad::matmul(in[0], in[1])); },
         {random_tensor({2, 3, 4}, 20), random_tensor({2, 4, 2}, 21)});
    prim([](auto& in) { return ad::sum(ad::mul(ad::softmax(in[0], -1), in[1])); },
         {random_tensor({3, 5}, 22), random_tensor({3, 5}, 23)});
    prim([](auto& in) { return ad::sum(ad::mul(ad::log_softmax(in[0], -1), in[1])); },
         {random_tensor({3, 5}, 24), random_tensor({3, 5}, 25)});
    prim([](auto& in) { return ad::sum(ad::mul(ad::layer_norm(in[0], -1, 1e-5), in[1])); },
         {random_tensor({3, 5}, 26), random_tensor({3, 5}, 27)});
    prim([](auto& in) { return ad::sum(ad::embedding_gather(in[0], {4, 1, 1, 0})); },
         {random_tensor({5, 3}, 28)});
    prim([](auto& in) { return ad::sum(ad::mul(ad::max(in[0], 1), in[1])); },
         {random_tensor({3, 5}, 29), random_tensor({3}, 30)});
    prim([](auto& in) { return ad::mean(ad::concat({in[0], in[1]}, 1)); },
         {random_tensor({2, 3}, 31), random_tensor({2, 2}, 32)});
    prim([](auto& in) { return ad::sum(ad::slice(in[0], 1, 1, 2)); },
         {random_tensor({3, 4}, 33)});
    prim([](auto& in) { return ad::sum(ad::mul(ad::permute(in[0], {1, 0, 2}), in[1])); },
         {random_tensor({2, 3, 4}, 34), random_tensor({3, 2, 4}, 35)});
    prim([](auto& in) { return ad::sum(ad::select_index(in[0], {1, 3, 0})); },
         {random_tensor({3, 4}, 36)});
    prim([](auto& in) { return ad::sum(ad::clamp(in[0], -0.5, 0.5)); },
         {random_tensor({3, 4}, 37, 0.05, 0.45)});

    auto loss_check = [&](const Fn& f, std::vector<Tensor> in) {
        worst_loss = std::max(worst_loss, ad::finite_diff_check(f, in));
    };
    // masked-token cross entropy
    loss_check([](auto& in) { return mlm_loss(in[0], {2, kIgnoreLabel, 0}); },
               {random_tensor({3, 6}, 41)});
    // GIoU box loss through the sigmoid box head
    {
        Tensor truth = Tensor::from({2, 4}, {0.1, 0.1, 0.4, 0.3, 0.5, 0.55, 0.9, 0.8});
        loss_check([&truth](auto& in) { return giou_loss(box_from_raw(in[0]), truth); },
                   {random_tensor({2, 4}, 42, -0.8, 0.8)});
    }
    // weighted combination of both objectives
    {
        Tensor truth = Tensor::from({1, 4}, {0.2, 0.3, 0.6, 0.7});
        loss_check(
            [&truth](auto& in) {
                Tensor l_mlm = mlm_loss(in[0], {1});
                Tensor l_mpm = giou_loss(box_from_raw(in[1]), truth);
                return total_loss(l_mlm, l_mpm, 1.0);
            },
            {random_tensor({1, 5}, 43), random_tensor({1, 4}, 44, -0.5, 0.5)});
    }
    // classification heads
    loss_check([](auto& in) { return cross_entropy_mean(in[0], {0, kIgnoreLabel, 2, 1}); },
               {random_tensor({4, 3}, 45)});
    // full 2-token model loss w.r.t. transformer weights
    {
        ModelConfig cfg;
        cfg.vocab_size = 12;
        cfg.hidden_size = 8;
        cfg.layers = 1;
        cfg.heads = 2;
        cfg.ffn_size = 12;
        cfg.max_len = 64;
        cfg.max_1d_position = 16;
        cfg.dropout = 0;
        cfg.num_tags = 3;
        cfg.num_classes = 2;
        LayoutEncoder model(cfg, Parameters::init(cfg, 46));
        Rng rng(47);
        for (auto& [name, t] : model.params().items()) {
            const bool gain = name.find("ln") != std::string::npos &&
                              name.find(".g") != std::string::npos;
            for (auto& v : t.data()) v = gain ? 1.0 + 0.2 * rng.normal() : 0.4 * rng.normal();
        }
        TokenSequence s;
        s.doc_id = "toy";
        s.tokens = {6, 7};
        s.word_index = {0, 1};
        s.segment_index = {0, 0};
        s.pos_1d = {1, 2};
        s.box_2d = {dequantize({10, 10, 80, 40}), dequantize({600, 400, 900, 460})};
        s.special_mask = {false, false};
        s.word_boxes = s.box_2d;
        s.segment_boxes = {s.box_2d[0]};
        s.word_texts = {"a", "b"};
        s.word_labels = {"", ""};
        s.word_doc_ref = {{0, 0}, {0, 1}};
        auto f = [&](std::vector<Tensor>&) {
            return mlm_loss(model.mlm_logits(model.encode(s)), {8, kIgnoreLabel});
        };
        std::vector<Tensor> inputs;
        for (auto& [name, t] : model.params().items()) {
            if (name.rfind("layer.", 0) == 0 || name.rfind("head.mlm", 0) == 0 ||
                name.rfind("final_ln", 0) == 0 || name.rfind("bias.", 0) == 0) {
                inputs.push_back(t);
            }
        }
        loss_check(f, inputs);
    }

    out.pass = worst_prim < 1e-6 && worst_loss < 1e-4;
    out.detail = fmt("max primitive error %.2e (< 1e-6), max loss error %.2e (< 1e-4)",
                     worst_prim, worst_loss);
    return out;
}

// ------------------------------------------------------------ criterion 2

// Independent brute force: pixel-grid integration at 1e-3 resolution.
double grid_giou(const BBox& a, const BBox& b) {
    const int n = 1000;
    const double cell = 1.0 / n;
    auto inside = [&](const BBox& box, double x, double y) {
        return x >= box.x1 && x < box.x2 && y >= box.y1 && y < box.y2;
    };
    const int x_lo = static_cast<int>(std::floor(std::min(a.x1, b.x1) * n));
    const int x_hi = static_cast<int>(std::ceil(std::max(a.x2, b.x2) * n));
    const int y_lo = static_cast<int>(std::floor(std::min(a.y1, b.y1) * n));
    const int y_hi = static_cast<int>(std::ceil(std::max(a.y2, b.y2) * n));
    int64_t inter = 0, uni = 0;
    for (int xi = x_lo; xi < x_hi; ++xi) {
        const double x = (xi + 0.5) * cell;
        for (int yi = y_lo; yi < y_hi; ++yi) {
            const double y = (yi + 0.5) * cell;
            const bool ia = inside(a, x, y);
            const bool ib = inside(b, x, y);
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    const double hull = static_cast<double>(x_hi - x_lo) * static_cast<double>(y_hi - y_lo);
    const double iou = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
    const double penalty = hull > 0 ? (hull - uni) / hull : 0.0;
    return iou - penalty;
}

Outcome criterion_giou() {
    Outcome out{2, "GIoU oracle (hand values to 1e-9, grid cross-check to 2e-3)"};
    double worst_hand = 0;
    auto hand = [&](std::vector<double> p, std::vector<double> t, double expect) {
        const double got = giou_loss(Tensor::from({1, 4}, std::move(p)),
                                     Tensor::from({1, 4}, std::move(t)))
                               .value();
        worst_hand = std::max(worst_hand, std::abs(got - expect));
    };
    hand({0.1, 0.2, 0.5, 0.6}, {0.1, 0.2, 0.5, 0.6}, -1.0);
    hand({0.5, 0.5, 1, 1}, {0, 0, 0.5, 0.5}, 0.5);
    hand({0.2, 0.2, 0.6, 0.6}, {0, 0, 0.4, 0.4}, -(1.0 / 7.0 - 0.08 / 0.36));

    Rng rng(1234);
    double worst_grid = 0;
    for (int i = 0; i < 1000; ++i) {
        auto rand_box = [&]() {
            // corners snapped to the grid so cell membership is unambiguous
            const int x1 = static_cast<int>(rng.below(900));
            const int y1 = static_cast<int>(rng.below(900));
            const int x2 =
                x1 + 20 + static_cast<int>(rng.below(static_cast<uint64_t>(980 - x1)));
            const int y2 =
                y1 + 20 + static_cast<int>(rng.below(static_cast<uint64_t>(980 - y1)));
            return BBox{x1 / 1000.0, y1 / 1000.0, x2 / 1000.0, y2 / 1000.0};
        };
        const BBox a = rand_box();
        const BBox b = rand_box();
        const double direct = -giou_loss(Tensor::from({1, 4}, {a.x1, a.y1, a.x2, a.y2}),
                                         Tensor::from({1, 4}, {b.x1, b.y1, b.x2, b.y2}))
                                   .value();
        const double brute = grid_giou(a, b);
        worst_grid = std::max(worst_grid, std::abs(direct - brute));
    }
    out.pass = worst_hand < 1e-9 && worst_grid < 2e-3;
    out.detail = fmt("hand-value error %.2e (< 1e-9), grid deviation %.2e (< 2e-3)",
                     worst_hand, worst_grid);
    return out;
}

// ------------------------------------------------------------ criterion 3

Outcome criterion_masking_stats() {
    Outcome out{3, "masking statistics (25% +-1, 75% +-2, 15% +-1, WWM atomic)"};
    GenSpec spec = GenSpec::defaults();
    spec.doc_count = 2800;  // >= 10k words in every measured bucket
    spec.train_fraction = 1.0;
    spec.dev_fraction = 0.0;
    const CorpusSplits corpus = generate_corpus(spec);
    const Vocabulary vocab = Vocabulary::build(corpus.train);

    int interior = 0, interior_masked = 0, boundary = 0, boundary_masked = 0;
    int eligible = 0, mpm_selected = 0, wwm_violations = 0;
    uint64_t step = 0;
    for (const auto& doc : corpus.train) {
        Document d = assign_positions(normalize_document(doc), OneDMode::kLocal);
        TokenSequence seq = resolve_token_boxes(tokenize(d, vocab, OneDMode::kLocal, 512),
                                                TwoDMode::kSegment);
        const uint64_t seed = derive_seed(99, doc.doc_id, step++);
        const MlmPlan plan = plan_mlm(seq, MlmStrategy::kWwmLam, 0.25, seed);
        const auto masked = plan.masked_word_ids(seq);
        const std::set<int> masked_set(masked.begin(), masked.end());
        const std::vector<bool> is_boundary = seq.boundary_word_mask();
        for (int w = 0; w < seq.num_words(); ++w) {
            if (is_boundary[static_cast<size_t>(w)]) {
                ++boundary;
                boundary_masked += masked_set.count(w) ? 1 : 0;
            } else {
                ++interior;
                interior_masked += masked_set.count(w) ? 1 : 0;
            }
        }
        std::map<int, int> masked_tokens, total_tokens;
        for (int t : plan.masked_token_indices) {
            masked_tokens[seq.word_index[static_cast<size_t>(t)]] += 1;
        }
        for (int t = 0; t < seq.length(); ++t) {
            const int w = seq.word_index[static_cast<size_t>(t)];
            if (w >= 0) total_tokens[w] += 1;
        }
        for (const auto& [w, n] : masked_tokens) {
            if (n != total_tokens[w]) ++wwm_violations;
        }

        const MpmSelection sel = select_mpm(seq, 0.15, seed, masked);
        // rate against the words still eligible after the MLM exclusion
        eligible += seq.num_words() - static_cast<int>(masked_set.size());
        mpm_selected += static_cast<int>(sel.selected_word_ids.size());
    }
    const double ri = static_cast<double>(interior_masked) / interior;
    const double rb = static_cast<double>(boundary_masked) / boundary;
    const double rm = static_cast<double>(mpm_selected) / eligible;
    const bool enough = interior >= 10000 && boundary >= 10000 && eligible >= 10000;
    out.pass = enough && std::abs(ri - 0.25) < 0.01 && std::abs(rb - 0.75) < 0.02 &&
               std::abs(rm - 0.15) < 0.01 && wwm_violations == 0;
    out.detail = fmt("interior %.4f (25%% +-1), boundary %.4f (75%% +-2), mpm %.4f "
                     "(15%% +-1), wwm violations %d, words %d",
                     ri, rb, rm, wwm_violations, interior + boundary);
    return out;
}

// ------------------------------------------------------------ criterion 4

std::string box_split_dump() {
    std::ostringstream os;
    for (int n = 1; n <= 4; ++n) {
        Document d;
        d.doc_id = "split-" + std::to_string(n);
        d.page_width = 1000;
        d.page_height = 100;
        Segment seg;
        seg.segment_id = 0;
        static const char* kTexts[] = {"alpha", "bravo", "candy", "delta"};
        for (int w = 0; w < n; ++w) {
            Word word;
            word.text = kTexts[w];
            word.box = {10.0 + 200.0 * w, 10, 170.0 + 200.0 * w, 40};
            seg.words.push_back(word);
        }
        BBox b = seg.words.front().box;
        for (const auto& w : seg.words) b = BBox::join(b, w.box);
        seg.box = b;
        d.segments.push_back(seg);

        const Document positioned =
            assign_positions(normalize_document(d), OneDMode::kLocal);
        const Vocabulary vocab = Vocabulary::build({positioned});
        const TokenSequence base = resolve_token_boxes(
            tokenize(positioned, vocab, OneDMode::kLocal, 512), TwoDMode::kSegment);

        for (int mask = 0; mask < (1 << n); ++mask) {
            MpmSelection sel;
            int h = 1;
            for (int w = 0; w < n; ++w) {
                if (mask & (1 << w)) {
                    sel.selected_word_ids.push_back(w);
                    sel.pseudo_heights.push_back(h++);
                    sel.target_boxes.push_back(base.word_boxes[static_cast<size_t>(w)]);
                }
            }
            const TokenSequence split = split_segments(base, sel);
            os << "n=" << n << " mask=";
            for (int w = 0; w < n; ++w) os << ((mask >> w) & 1);
            os << " pieces=" << split.num_segments() << " pos=";
            for (int t = 0; t < split.length(); ++t) {
                if (t) os << ",";
                os << split.pos_1d[static_cast<size_t>(t)];
            }
            os << " seg=";
            for (int t = 0; t < split.length(); ++t) {
                if (t) os << ",";
                os << split.segment_index[static_cast<size_t>(t)];
            }
            os << " boxes=";
            for (int s = 0; s < split.num_segments(); ++s) {
                const QuantBox q = quantize(split.segment_boxes[static_cast<size_t>(s)]);
                os << "[" << q.x1 << "," << q.y1 << "," << q.x2 << "," << q.y2 << "]";
            }
            os << "\n";
        }
    }
    return os.str();
}

Outcome criterion_box_split(const fs::path& golden_path) {
    Outcome out{4, "box split conformance (exhaustive 1-4 word patterns, golden-stable)"};

    bool rule_ok = true;
    std::string rule_detail = "";
    for (int n = 1; n <= 4 && rule_ok; ++n) {
        Document d;
        d.doc_id = "rule";
        d.page_width = 1000;
        d.page_height = 100;
        Segment seg;
        seg.segment_id = 0;
        for (int w = 0; w < n; ++w) {
            Word word;
            word.text = "abcde";
            word.box = {10.0 + 120.0 * w, 10, 100.0 + 120.0 * w, 40};
            seg.words.push_back(word);
        }
        BBox b = seg.words.front().box;
        for (const auto& w : seg.words) b = BBox::join(b, w.box);
        seg.box = b;
        d.segments.push_back(seg);
        const Document positioned = assign_positions(normalize_document(d), OneDMode::kLocal);
        const Vocabulary vocab = Vocabulary::build({positioned});
        const TokenSequence base = resolve_token_boxes(
            tokenize(positioned, vocab, OneDMode::kLocal, 512), TwoDMode::kSegment);
        for (int w = 0; w < n; ++w) {
            MpmSelection sel;
            sel.selected_word_ids = {w};
            sel.pseudo_heights = {7};
            sel.target_boxes = {base.word_boxes[static_cast<size_t>(w)]};
            const TokenSequence split = split_segments(base, sel);
            const int expect = n == 1 ? 1 : (w == 0 || w == n - 1 ? 2 : 3);
            if (split.num_segments() != expect) {
                rule_ok = false;
                rule_detail = fmt("n=%d w=%d produced %d pieces, expected %d", n, w,
                                  split.num_segments(), expect);
            }
            std::set<int> seen;
            for (int t = 0; t < split.length(); ++t) {
                const int s = split.segment_index[static_cast<size_t>(t)];
                if (s >= 0 && seen.insert(s).second &&
                    split.pos_1d[static_cast<size_t>(t)] != 1) {
                    rule_ok = false;
                    rule_detail = "a piece does not restart its local positions at 1";
                }
            }
        }
    }

    const std::string dump = box_split_dump();
    std::ifstream gf(golden_path);
    bool golden_ok = false;
    std::string golden_note;
    if (!gf) {
        golden_note = "golden file missing: " + golden_path.string();
    } else {
        std::stringstream ss;
        ss << gf.rdbuf();
        golden_ok = ss.str() == dump;
        if (!golden_ok) golden_note = "dump differs from " + golden_path.string();
    }
    out.pass = rule_ok && golden_ok;
    out.detail = rule_ok ? (golden_ok ? "2-or-3-pieces rule holds; dump matches golden file"
                                      : golden_note)
                         : rule_detail;
    return out;
}

// ------------------------------------------------ criteria 5-7 (trend runs)

struct TrendRuns {
    CorpusSplits corpus;
    GenSpec spec;
    PretrainConfig base;
    FinetuneConfig ft;
    int seeds = 5;
    int jobs = 2;

    std::vector<std::string> names;            // strategy rows
    std::vector<std::vector<double>> scores;   // per-seed test entity F1
    std::vector<double> means;
    std::vector<double> random_scores;
    double random_mean = 0;

    Checkpoint full_checkpoint;  // wwm+lam+mpm, local+segment
    TaskModel full_finetuned;    // its seed-0 fine-tune
};

double mean_of(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return v.empty() ? 0 : m / static_cast<double>(v.size());
}

TrendRuns run_trend_training(int jobs) {
    TrendRuns tr;
    tr.jobs = jobs;
    tr.spec = GenSpec::defaults();
    tr.spec.doc_count = 2000;
    tr.corpus = generate_corpus(tr.spec);

    tr.base.steps = 600;
    tr.base.batch_size = 8;
    tr.base.adam.learning_rate = 5e-4;
    tr.base.seed = 1;

    tr.ft.steps = 300;
    tr.ft.batch_size = 8;
    tr.ft.adam.learning_rate = 1e-3;
    tr.ft.eval_every = 50;
    tr.ft.max_train_docs = 128;
    tr.ft.seed = 10;

    const auto points = sweep_points(SweepAxis::kStrategy, {}, tr.base);
    // criterion 6 compares the chain naive <= wwm <= wwm+lam <= full
    const std::vector<int> wanted{0, 1, 2, 4};
    tr.names.resize(wanted.size());
    tr.scores.resize(wanted.size());
    std::vector<Checkpoint> ckpts(wanted.size());

    parallel_for(static_cast<int>(wanted.size()), jobs, [&](int i) {
        const SweepPoint& p = points[static_cast<size_t>(wanted[static_cast<size_t>(i)])];
        const PretrainResult pre =
            pretrain(p.cfg, tr.corpus.train, tr.spec.entity_tags, tr.spec.doc_classes);
        ckpts[static_cast<size_t>(i)] = pre.checkpoint;
        tr.names[static_cast<size_t>(i)] = p.name;
    });

    const Checkpoint random_ckpt =
        random_checkpoint(tr.base, tr.corpus.train, tr.spec.entity_tags, tr.spec.doc_classes);
    struct Job {
        const Checkpoint* ckpt;
        int strategy;  // -1 = random baseline
        int seed;
    };
    std::vector<Job> jobs_list;
    for (int s = 0; s < tr.seeds; ++s) jobs_list.push_back({&random_ckpt, -1, s});
    for (size_t k = 0; k < ckpts.size(); ++k) {
        for (int s = 0; s < tr.seeds; ++s) {
            jobs_list.push_back({&ckpts[k], static_cast<int>(k), s});
        }
    }
    std::vector<double> results(jobs_list.size(), 0.0);
    std::vector<TaskModel> models(jobs_list.size());
    parallel_for(static_cast<int>(jobs_list.size()), jobs, [&](int i) {
        const Job& job = jobs_list[static_cast<size_t>(i)];
        FinetuneConfig f = tr.ft;
        f.seed = derive_seed(tr.ft.seed, "sweep-seed", static_cast<uint64_t>(job.seed));
        FinetuneResult res = finetune(f, *job.ckpt, tr.corpus.train, tr.corpus.dev);
        results[static_cast<size_t>(i)] =
            evaluate_entities(res.model, tr.corpus.test).entity_level.overall.f1;
        models[static_cast<size_t>(i)] = std::move(res.model);
    });
    size_t cursor = 0;
    for (int s = 0; s < tr.seeds; ++s) tr.random_scores.push_back(results[cursor++]);
    for (size_t k = 0; k < ckpts.size(); ++k) {
        for (int s = 0; s < tr.seeds; ++s) {
            tr.scores[k].push_back(results[cursor]);
            if (k == ckpts.size() - 1 && s == 0) {
                tr.full_finetuned = std::move(models[cursor]);
            }
            ++cursor;
        }
    }
    tr.random_mean = mean_of(tr.random_scores);
    for (const auto& v : tr.scores) tr.means.push_back(mean_of(v));
    tr.full_checkpoint = ckpts.back();
    return tr;
}

Outcome criterion_swap_invariance(const TrendRuns& tr) {
    Outcome out{5, "segment-swap invariance (local) and degradation trend (global)"};
    const std::vector<double> levels{0.0, 0.1, 0.2, 0.3};

    const RobustnessTable local_table =
        robustness_report(tr.full_finetuned, tr.corpus.test, levels, 4242);
    double local_dev = 0;
    for (const auto& row : local_table.rows) {
        local_dev = std::max(local_dev,
                             std::abs(row.entity_level.overall.f1 -
                                      local_table.rows[0].entity_level.overall.f1));
        local_dev = std::max(local_dev,
                             std::abs(row.word_level.overall.f1 -
                                      local_table.rows[0].word_level.overall.f1));
    }

    PretrainConfig gcfg = tr.base;
    gcfg.one_d = OneDMode::kGlobal;
    gcfg.two_d = TwoDMode::kSegment;
    gcfg.strategy = MlmStrategy::kWwm;
    gcfg.enable_mpm = false;
    const PretrainResult gpre =
        pretrain(gcfg, tr.corpus.train, tr.spec.entity_tags, tr.spec.doc_classes);
    std::vector<std::vector<double>> per_seed(static_cast<size_t>(tr.seeds));
    parallel_for(tr.seeds, tr.jobs, [&](int s) {
        FinetuneConfig f = tr.ft;
        f.seed = derive_seed(tr.ft.seed, "sweep-seed", static_cast<uint64_t>(s));
        const FinetuneResult res =
            finetune(f, gpre.checkpoint, tr.corpus.train, tr.corpus.dev);
        const RobustnessTable table =
            robustness_report(res.model, tr.corpus.test, levels, 4242);
        for (const auto& row : table.rows) {
            per_seed[static_cast<size_t>(s)].push_back(row.entity_level.overall.f1);
        }
    });
    std::vector<double> global_means(levels.size(), 0.0);
    for (const auto& seed_rows : per_seed) {
        for (size_t l = 0; l < levels.size(); ++l) global_means[l] += seed_rows[l];
    }
    for (double& v : global_means) v /= tr.seeds;
    bool non_increasing = true;
    for (size_t l = 1; l < global_means.size(); ++l) {
        non_increasing = non_increasing && global_means[l] <= global_means[l - 1] + 1e-12;
    }

    out.pass = local_dev < 1e-6 && non_increasing;
    out.detail = fmt("local row deviation %.2e (< 1e-6); global mean F1 by p_swap: "
                     "%.4f %.4f %.4f %.4f (%s)",
                     local_dev, global_means[0], global_means[1], global_means[2],
                     global_means[3], non_increasing ? "non-increasing" : "NOT monotone");
    return out;
}

Outcome criterion_strategy_trend(const TrendRuns& tr) {
    Outcome out{6, "strategy ablation trend (full >= wwm+lam >= wwm >= naive, gap >= 2pt)"};
    const double naive = tr.means[0], wwm = tr.means[1], lam = tr.means[2],
                 full = tr.means[3];
    const bool chain = full >= lam && lam >= wwm && wwm >= naive;
    const bool gap = (full - naive) >= 0.02;
    out.pass = chain && gap;
    out.detail =
        fmt("naive %.4f <= wwm %.4f <= wwm+lam %.4f <= full %.4f; full-naive %.1f pt",
            naive, wwm, lam, full, (full - naive) * 100);
    return out;
}

Outcome criterion_pretrain_utility(const TrendRuns& tr) {
    Outcome out{7, "pre-training utility (every pretrained mean >= random + 5pt)"};
    double min_gap = 1e9;
    for (double m : tr.means) min_gap = std::min(min_gap, m - tr.random_mean);
    out.pass = min_gap >= 0.05;
    out.detail = fmt("random %.4f; smallest pretrained gap %.1f pt (>= 5)", tr.random_mean,
                     min_gap * 100);
    return out;
}

// ------------------------------------------------------------ criterion 8

Outcome criterion_determinism(const fs::path& work) {
    Outcome out{8, "determinism (manifest rerun reproduces outputs bit-identically)"};
    auto read_bytes = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };

    const fs::path corpus_dir = work / "corpus";
    RunConfig gen = parse_run_config("", {"corpus.doc_count=80", "seed=21"});
    run_command(gen, "gen-corpus", corpus_dir.string());
    const std::string train = (corpus_dir / "gen-corpus" / "corpus.train.jsonl").string();
    const std::string dev = (corpus_dir / "gen-corpus" / "corpus.dev.jsonl").string();
    const std::string test = (corpus_dir / "gen-corpus" / "corpus.test.jsonl").string();

    const std::vector<std::string> overrides{
        "data.train=" + train, "data.dev=" + dev,   "data.test=" + test,
        "pretrain.steps=40",   "seed=21",           "model.hidden_size=64",
        "model.layers=1",      "model.heads=2",     "model.ffn_size=96"};

    RunConfig cfg = parse_run_config("", overrides);
    run_command(cfg, "pretrain", (work / "run1").string());
    run_command(cfg, "pretrain", (work / "run2").string());

    const std::string ckpt1 = read_bytes(work / "run1" / "pretrain" / "checkpoint.bin");
    const std::string ckpt2 = read_bytes(work / "run2" / "pretrain" / "checkpoint.bin");
    const std::string trace1 = read_bytes(work / "run1" / "pretrain" / "trace.csv");
    const std::string trace2 = read_bytes(work / "run2" / "pretrain" / "trace.csv");

    // rerun from the persisted config (what the manifest records)
    RunConfig rerun =
        load_run_config((work / "run1" / "pretrain" / "config.resolved.json").string(), {});
    run_command(rerun, "pretrain", (work / "run3").string());
    const std::string ckpt3 = read_bytes(work / "run3" / "pretrain" / "checkpoint.bin");

    std::vector<std::string> ft_overrides = overrides;
    ft_overrides.push_back("finetune.steps=30");
    ft_overrides.push_back("finetune.checkpoint=" +
                           (work / "run1" / "pretrain" / "checkpoint.bin").string());
    RunConfig ft_cfg = parse_run_config("", ft_overrides);
    run_command(ft_cfg, "finetune", (work / "ft1").string());

    std::vector<std::string> rob_overrides = overrides;
    rob_overrides.push_back("robustness.checkpoint=" +
                            (work / "ft1" / "finetune" / "checkpoint.bin").string());
    RunConfig rob_cfg = parse_run_config("", rob_overrides);
    run_command(rob_cfg, "robustness", (work / "rob1").string());
    run_command(rob_cfg, "robustness", (work / "rob2").string());
    const std::string rob1 = read_bytes(work / "rob1" / "robustness" / "robustness.csv");
    const std::string rob2 = read_bytes(work / "rob2" / "robustness" / "robustness.csv");

    const bool ok = !ckpt1.empty() && ckpt1 == ckpt2 && ckpt1 == ckpt3 &&
                    trace1 == trace2 && !rob1.empty() && rob1 == rob2;
    out.pass = ok;
    out.detail = fmt("checkpoint %zu bytes x3 %s; traces %s; robustness reports %s",
                     ckpt1.size(),
                     (ckpt1 == ckpt2 && ckpt1 == ckpt3) ? "identical" : "DIFFER",
                     trace1 == trace2 ? "identical" : "DIFFER",
                     rob1 == rob2 ? "identical" : "DIFFER");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    int jobs = std::max(1u, std::thread::hardware_concurrency());
    bool write_golden = false;
    fs::path out_dir =
        fs::temp_directory_path() / ("layoutkit-acceptance-" + std::to_string(::getpid()));
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::atoi(tok.c_str()));
        } else if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc) {
            jobs = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
            out_dir = argv[++i];
        } else if (std::strcmp(argv[i], "--write-golden") == 0) {
            write_golden = true;
        } else {
            std::fprintf(stderr,
                         "usage: acceptance [--only 1,2] [--jobs N] [--out DIR] "
                         "[--write-golden]\n");
            return 2;
        }
    }
    const fs::path golden = fs::path(ACCEPTANCE_GOLDEN_DIR) / "box_split.golden";
    if (write_golden) {
        std::ofstream f(golden);
        f << box_split_dump();
        std::printf("wrote %s\n", golden.string().c_str());
        return 0;
    }

    auto wanted = [&](int id) { return only.empty() || only.count(id); };
    fs::create_directories(out_dir);

    std::vector<Outcome> outcomes;
    auto run = [&](auto&& fn, auto&&... args) {
        const double t0 = now_s();
        Outcome o = fn(std::forward<decltype(args)>(args)...);
        o.seconds = now_s() - t0;
        std::printf("%s criterion %d: %s -- %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", o.id,
                    o.name.c_str(), o.detail.c_str(), o.seconds);
        std::fflush(stdout);
        outcomes.push_back(std::move(o));
    };

    if (wanted(1)) run(criterion_gradients);
    if (wanted(2)) run(criterion_giou);
    if (wanted(3)) run(criterion_masking_stats);
    if (wanted(4)) run(criterion_box_split, golden);

    if (wanted(5) || wanted(6) || wanted(7)) {
        const double t0 = now_s();
        std::printf("[trend] training strategy and baseline models (jobs=%d)...\n", jobs);
        std::fflush(stdout);
        const TrendRuns tr = run_trend_training(jobs);
        std::printf("[trend] training done in %.0fs\n", now_s() - t0);
        std::fflush(stdout);
        if (wanted(6)) run(criterion_strategy_trend, tr);
        if (wanted(7)) run(criterion_pretrain_utility, tr);
        if (wanted(5)) run(criterion_swap_invariance, tr);
    }
    if (wanted(8)) run(criterion_determinism, out_dir / "determinism");

    int failed = 0;
    for (const auto& o : outcomes) failed += o.pass ? 0 : 1;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(outcomes.size()) - failed,
                outcomes.size());
    std::error_code ec;
    fs::remove_all(out_dir, ec);
    return failed == 0 ? 0 : 1;
}

#include "layoutkit/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

using ad::Tensor;
using nlohmann::json;

void PretrainConfig::validate() const {
    if (!(p_mlm > 0.0 && p_mlm < 1.0)) throw ConfigError("pretrain.p_mlm must be in (0,1)");
    if (!(p_mpm > 0.0 && p_mpm < 1.0)) throw ConfigError("pretrain.p_mpm must be in (0,1)");
    if (lambda < 0.0) throw ConfigError("pretrain.lambda must be >= 0");
    if (steps < 0 || batch_size <= 0) throw ConfigError("pretrain.steps/batch_size invalid");
    if (adam.learning_rate <= 0.0) throw ConfigError("pretrain.learning_rate must be positive");
    if (enable_mpm && (one_d != OneDMode::kLocal || two_d != TwoDMode::kSegment)) {
        throw ConfigError("pretrain.enable_mpm requires local 1D and segment 2D positions "
                          "(box split re-derives local positions and segment boxes)");
    }
}

void FinetuneConfig::validate() const {
    if (steps < 0 || batch_size <= 0) throw ConfigError("finetune.steps/batch_size invalid");
    if (adam.learning_rate <= 0.0) throw ConfigError("finetune.learning_rate must be positive");
    if (eval_every <= 0) throw ConfigError("finetune.eval_every must be positive");
    if (max_train_docs < 0) throw ConfigError("finetune.max_train_docs must be >= 0");
}

FinetuneTask parse_task(const std::string& s) {
    if (s == "entities") return FinetuneTask::kEntities;
    if (s == "classification") return FinetuneTask::kClassification;
    throw ConfigError("unknown task '" + s + "' (expected 'entities' or 'classification')");
}

SweepAxis parse_sweep_axis(const std::string& s) {
    if (s == "position") return SweepAxis::kPosition;
    if (s == "strategy") return SweepAxis::kStrategy;
    if (s == "p_mlm") return SweepAxis::kPMlm;
    if (s == "p_mpm") return SweepAxis::kPMpm;
    throw ConfigError("unknown sweep axis '" + s + "'");
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream os;
    os << "step,loss_mlm,loss_mpm,loss_total\n";
    char buf[128];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.step, row.mlm, row.mpm,
                      row.total);
        os << buf;
    }
    return os.str();
}

namespace {

json meta_for_run(const PretrainConfig& cfg, const Vocabulary& vocab,
                  const std::vector<std::string>& tags,
                  const std::vector<std::string>& classes) {
    json meta;
    meta["one_d"] = to_string(cfg.one_d);
    meta["two_d"] = to_string(cfg.two_d);
    meta["strategy"] = to_string(cfg.strategy);
    meta["enable_mpm"] = cfg.enable_mpm;
    meta["p_mlm"] = cfg.p_mlm;
    meta["p_mpm"] = cfg.p_mpm;
    meta["lambda"] = cfg.lambda;
    meta["seed"] = cfg.seed;
    meta["vocab"] = std::vector<std::string>(vocab.pieces().begin() + Vocabulary::kNumSpecials,
                                             vocab.pieces().end());
    meta["entity_tags"] = tags;
    meta["doc_classes"] = classes;
    return meta;
}

TokenSequence prepare(const Document& doc, const Vocabulary& vocab, OneDMode one_d,
                      TwoDMode two_d, int max_len) {
    Document d = normalize_document(doc);
    d = assign_positions(d, one_d);
    TokenSequence seq = tokenize(d, vocab, one_d, max_len);
    return resolve_token_boxes(seq, two_d);
}

// Per-document loss graph for one pre-training step. Returns (mlm, mpm,
// total) values; gradient flows through `loss_scaled` which the caller
// backpropagates.
struct DocStepLoss {
    Tensor scaled;
    double mlm = 0.0;
    double mpm = 0.0;
    double total = 0.0;
    bool has_mpm = false;
};

DocStepLoss pretrain_doc_loss(const LayoutEncoder& model, const TokenSequence& base,
                              const PretrainConfig& cfg, uint64_t doc_seed, double weight) {
    // MLM plan; resample on the (rare) empty draw, then force one word.
    MlmPlan plan;
    bool have_plan = false;
    for (int attempt = 0; attempt < 16 && !have_plan; ++attempt) {
        plan = plan_mlm(base, cfg.strategy, cfg.p_mlm,
                        derive_seed(doc_seed, "attempt", static_cast<uint64_t>(attempt)));
        have_plan = !plan.masked_token_indices.empty();
    }
    if (!have_plan) {
        plan.strategy = cfg.strategy;
        plan.actions.assign(static_cast<size_t>(base.length()), MaskAction::kNone);
        plan.labels.assign(static_cast<size_t>(base.length()), kIgnoreLabel);
        for (int t = 0; t < base.length(); ++t) {
            if (base.word_index[static_cast<size_t>(t)] == 0) {
                plan.masked_token_indices.push_back(t);
                plan.labels[static_cast<size_t>(t)] = base.tokens[static_cast<size_t>(t)];
            }
        }
    }
    MaskedSequence masked = apply_mlm(base, plan, ReplacementPolicy{},
                                      model.config().vocab_size, doc_seed);

    TokenSequence input = masked.seq;
    MpmSelection sel;
    BoxLabels box_labels;
    if (cfg.enable_mpm) {
        sel = select_mpm(base, cfg.p_mpm, doc_seed, plan.masked_word_ids(base));
        if (!sel.selected_word_ids.empty()) {
            input = split_segments(input, sel);
            auto [boxed, labels] = apply_box_masks(input, sel);
            input = std::move(boxed);
            box_labels = std::move(labels);
        }
    }

    EncodeOptions opt;
    opt.training = true;
    opt.dropout_seed = derive_seed(doc_seed, "enc-drop");
    Tensor states = model.encode(input, opt);

    DocStepLoss out;
    Tensor l_mlm = mlm_loss(model.mlm_logits(states), masked.labels);
    out.mlm = l_mlm.value();
    Tensor l_total = l_mlm;
    if (cfg.enable_mpm && !sel.selected_word_ids.empty()) {
        const std::vector<int> positions = box_labels.labeled_positions();
        std::vector<BBox> targets;
        targets.reserve(positions.size());
        for (int t : positions) targets.push_back(*box_labels.at[static_cast<size_t>(t)]);
        Tensor l_mpm = giou_loss(model.mpm_predict(states, positions),
                                 boxes_to_tensor(targets));
        out.mpm = l_mpm.value();
        out.has_mpm = true;
        l_total = total_loss(l_mlm, l_mpm, cfg.lambda);
    }
    out.total = l_total.value();
    out.scaled = ad::scale(l_total, weight);
    return out;
}

}  // namespace

PretrainResult pretrain(const PretrainConfig& cfg, const std::vector<Document>& corpus,
                        const std::vector<std::string>& entity_tags,
                        const std::vector<std::string>& doc_classes) {
    cfg.validate();
    if (corpus.empty()) throw ConfigError("pretrain: empty corpus");

    const Vocabulary vocab = Vocabulary::build(corpus);
    ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    mc.num_tags = 1 + 2 * static_cast<int>(entity_tags.size());
    mc.num_classes = static_cast<int>(doc_classes.size());
    mc.validate();

    std::vector<TokenSequence> prepared;
    prepared.reserve(corpus.size());
    for (const auto& doc : corpus) {
        prepared.push_back(prepare(doc, vocab, cfg.one_d, cfg.two_d, mc.max_len));
    }

    LayoutEncoder model(mc, Parameters::init(mc, cfg.seed));
    Adam optimizer(model.params(), cfg.adam);

    PretrainResult result;
    const double weight = 1.0 / static_cast<double>(cfg.batch_size);
    for (int step = 0; step < cfg.steps; ++step) {
        Rng batch_rng(derive_seed(cfg.seed, "batch", static_cast<uint64_t>(step)));
        double sum_mlm = 0.0, sum_mpm = 0.0, sum_total = 0.0;
        int mpm_docs = 0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const size_t di = static_cast<size_t>(batch_rng.below(prepared.size()));
            const uint64_t doc_seed = derive_seed(cfg.seed, corpus[di].doc_id,
                                                  static_cast<uint64_t>(step),
                                                  static_cast<uint64_t>(b));
            DocStepLoss loss =
                pretrain_doc_loss(model, prepared[di], cfg, doc_seed, weight);
            if (!std::isfinite(loss.total)) {
                throw RuntimeError("pretraining diverged (non-finite loss) at step " +
                                   std::to_string(step));
            }
            ad::backward(loss.scaled);
            sum_mlm += loss.mlm;
            sum_total += loss.total;
            if (loss.has_mpm) {
                sum_mpm += loss.mpm;
                ++mpm_docs;
            }
        }
        optimizer.step();
        TraceRow row;
        row.step = step;
        row.mlm = sum_mlm / cfg.batch_size;
        row.mpm = mpm_docs > 0 ? sum_mpm / mpm_docs : 0.0;
        row.total = sum_total / cfg.batch_size;
        result.trace.push_back(row);
    }
    model.params().check_finite();

    result.checkpoint.config = mc;
    result.checkpoint.params = std::move(model.params());
    result.checkpoint.manifest_json = meta_for_run(cfg, vocab, entity_tags, doc_classes).dump();
    return result;
}

Checkpoint random_checkpoint(const PretrainConfig& cfg, const std::vector<Document>& corpus,
                             const std::vector<std::string>& entity_tags,
                             const std::vector<std::string>& doc_classes) {
    cfg.validate();
    if (corpus.empty()) throw ConfigError("random_checkpoint: empty corpus");
    const Vocabulary vocab = Vocabulary::build(corpus);
    ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    mc.num_tags = 1 + 2 * static_cast<int>(entity_tags.size());
    mc.num_classes = static_cast<int>(doc_classes.size());
    mc.validate();
    Checkpoint ckpt;
    ckpt.config = mc;
    ckpt.params = Parameters::init(mc, cfg.seed);
    ckpt.manifest_json = meta_for_run(cfg, vocab, entity_tags, doc_classes).dump();
    return ckpt;
}

TaskModel TaskModel::from_checkpoint(const Checkpoint& ckpt) {
    json meta = json::parse(ckpt.manifest_json);
    std::vector<std::string> pieces = meta.at("vocab").get<std::vector<std::string>>();
    TaskModel m{LayoutEncoder(ckpt.config, ckpt.params.clone()),
                parse_one_d_mode(meta.at("one_d").get<std::string>()),
                parse_two_d_mode(meta.at("two_d").get<std::string>()),
                Vocabulary(std::move(pieces)),
                BioLabels(meta.at("entity_tags").get<std::vector<std::string>>()),
                meta.at("doc_classes").get<std::vector<std::string>>(),
                ckpt.manifest_json};
    if (m.vocab.size() != ckpt.config.vocab_size) {
        throw ConfigError("checkpoint vocab does not match its model config");
    }
    return m;
}

Checkpoint TaskModel::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.config = encoder.config();
    ckpt.params = encoder.params().clone();
    ckpt.manifest_json = meta_json;
    return ckpt;
}

TokenSequence TaskModel::featurize(const Document& doc) const {
    return prepare(doc, vocab, one_d, two_d, encoder.config().max_len);
}

namespace {

// BIO label id per document word reference, from the gold spans.
std::map<std::pair<int, int>, int> gold_word_labels(const Document& doc, const BioLabels& bio) {
    std::map<std::pair<int, int>, int> labels;
    for (const auto& span : gold_spans(doc)) {
        for (size_t i = 0; i < span.words.size(); ++i) {
            labels[span.words[i]] =
                i == 0 ? bio.begin_label(span.tag) : bio.inside_label(span.tag);
        }
    }
    return labels;
}

std::vector<int> entity_token_labels(const TaskModel& model, const TokenSequence& seq,
                                     const Document& doc) {
    const auto word_gold = gold_word_labels(doc, model.bio);
    std::vector<int> labels(static_cast<size_t>(seq.length()), kIgnoreLabel);
    const auto first = seq.word_first_token();
    for (int w = 0; w < seq.num_words(); ++w) {
        const auto it = word_gold.find(seq.word_doc_ref[static_cast<size_t>(w)]);
        labels[static_cast<size_t>(first[static_cast<size_t>(w)])] =
            it == word_gold.end() ? model.bio.o_label() : it->second;
    }
    return labels;
}

int class_index(const TaskModel& model, const Document& doc) {
    for (size_t i = 0; i < model.doc_classes.size(); ++i) {
        if (model.doc_classes[i] == doc.doc_class) return static_cast<int>(i);
    }
    throw ConfigError("document '" + doc.doc_id + "' has class '" + doc.doc_class +
                      "' outside the model's class schema");
}

double dev_metric(const TaskModel& model, const FinetuneConfig& cfg,
                  const std::vector<Document>& dev_docs) {
    if (dev_docs.empty()) return 0.0;
    if (cfg.task == FinetuneTask::kEntities) {
        return evaluate_entities(model, dev_docs).entity_level.overall.f1;
    }
    return evaluate_classification(model, dev_docs).accuracy;
}

}  // namespace

FinetuneResult finetune(const FinetuneConfig& cfg, const Checkpoint& start,
                        const std::vector<Document>& train_docs,
                        const std::vector<Document>& dev_docs) {
    cfg.validate();
    if (train_docs.empty()) throw ConfigError("finetune: empty training set");

    TaskModel model = TaskModel::from_checkpoint(start);
    std::vector<Document> train(train_docs);
    if (cfg.max_train_docs > 0 && static_cast<int>(train.size()) > cfg.max_train_docs) {
        train.resize(static_cast<size_t>(cfg.max_train_docs));
    }

    // Task/label sanity before any work.
    if (cfg.task == FinetuneTask::kEntities) {
        bool any = false;
        for (const auto& d : train) any = any || !gold_spans(d).empty();
        if (!any) throw ConfigError("finetune: entity task but no entity labels in training set");
    } else {
        for (const auto& d : train) class_index(model, d);
    }

    std::vector<TokenSequence> prepared;
    std::vector<std::vector<int>> labels;
    prepared.reserve(train.size());
    for (const auto& doc : train) {
        prepared.push_back(model.featurize(doc));
        if (cfg.task == FinetuneTask::kEntities) {
            labels.push_back(entity_token_labels(model, prepared.back(), doc));
        } else {
            labels.push_back({class_index(model, doc)});
        }
    }

    Adam optimizer(model.encoder.params(), cfg.adam);
    FinetuneResult result;
    result.model = TaskModel::from_checkpoint(start);  // holds best weights
    auto record_best = [&](int step) {
        const double metric = dev_metric(model, cfg, dev_docs);
        result.dev_curve.emplace_back(step, metric);
        if (metric > result.best_dev || result.best_step < 0) {
            result.best_dev = metric;
            result.best_step = step;
            result.model.encoder.params() = model.encoder.params().clone();
        }
    };
    record_best(0);

    const double weight = 1.0 / static_cast<double>(cfg.batch_size);
    for (int step = 0; step < cfg.steps; ++step) {
        Rng batch_rng(derive_seed(cfg.seed, "ft-batch", static_cast<uint64_t>(step)));
        for (int b = 0; b < cfg.batch_size; ++b) {
            const size_t di = static_cast<size_t>(batch_rng.below(prepared.size()));
            EncodeOptions opt;
            opt.training = true;
            opt.dropout_seed = derive_seed(cfg.seed, train[di].doc_id,
                                           static_cast<uint64_t>(step),
                                           static_cast<uint64_t>(b));
            Tensor states = model.encoder.encode(prepared[di], opt);
            Tensor loss;
            if (cfg.task == FinetuneTask::kEntities) {
                loss = cross_entropy_mean(model.encoder.tag_logits(states), labels[di]);
            } else {
                loss = cross_entropy_mean(model.encoder.class_logits(states), labels[di]);
            }
            if (!std::isfinite(loss.value())) {
                throw RuntimeError("fine-tuning diverged (non-finite loss) at step " +
                                   std::to_string(step));
            }
            ad::backward(ad::scale(loss, weight));
        }
        optimizer.step();
        if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) {
            record_best(step + 1);
        }
    }
    return result;
}

std::vector<EntitySpan> predict_entities(const TaskModel& model, const Document& doc) {
    ad::NoGradGuard ng;
    const TokenSequence seq = model.featurize(doc);
    const Tensor states = model.encoder.encode(seq);
    const Tensor logits = model.encoder.tag_logits(states);
    const auto first = seq.word_first_token();
    const int k = logits.dim(1);

    struct WordPred {
        std::pair<int, int> ref;
        int label;
    };
    std::vector<WordPred> preds;
    preds.reserve(static_cast<size_t>(seq.num_words()));
    for (int w = 0; w < seq.num_words(); ++w) {
        const int t = first[static_cast<size_t>(w)];
        int best = 0;
        double best_v = logits.at({t, 0});
        for (int c = 1; c < k; ++c) {
            const double v = logits.at({t, c});
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        preds.push_back({seq.word_doc_ref[static_cast<size_t>(w)], best});
    }

    // Spans are decoded along the document's own reading order, not the
    // (possibly perturbed) serialization, mirroring how gold spans are
    // derived; a serialization change can then only affect spans through the
    // model's per-word predictions.
    Document canon = doc;
    canon.serial_order.clear();
    if (!canon.normalized) canon = normalize_document(canon);
    const std::vector<int> order = reading_order(canon);
    std::vector<int> rank(order.size(), 0);
    for (size_t i = 0; i < order.size(); ++i) {
        rank[static_cast<size_t>(order[i])] = static_cast<int>(i);
    }
    std::sort(preds.begin(), preds.end(), [&](const WordPred& a, const WordPred& b) {
        const int ra = rank[static_cast<size_t>(a.ref.first)];
        const int rb = rank[static_cast<size_t>(b.ref.first)];
        if (ra != rb) return ra < rb;
        return a.ref.second < b.ref.second;
    });
    std::vector<int> word_labels;
    std::vector<std::pair<int, int>> refs;
    for (const auto& p : preds) {
        word_labels.push_back(p.label);
        refs.push_back(p.ref);
    }
    return decode_bio(model.bio, word_labels, refs);
}

std::string predict_class(const TaskModel& model, const Document& doc) {
    ad::NoGradGuard ng;
    const TokenSequence seq = model.featurize(doc);
    const Tensor states = model.encoder.encode(seq);
    const Tensor logits = model.encoder.class_logits(states);
    int best = 0;
    for (int c = 1; c < logits.dim(1); ++c) {
        if (logits.at({0, c}) > logits.at({0, best})) best = c;
    }
    return model.doc_classes[static_cast<size_t>(best)];
}

EntityEval evaluate_entities(const TaskModel& model, const std::vector<Document>& docs) {
    std::vector<std::vector<EntitySpan>> gold, pred;
    gold.reserve(docs.size());
    pred.reserve(docs.size());
    for (const auto& doc : docs) {
        gold.push_back(gold_spans(doc));
        pred.push_back(predict_entities(model, doc));
    }
    EntityEval out;
    out.word_level = span_f1(gold, pred, MatchLevel::kWord, model.bio.tags());
    out.entity_level = span_f1(gold, pred, MatchLevel::kEntity, model.bio.tags());
    return out;
}

EvalReport evaluate_classification(const TaskModel& model, const std::vector<Document>& docs) {
    std::vector<std::string> gold, pred;
    for (const auto& doc : docs) {
        gold.push_back(doc.doc_class);
        pred.push_back(predict_class(model, doc));
    }
    return classification_report(gold, pred, model.doc_classes);
}

Document segment_swap(const Document& doc, double p_swap, uint64_t seed) {
    if (p_swap < 0.0 || p_swap > 1.0) throw ConfigError("p_swap must be in [0,1]");
    Document out = normalize_document(doc);
    const auto lines = group_lines(out);
    std::vector<int> order;
    for (size_t li = 0; li < lines.size(); ++li) {
        std::vector<int> line = lines[li];
        if (line.size() >= 2) {
            // Threshold draw independent of p_swap: the swapped-line set at a
            // lower probability is a subset of the set at a higher one.
            Rng rng(derive_seed(seed, out.doc_id, static_cast<uint64_t>(li)));
            if (rng.uniform() < p_swap) std::reverse(line.begin(), line.end());
        }
        order.insert(order.end(), line.begin(), line.end());
    }
    out.serial_order = std::move(order);
    return out;
}

RobustnessTable robustness_report(const TaskModel& model, const std::vector<Document>& docs,
                                  const std::vector<double>& p_swap_levels, uint64_t seed) {
    RobustnessTable table;
    std::vector<std::vector<EntitySpan>> gold;
    gold.reserve(docs.size());
    for (const auto& doc : docs) gold.push_back(gold_spans(doc));

    for (double p : p_swap_levels) {
        std::vector<std::vector<EntitySpan>> pred;
        pred.reserve(docs.size());
        for (const auto& doc : docs) {
            pred.push_back(predict_entities(model, segment_swap(doc, p, seed)));
        }
        RobustnessRow row;
        row.p_swap = p;
        row.word_level = span_f1(gold, pred, MatchLevel::kWord, model.bio.tags());
        row.entity_level = span_f1(gold, pred, MatchLevel::kEntity, model.bio.tags());
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ------------------------------------------------------------------- sweeps

std::vector<SweepPoint> sweep_points(SweepAxis axis, const std::vector<double>& grid,
                                     const PretrainConfig& base) {
    std::vector<SweepPoint> points;
    switch (axis) {
        case SweepAxis::kPosition: {
            // Position comparisons isolate the layout inputs: MLM with whole
            // word masking only.
            for (OneDMode od : {OneDMode::kGlobal, OneDMode::kLocal}) {
                for (TwoDMode td : {TwoDMode::kWord, TwoDMode::kSegment}) {
                    PretrainConfig cfg = base;
                    cfg.one_d = od;
                    cfg.two_d = td;
                    cfg.strategy = MlmStrategy::kWwm;
                    cfg.enable_mpm = false;
                    points.push_back({to_string(od) + "+" + to_string(td), cfg});
                }
            }
            break;
        }
        case SweepAxis::kStrategy: {
            struct Row {
                const char* name;
                MlmStrategy strategy;
                bool mpm;
            };
            const Row rows[] = {{"naive", MlmStrategy::kNaive, false},
                                {"wwm", MlmStrategy::kWwm, false},
                                {"wwm+lam", MlmStrategy::kWwmLam, false},
                                {"wwm+mpm", MlmStrategy::kWwm, true},
                                {"wwm+lam+mpm", MlmStrategy::kWwmLam, true}};
            for (const auto& r : rows) {
                PretrainConfig cfg = base;
                cfg.strategy = r.strategy;
                cfg.enable_mpm = r.mpm;
                points.push_back({r.name, cfg});
            }
            break;
        }
        case SweepAxis::kPMlm:
        case SweepAxis::kPMpm: {
            if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
            for (double v : grid) {
                PretrainConfig cfg = base;
                char buf[48];
                if (axis == SweepAxis::kPMlm) {
                    cfg.p_mlm = v;
                    std::snprintf(buf, sizeof(buf), "p_mlm=%g", v);
                } else {
                    cfg.p_mpm = v;
                    cfg.enable_mpm = true;
                    std::snprintf(buf, sizeof(buf), "p_mpm=%g", v);
                }
                points.push_back({buf, cfg});
            }
            break;
        }
    }
    return points;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

SweepResult ablation_sweep(const SweepConfig& sweep, const PretrainConfig& base,
                           const FinetuneConfig& ft, const CorpusSplits& corpus,
                           const std::vector<std::string>& entity_tags,
                           const std::vector<std::string>& doc_classes) {
    if (sweep.finetune_seeds <= 0) throw ConfigError("sweep.finetune_seeds must be positive");
    const std::vector<SweepPoint> points = sweep_points(sweep.axis, sweep.grid, base);

    SweepResult result;
    result.rows.resize(points.size());
    parallel_for(static_cast<int>(points.size()), sweep.jobs, [&](int pi) {
        const SweepPoint& point = points[static_cast<size_t>(pi)];
        const PretrainResult pre =
            pretrain(point.cfg, corpus.train, entity_tags, doc_classes);
        SweepRow row;
        row.name = point.name;
        for (int s = 0; s < sweep.finetune_seeds; ++s) {
            FinetuneConfig fcfg = ft;
            fcfg.seed = derive_seed(ft.seed, "sweep-seed", static_cast<uint64_t>(s));
            const FinetuneResult fres =
                finetune(fcfg, pre.checkpoint, corpus.train, corpus.dev);
            double score = 0.0;
            if (fcfg.task == FinetuneTask::kEntities) {
                score = evaluate_entities(fres.model, corpus.test).entity_level.overall.f1;
            } else {
                score = evaluate_classification(fres.model, corpus.test).accuracy;
            }
            row.seed_scores.push_back(score);
        }
        double sum = 0.0;
        for (double v : row.seed_scores) sum += v;
        row.mean = sum / static_cast<double>(row.seed_scores.size());
        double ss = 0.0;
        for (double v : row.seed_scores) ss += (v - row.mean) * (v - row.mean);
        row.stddev = row.seed_scores.size() > 1
                         ? std::sqrt(ss / static_cast<double>(row.seed_scores.size() - 1))
                         : 0.0;
        result.rows[static_cast<size_t>(pi)] = std::move(row);
    });
    return result;
}

std::string SweepResult::table() const {
    std::ostringstream os;
    os << "setting              mean      std   seeds\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %7.4f  %7.4f  ", row.name.c_str(), row.mean,
                      row.stddev);
        os << buf;
        for (size_t i = 0; i < row.seed_scores.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.4f", i ? " " : "", row.seed_scores[i]);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    os << "setting,mean,std,seed_scores\n";
    for (const auto& row : rows) {
        os << row.name << "," << row.mean << "," << row.stddev << ",";
        for (size_t i = 0; i < row.seed_scores.size(); ++i) {
            os << (i ? ";" : "") << row.seed_scores[i];
        }
        os << "\n";
    }
    return os.str();
}

std::string SweepResult::to_json() const {
    json j = json::array();
    for (const auto& row : rows) {
        j.push_back({{"setting", row.name},
                     {"mean", row.mean},
                     {"std", row.stddev},
                     {"seed_scores", row.seed_scores}});
    }
    return j.dump(2);
}

}  // namespace layoutkit

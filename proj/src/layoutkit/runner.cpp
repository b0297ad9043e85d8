#include "layoutkit/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

void ensure_new(const fs::path& path) {
    if (fs::exists(path)) {
        throw RuntimeError("refusing to overwrite existing '" + path.string() +
                           "' (run directories are append-only)");
    }
}

void write_new_file(const fs::path& path, const std::string& content) {
    ensure_new(path);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RuntimeError("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw RuntimeError("failed writing '" + path.string() + "'");
}

fs::path command_dir(const std::string& out_root, const std::string& command) {
    fs::path dir = fs::path(out_root) / command;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeError("cannot create run directory '" + dir.string() + "'");
    return dir;
}

json manifest_base(const RunConfig& cfg, const std::string& command) {
    json m;
    m["artifact_version"] = kArtifactVersion;
    m["command"] = command;
    m["config"] = json::parse(cfg.resolved_json.empty() ? "{}" : cfg.resolved_json);
    m["config_hash"] = fnv1a(cfg.resolved_json);
    m["seed"] = cfg.seed;
    return m;
}

std::vector<Document> load_split(const std::string& path, const char* what) {
    if (path.empty()) {
        throw ConfigError(std::string("data.") + what + " is required for this command");
    }
    return load_corpus(path);
}

Checkpoint load_required_checkpoint(const std::string& path, const char* key) {
    if (path.empty()) throw ConfigError(std::string(key) + " is required for this command");
    return load_checkpoint(path);
}

std::string run_gen_corpus(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    const CorpusSplits splits = generate_corpus(cfg.corpus);
    const fs::path dir = command_dir(out_root, "gen-corpus");
    std::vector<Document> all;
    for (const auto* part : {&splits.train, &splits.dev, &splits.test}) {
        all.insert(all.end(), part->begin(), part->end());
    }

    write_new_file(dir / "corpus.train.jsonl", corpus_to_jsonl(splits.train));
    write_new_file(dir / "corpus.dev.jsonl", corpus_to_jsonl(splits.dev));
    write_new_file(dir / "corpus.test.jsonl", corpus_to_jsonl(splits.test));
    std::string stats_text = "(empty corpus)\n";
    if (!all.empty()) {
        const CorpusStats stats = corpus_stats(all, cfg.corpus.entity_tags);
        stats_text = stats.table();
        write_new_file(dir / "stats.json", stats.to_json());
    }
    write_new_file(dir / "stats.txt", stats_text);
    manifest["outputs"] = {"corpus.train.jsonl", "corpus.dev.jsonl", "corpus.test.jsonl",
                           "stats.txt"};
    std::ostringstream os;
    os << "wrote " << splits.train.size() << "/" << splits.dev.size() << "/"
       << splits.test.size() << " train/dev/test documents under " << dir.string() << "\n"
       << stats_text;
    return os.str();
}

std::string run_pretrain(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    const std::vector<Document> train = load_split(cfg.data.train, "train");
    manifest["corpus_hash"] = file_content_hash(cfg.data.train);

    const PretrainResult res =
        pretrain(cfg.pretrain, train, cfg.corpus.entity_tags, cfg.corpus.doc_classes);
    const fs::path dir = command_dir(out_root, "pretrain");
    ensure_new(dir / "checkpoint.bin");
    save_checkpoint(res.checkpoint, (dir / "checkpoint.bin").string());
    write_new_file(dir / "trace.csv", trace_to_csv(res.trace));
    manifest["outputs"] = {"checkpoint.bin", "trace.csv"};

    std::ostringstream os;
    os << "pre-trained " << cfg.pretrain.steps << " steps on " << train.size()
       << " documents\n";
    if (!res.trace.empty()) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "first step total loss %.6f, last step %.6f\n",
                      res.trace.front().total, res.trace.back().total);
        os << buf;
    }
    os << "checkpoint: " << (dir / "checkpoint.bin").string() << "\n";
    return os.str();
}

std::string run_finetune(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    const Checkpoint start =
        load_required_checkpoint(cfg.finetune_checkpoint, "finetune.checkpoint");
    const std::vector<Document> train = load_split(cfg.data.train, "train");
    std::vector<Document> dev;
    if (!cfg.data.dev.empty()) dev = load_corpus(cfg.data.dev);
    manifest["corpus_hash"] = file_content_hash(cfg.data.train);

    const FinetuneResult res = finetune(cfg.finetune, start, train, dev);
    const fs::path dir = command_dir(out_root, "finetune");
    ensure_new(dir / "checkpoint.bin");
    save_checkpoint(res.model.to_checkpoint(), (dir / "checkpoint.bin").string());
    std::ostringstream curve;
    curve << "step,dev_metric\n";
    for (const auto& [step, metric] : res.dev_curve) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%.17g\n", step, metric);
        curve << buf;
    }
    write_new_file(dir / "dev_curve.csv", curve.str());
    manifest["outputs"] = {"checkpoint.bin", "dev_curve.csv"};

    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "fine-tuned %d steps; best dev metric %.4f at step %d\n",
                  cfg.finetune.steps, res.best_dev, res.best_step);
    os << buf << "checkpoint: " << (dir / "checkpoint.bin").string() << "\n";
    return os.str();
}

const std::string& split_path(const RunConfig& cfg, const std::string& split) {
    if (split == "train") return cfg.data.train;
    if (split == "dev") return cfg.data.dev;
    return cfg.data.test;
}

std::string run_eval(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    const Checkpoint ckpt = load_required_checkpoint(cfg.eval_checkpoint, "eval.checkpoint");
    const std::vector<Document> docs =
        load_split(split_path(cfg, cfg.eval_split), cfg.eval_split.c_str());
    const TaskModel model = TaskModel::from_checkpoint(ckpt);
    const fs::path dir = command_dir(out_root, "eval");

    std::ostringstream os;
    if (cfg.eval_task == FinetuneTask::kEntities) {
        const EntityEval ev = evaluate_entities(model, docs);
        write_new_file(dir / "report.word.csv", ev.word_level.to_csv());
        write_new_file(dir / "report.entity.csv", ev.entity_level.to_csv());
        write_new_file(dir / "report.word.json", ev.word_level.to_json());
        write_new_file(dir / "report.entity.json", ev.entity_level.to_json());
        manifest["outputs"] = {"report.word.csv", "report.entity.csv", "report.word.json",
                               "report.entity.json"};
        os << ev.word_level.table() << "\n" << ev.entity_level.table();
    } else {
        const EvalReport report = evaluate_classification(model, docs);
        write_new_file(dir / "report.csv", report.to_csv());
        write_new_file(dir / "report.json", report.to_json());
        manifest["outputs"] = {"report.csv", "report.json"};
        os << report.table();
    }
    return os.str();
}

std::string run_robustness(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    const Checkpoint ckpt =
        load_required_checkpoint(cfg.robustness_checkpoint, "robustness.checkpoint");
    const std::vector<Document> docs = load_split(cfg.data.test, "test");
    const TaskModel model = TaskModel::from_checkpoint(ckpt);
    const RobustnessTable table =
        robustness_report(model, docs, cfg.robustness_p_swap, cfg.robustness_seed);
    const fs::path dir = command_dir(out_root, "robustness");
    write_new_file(dir / "robustness.csv", table.to_csv());
    write_new_file(dir / "robustness.json", table.to_json());
    manifest["outputs"] = {"robustness.csv", "robustness.json"};
    return table.table();
}

std::string run_sweep(const RunConfig& cfg, const std::string& out_root, json& manifest) {
    CorpusSplits splits;
    splits.train = load_split(cfg.data.train, "train");
    splits.dev = load_split(cfg.data.dev, "dev");
    splits.test = load_split(cfg.data.test, "test");
    const SweepResult res = ablation_sweep(cfg.sweep, cfg.pretrain, cfg.finetune, splits,
                                           cfg.corpus.entity_tags, cfg.corpus.doc_classes);
    const fs::path dir = command_dir(out_root, "sweep");
    write_new_file(dir / "sweep.csv", res.to_csv());
    write_new_file(dir / "sweep.json", res.to_json());
    manifest["outputs"] = {"sweep.csv", "sweep.json"};
    return res.table();
}

}  // namespace

uint64_t file_content_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "' for hashing");
    std::ostringstream ss;
    ss << f.rdbuf();
    return fnv1a(ss.str());
}

std::string resolve_run_root(const RunConfig& cfg, const std::string& explicit_out) {
    if (!explicit_out.empty()) return explicit_out;
    if (const char* env = std::getenv("LAYOUTKIT_RUN_DIR"); env && *env) return env;
    if (!cfg.run_dir.empty()) return cfg.run_dir;
    return "runs";
}

std::string inspect_document(const RunConfig& cfg, bool jsonl) {
    const std::string path =
        !cfg.inspect.corpus.empty() ? cfg.inspect.corpus : cfg.data.train;
    if (path.empty()) throw ConfigError("inspect.corpus (or data.train) is required");
    const std::vector<Document> docs = load_corpus(path);
    if (docs.empty()) throw ConfigError("inspect: corpus is empty");

    const Document* doc = nullptr;
    if (!cfg.inspect.doc_id.empty()) {
        for (const auto& d : docs) {
            if (d.doc_id == cfg.inspect.doc_id) {
                doc = &d;
                break;
            }
        }
        if (!doc) throw ConfigError("inspect: no document with doc_id '" + cfg.inspect.doc_id + "'");
    } else {
        if (cfg.inspect.doc_index < 0 || cfg.inspect.doc_index >= static_cast<int>(docs.size())) {
            throw ConfigError("inspect.doc_index out of range");
        }
        doc = &docs[static_cast<size_t>(cfg.inspect.doc_index)];
    }

    const Vocabulary vocab = Vocabulary::build(docs);
    Document positioned = assign_positions(normalize_document(*doc), cfg.inspect.one_d);
    TokenSequence seq = tokenize(positioned, vocab, cfg.inspect.one_d, 512);
    seq = resolve_token_boxes(seq, cfg.inspect.two_d);

    const bool want_mlm = cfg.inspect.mask == "mlm" || cfg.inspect.mask == "both";
    const bool want_mpm = cfg.inspect.mask == "mpm" || cfg.inspect.mask == "both";
    MlmPlan plan;
    std::vector<int> labels(static_cast<size_t>(seq.length()), kIgnoreLabel);
    TokenSequence shown = seq;
    MpmSelection sel;
    BoxLabels box_labels;
    box_labels.at.assign(static_cast<size_t>(seq.length()), std::nullopt);
    if (want_mlm) {
        plan = plan_mlm(seq, MlmStrategy::kWwmLam, cfg.inspect.p_mlm, cfg.inspect.seed);
        MaskedSequence masked =
            apply_mlm(seq, plan, ReplacementPolicy{}, vocab.size(), cfg.inspect.seed);
        shown = masked.seq;
        labels = masked.labels;
    }
    if (want_mpm) {
        if (cfg.inspect.one_d != OneDMode::kLocal || cfg.inspect.two_d != TwoDMode::kSegment) {
            throw ConfigError("inspect.mask=mpm requires local 1D and segment 2D modes");
        }
        sel = select_mpm(seq, cfg.inspect.p_mpm, cfg.inspect.seed,
                         want_mlm ? plan.masked_word_ids(seq) : std::vector<int>{});
        if (!sel.selected_word_ids.empty()) {
            shown = split_segments(shown, sel);
            auto [boxed, bl] = apply_box_masks(shown, sel);
            shown = std::move(boxed);
            box_labels = std::move(bl);
        }
    }

    auto action_name = [&](int t) -> std::string {
        if (labels[static_cast<size_t>(t)] == kIgnoreLabel &&
            !box_labels.at[static_cast<size_t>(t)].has_value()) {
            return "";
        }
        std::string s;
        if (labels[static_cast<size_t>(t)] != kIgnoreLabel) {
            switch (plan.actions[static_cast<size_t>(t)]) {
                case MaskAction::kReplaceWithMask: s = "mlm:mask"; break;
                case MaskAction::kReplaceWithRandom: s = "mlm:random"; break;
                case MaskAction::kKeep: s = "mlm:keep"; break;
                default: s = "mlm"; break;
            }
        }
        if (box_labels.at[static_cast<size_t>(t)].has_value()) {
            if (!s.empty()) s += "+";
            s += "mpm:box";
        }
        return s;
    };

    if (jsonl) {
        std::ostringstream os;
        for (int t = 0; t < shown.length(); ++t) {
            json row;
            row["index"] = t;
            row["token"] = vocab.piece_of(shown.tokens[static_cast<size_t>(t)]);
            row["token_id"] = shown.tokens[static_cast<size_t>(t)];
            row["word"] = shown.word_index[static_cast<size_t>(t)];
            row["segment"] = shown.segment_index[static_cast<size_t>(t)];
            row["pos_1d"] = shown.pos_1d[static_cast<size_t>(t)];
            const QuantBox q = quantize(shown.box_2d[static_cast<size_t>(t)]);
            row["box"] = {q.x1, q.y1, q.x2, q.y2};
            row["special"] = static_cast<bool>(shown.special_mask[static_cast<size_t>(t)]);
            const std::string act = action_name(t);
            if (!act.empty()) row["mask"] = act;
            if (labels[static_cast<size_t>(t)] != kIgnoreLabel) {
                row["mlm_label"] = vocab.piece_of(labels[static_cast<size_t>(t)]);
            }
            if (box_labels.at[static_cast<size_t>(t)].has_value()) {
                const QuantBox tb = quantize(*box_labels.at[static_cast<size_t>(t)]);
                row["box_label"] = {tb.x1, tb.y1, tb.x2, tb.y2};
            }
            os << row.dump() << "\n";
        }
        return os.str();
    }

    std::ostringstream os;
    os << "doc " << doc->doc_id << "  (" << to_string(cfg.inspect.one_d) << " 1D, "
       << to_string(cfg.inspect.two_d) << " 2D";
    if (cfg.inspect.mask != "none") os << ", mask=" << cfg.inspect.mask;
    os << ")\n";
    os << "  idx token  word seg pos1d  box(quantized)        mask\n";
    char buf[160];
    for (int t = 0; t < shown.length(); ++t) {
        const QuantBox q = quantize(shown.box_2d[static_cast<size_t>(t)]);
        std::snprintf(buf, sizeof(buf), "%5d %-6s %4d %3d %5d  [%4d,%4d,%4d,%4d]  %s\n", t,
                      vocab.piece_of(shown.tokens[static_cast<size_t>(t)]).c_str(),
                      shown.word_index[static_cast<size_t>(t)],
                      shown.segment_index[static_cast<size_t>(t)],
                      shown.pos_1d[static_cast<size_t>(t)], q.x1, q.y1, q.x2, q.y2,
                      action_name(t).c_str());
        os << buf;
    }
    return os.str();
}

std::string run_command(const RunConfig& cfg, const std::string& command,
                        const std::string& out_root) {
    json manifest = manifest_base(cfg, command);

    if (command == "inspect") {
        const std::string text = inspect_document(cfg, false);
        const fs::path dir = command_dir(out_root, command);
        write_new_file(dir / "inspect.txt", text);
        if (cfg.inspect.json) {
            write_new_file(dir / "inspect.jsonl", inspect_document(cfg, true));
        }
        write_new_file(dir / "manifest.json", manifest.dump(2));
        write_new_file(dir / "config.resolved.json", cfg.resolved_json);
        return text;
    }

    std::string summary;
    if (command == "gen-corpus") {
        summary = run_gen_corpus(cfg, out_root, manifest);
    } else if (command == "pretrain") {
        summary = run_pretrain(cfg, out_root, manifest);
    } else if (command == "finetune") {
        summary = run_finetune(cfg, out_root, manifest);
    } else if (command == "eval") {
        summary = run_eval(cfg, out_root, manifest);
    } else if (command == "robustness") {
        summary = run_robustness(cfg, out_root, manifest);
    } else if (command == "sweep") {
        summary = run_sweep(cfg, out_root, manifest);
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    const fs::path dir = fs::path(out_root) / command;
    write_new_file(dir / "manifest.json", manifest.dump(2));
    write_new_file(dir / "config.resolved.json", cfg.resolved_json);
    return summary;
}

}  // namespace layoutkit

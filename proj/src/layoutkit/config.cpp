#include "layoutkit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

using nlohmann::json;

namespace {

// Typed view over one JSON object that tracks which keys were read and
// rejects leftovers, so schema violations name the offending key.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        return j_.contains(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!j_.contains(key)) return fallback;
        mark(key);
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + key + ": wrong type");
        }
    }

    Reader sub(const std::string& key) {
        static const json empty = json::object();
        if (!j_.contains(key)) return Reader(empty, path_ + key + ".");
        mark(key);
        return Reader(j_.at(key), path_ + key + ".");
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) {
                throw ConfigError("unknown config key '" + path_ + it.key() + "'");
            }
        }
    }

private:
    void mark(const std::string& key) { used_.insert(key); }
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form path.key=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // unquoted strings are taken verbatim
    }

    json* node = &root;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos
                                                       ? std::string::npos
                                                       : dot - start);
        if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (!node->is_object() && !node->is_null()) {
            throw ConfigError("override '" + assignment + "' descends into a non-object");
        }
        start = dot + 1;
    }
}

GenSpec read_corpus(Reader& r, uint64_t global_seed) {
    GenSpec s = GenSpec::defaults();
    s.doc_count = r.get("doc_count", s.doc_count);
    s.train_fraction = r.get("train_fraction", s.train_fraction);
    s.dev_fraction = r.get("dev_fraction", s.dev_fraction);
    s.page_width = r.get("page_width", s.page_width);
    s.page_height = r.get("page_height", s.page_height);
    s.grid_rows = r.get("grid_rows", s.grid_rows);
    s.grid_cols = r.get("grid_cols", s.grid_cols);
    s.filler_words = r.get("filler_words", s.filler_words);
    s.name_words = r.get("name_words", s.name_words);
    s.amount_values = r.get("amount_values", s.amount_values);
    s.date_values = r.get("date_values", s.date_values);
    s.entity_tags = r.get("entity_tags", s.entity_tags);
    s.doc_classes = r.get("doc_classes", s.doc_classes);
    s.multi_segment_prob = r.get("multi_segment_prob", s.multi_segment_prob);
    s.distractor_prob = r.get("distractor_prob", s.distractor_prob);
    s.cross_context_prob = r.get("cross_context_prob", s.cross_context_prob);
    s.vertical_pair_prob = r.get("vertical_pair_prob", s.vertical_pair_prob);
    s.jitter = r.get("jitter", s.jitter);
    s.name_in_filler_prob = r.get("name_in_filler_prob", s.name_in_filler_prob);
    s.loose_value_prob = r.get("loose_value_prob", s.loose_value_prob);
    s.name_cluster_size = r.get("name_cluster_size", s.name_cluster_size);
    s.seed = r.has("seed") ? r.get<uint64_t>("seed", 0)
                           : derive_seed(global_seed, "corpus");
    r.finish();
    return s;
}

ModelConfig read_model(Reader& r) {
    ModelConfig m;
    m.hidden_size = r.get("hidden_size", m.hidden_size);
    m.layers = r.get("layers", m.layers);
    m.heads = r.get("heads", m.heads);
    m.ffn_size = r.get("ffn_size", m.ffn_size);
    m.max_len = r.get("max_len", m.max_len);
    m.max_1d_position = r.get("max_1d_position", m.max_1d_position);
    m.relative_bias_buckets = r.get("relative_bias_buckets", m.relative_bias_buckets);
    m.dropout = r.get("dropout", m.dropout);
    r.finish();
    return m;
}

PretrainConfig read_pretrain(Reader& r, const ModelConfig& model, uint64_t global_seed) {
    PretrainConfig p;
    p.model = model;
    p.one_d = parse_one_d_mode(r.get<std::string>("one_d", "local"));
    p.two_d = parse_two_d_mode(r.get<std::string>("two_d", "segment"));
    p.strategy = parse_mlm_strategy(r.get<std::string>("strategy", "wwm_lam"));
    p.enable_mpm = r.get("enable_mpm", true);
    p.p_mlm = r.get("p_mlm", 0.25);
    p.p_mpm = r.get("p_mpm", 0.15);
    p.lambda = r.get("lambda", 1.0);
    p.steps = r.get("steps", 600);
    p.batch_size = r.get("batch_size", 8);
    p.adam.learning_rate = r.get("learning_rate", 5e-4);
    p.seed = r.has("seed") ? r.get<uint64_t>("seed", 0)
                           : derive_seed(global_seed, "pretrain");
    r.finish();
    return p;
}

FinetuneConfig read_finetune(Reader& r, uint64_t global_seed, std::string* checkpoint) {
    FinetuneConfig f;
    f.task = parse_task(r.get<std::string>("task", "entities"));
    f.steps = r.get("steps", 300);
    f.batch_size = r.get("batch_size", 8);
    f.adam.learning_rate = r.get("learning_rate", 1e-3);
    f.eval_every = r.get("eval_every", 50);
    f.max_train_docs = r.get("max_train_docs", 128);
    f.seed = r.has("seed") ? r.get<uint64_t>("seed", 0)
                           : derive_seed(global_seed, "finetune");
    *checkpoint = r.get<std::string>("checkpoint", "");
    r.finish();
    return f;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json_text.empty() ? json::object() : json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    for (const auto& ov : overrides) apply_override(root, ov);

    RunConfig cfg;
    Reader r(root, "");
    cfg.seed = r.get<uint64_t>("seed", 1);
    cfg.run_dir = r.get<std::string>("run_dir", "");
    cfg.jobs = r.get("jobs", 1);
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");

    {
        Reader d = r.sub("data");
        cfg.data.train = d.get<std::string>("train", "");
        cfg.data.dev = d.get<std::string>("dev", "");
        cfg.data.test = d.get<std::string>("test", "");
        d.finish();
    }
    {
        Reader c = r.sub("corpus");
        cfg.corpus = read_corpus(c, cfg.seed);
    }
    ModelConfig model;
    {
        Reader m = r.sub("model");
        model = read_model(m);
    }
    {
        Reader p = r.sub("pretrain");
        cfg.pretrain = read_pretrain(p, model, cfg.seed);
    }
    {
        Reader f = r.sub("finetune");
        cfg.finetune = read_finetune(f, cfg.seed, &cfg.finetune_checkpoint);
    }
    {
        Reader e = r.sub("eval");
        cfg.eval_checkpoint = e.get<std::string>("checkpoint", "");
        cfg.eval_split = e.get<std::string>("split", "test");
        cfg.eval_task = parse_task(e.get<std::string>("task", "entities"));
        e.finish();
        if (cfg.eval_split != "train" && cfg.eval_split != "dev" && cfg.eval_split != "test") {
            throw ConfigError("eval.split must be train, dev, or test");
        }
    }
    {
        Reader b = r.sub("robustness");
        cfg.robustness_checkpoint = b.get<std::string>("checkpoint", "");
        cfg.robustness_p_swap = b.get("p_swap", cfg.robustness_p_swap);
        cfg.robustness_seed = b.has("seed") ? b.get<uint64_t>("seed", 0)
                                            : derive_seed(cfg.seed, "robustness");
        b.finish();
        for (double p : cfg.robustness_p_swap) {
            if (p < 0.0 || p > 1.0) throw ConfigError("robustness.p_swap values must be in [0,1]");
        }
    }
    {
        Reader s = r.sub("sweep");
        cfg.sweep.axis = parse_sweep_axis(s.get<std::string>("axis", "strategy"));
        cfg.sweep.grid = s.get("grid", std::vector<double>{});
        cfg.sweep.finetune_seeds = s.get("finetune_seeds", 5);
        cfg.sweep.jobs = cfg.jobs;
        s.finish();
    }
    {
        Reader i = r.sub("inspect");
        cfg.inspect.corpus = i.get<std::string>("corpus", "");
        cfg.inspect.doc_id = i.get<std::string>("doc_id", "");
        cfg.inspect.doc_index = i.get("doc_index", 0);
        cfg.inspect.one_d = parse_one_d_mode(i.get<std::string>("one_d", "local"));
        cfg.inspect.two_d = parse_two_d_mode(i.get<std::string>("two_d", "segment"));
        cfg.inspect.mask = i.get<std::string>("mask", "none");
        cfg.inspect.p_mlm = i.get("p_mlm", 0.25);
        cfg.inspect.p_mpm = i.get("p_mpm", 0.15);
        cfg.inspect.seed = i.has("seed") ? i.get<uint64_t>("seed", 0)
                                         : derive_seed(cfg.seed, "inspect");
        cfg.inspect.json = i.get("json", false);
        i.finish();
        if (cfg.inspect.mask != "none" && cfg.inspect.mask != "mlm" &&
            cfg.inspect.mask != "mpm" && cfg.inspect.mask != "both") {
            throw ConfigError("inspect.mask must be none, mlm, mpm, or both");
        }
    }
    r.finish();

    cfg.corpus.validate();
    cfg.pretrain.validate();
    cfg.finetune.validate();

    cfg.resolved_json = root.dump(2);
    return cfg;
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
    std::string text;
    if (!config_path.empty()) {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) throw ConfigError("cannot open config file '" + config_path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    return parse_run_config(text, overrides);
}

}  // namespace layoutkit

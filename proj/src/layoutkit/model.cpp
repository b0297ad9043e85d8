#include "layoutkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

using ad::Tensor;
using nlohmann::json;

namespace {
constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr double kNegInf = -1e30;
constexpr double kAreaEps = 1e-9;
}  // namespace

void ModelConfig::validate() const {
    if (vocab_size <= Vocabulary::kNumSpecials) throw ConfigError("model.vocab_size too small");
    if (hidden_size <= 0 || layers <= 0 || heads <= 0 || ffn_size <= 0) {
        throw ConfigError("model dimensions must be positive");
    }
    if (hidden_size % heads != 0) {
        throw ConfigError("model.hidden_size (" + std::to_string(hidden_size) +
                          ") must be divisible by model.heads (" + std::to_string(heads) + ")");
    }
    if (max_len < 3 || max_1d_position < 2) throw ConfigError("model sequence limits too small");
    if (coordinate_bins != kCoordBins) {
        throw ConfigError("model.coordinate_bins must equal the corpus quantization bins (" +
                          std::to_string(kCoordBins) + ")");
    }
    if (relative_bias_buckets < 4 || relative_bias_buckets % 2 != 0) {
        throw ConfigError("model.relative_bias_buckets must be an even number >= 4");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must be in [0,1)");
}

Tensor& Parameters::add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw RuntimeError("duplicate parameter '" + name + "'");
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

Tensor& Parameters::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw RuntimeError("unknown parameter '" + name + "'");
    return items_[it->second].second;
}

const Tensor& Parameters::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw RuntimeError("unknown parameter '" + name + "'");
    return items_[it->second].second;
}

bool Parameters::has(const std::string& name) const { return index_.count(name) > 0; }

void Parameters::zero_grads() {
    for (auto& [name, t] : items_) t.zero_grad();
}

Parameters Parameters::clone() const {
    Parameters out;
    for (const auto& [name, t] : items_) {
        out.add(name, Tensor::from(t.shape(), t.data(), t.requires_grad()));
    }
    return out;
}

void Parameters::check_finite() const {
    for (const auto& [name, t] : items_) {
        for (double v : t.data()) {
            if (!std::isfinite(v)) {
                throw RuntimeError("parameter '" + name + "' contains a non-finite value");
            }
        }
    }
}

Parameters Parameters::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Parameters p;
    Rng rng(derive_seed(seed, "param-init"));
    auto randn = [&](std::vector<int> shape) {
        Tensor t = Tensor::zeros(std::move(shape), true);
        for (auto& v : t.data()) v = rng.normal(0.0, kInitStd);
        return t;
    };
    auto zeros = [&](std::vector<int> shape) { return Tensor::zeros(std::move(shape), true); };
    auto ones = [&](std::vector<int> shape) { return Tensor::full(std::move(shape), 1.0, true); };

    const int H = cfg.hidden_size;
    const int bins = cfg.coordinate_bins + 1;  // inclusive upper edge
    p.add("emb.token", randn({cfg.vocab_size, H}));
    p.add("emb.pos1d", randn({cfg.max_1d_position, H}));
    for (const char* axis : {"x1", "y1", "x2", "y2", "w", "h"}) {
        p.add(std::string("emb.") + axis, randn({bins, H}));
    }
    p.add("emb.ln.g", ones({H}));
    p.add("emb.ln.b", zeros({H}));
    for (const char* axis : {"1d", "x", "y"}) {
        p.add(std::string("bias.") + axis, zeros({cfg.relative_bias_buckets, cfg.heads}));
    }
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string pre = "layer." + std::to_string(l) + ".";
        p.add(pre + "ln1.g", ones({H}));
        p.add(pre + "ln1.b", zeros({H}));
        for (const char* w : {"wq", "wk", "wv", "wo"}) p.add(pre + "attn." + w, randn({H, H}));
        // no key bias: softmax is invariant to the per-query constant it adds
        for (const char* b : {"bq", "bv", "bo"}) p.add(pre + "attn." + b, zeros({H}));
        p.add(pre + "ln2.g", ones({H}));
        p.add(pre + "ln2.b", zeros({H}));
        p.add(pre + "ffn.w1", randn({H, cfg.ffn_size}));
        p.add(pre + "ffn.b1", zeros({cfg.ffn_size}));
        p.add(pre + "ffn.w2", randn({cfg.ffn_size, H}));
        p.add(pre + "ffn.b2", zeros({H}));
    }
    p.add("final_ln.g", ones({H}));
    p.add("final_ln.b", zeros({H}));
    p.add("head.mlm.w", randn({H, cfg.vocab_size}));
    p.add("head.mlm.b", zeros({cfg.vocab_size}));
    p.add("head.box.w", randn({H, 4}));
    p.add("head.box.b", zeros({4}));
    if (cfg.num_tags > 0) {
        p.add("head.tags.w", randn({H, cfg.num_tags}));
        p.add("head.tags.b", zeros({cfg.num_tags}));
    }
    if (cfg.num_classes > 0) {
        p.add("head.cls.w", randn({H, cfg.num_classes}));
        p.add("head.cls.b", zeros({cfg.num_classes}));
    }
    return p;
}

int relative_bucket(int offset, int num_buckets, int max_offset) {
    const int half = num_buckets / 2;
    int bucket = offset > 0 ? half : 0;
    const int mag = std::abs(offset);
    const int exact = std::max(1, half / 2);
    if (mag < exact) return bucket + mag;
    const double v =
        exact + std::log(static_cast<double>(mag) / exact) /
                    std::log(static_cast<double>(std::max(max_offset, exact + 1)) / exact) *
                    (half - 1 - exact);
    return bucket + std::min(half - 1, static_cast<int>(v));
}

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return ad::add(ad::matmul(x, w), b);
}

Tensor affine_norm(const Tensor& x, const Tensor& g, const Tensor& b) {
    return ad::add(ad::mul(ad::layer_norm(x, -1, kLnEps), g), b);
}

struct QuantizedInputs {
    std::vector<int> x1, y1, x2, y2, w, h, pos, tokens;
    std::vector<int> xc, yc;  // center bins for the attention bias
};

QuantizedInputs quantize_inputs(const TokenSequence& seq, const ModelConfig& cfg) {
    QuantizedInputs q;
    const int L = seq.length();
    for (int t = 0; t < L; ++t) {
        const int id = seq.tokens[static_cast<size_t>(t)];
        if (id < 0 || id >= cfg.vocab_size) {
            throw RuntimeError("token id " + std::to_string(id) + " out of vocab range");
        }
        const int pos = seq.pos_1d[static_cast<size_t>(t)];
        if (pos < 0 || pos >= cfg.max_1d_position) {
            throw RuntimeError("1D position " + std::to_string(pos) + " out of range [0," +
                               std::to_string(cfg.max_1d_position) + ")");
        }
        const QuantBox qb = quantize(seq.box_2d[static_cast<size_t>(t)]);
        q.tokens.push_back(id);
        q.pos.push_back(pos);
        q.x1.push_back(qb.x1);
        q.y1.push_back(qb.y1);
        q.x2.push_back(qb.x2);
        q.y2.push_back(qb.y2);
        q.w.push_back(std::clamp(qb.x2 - qb.x1, 0, cfg.coordinate_bins));
        q.h.push_back(std::clamp(qb.y2 - qb.y1, 0, cfg.coordinate_bins));
        q.xc.push_back((qb.x1 + qb.x2) / 2);
        q.yc.push_back((qb.y1 + qb.y2) / 2);
    }
    return q;
}

}  // namespace

Tensor LayoutEncoder::embed_inputs(const TokenSequence& seq, const EncodeOptions& opt) const {
    const QuantizedInputs q = quantize_inputs(seq, cfg_);
    Tensor h = ad::embedding_gather(params_.get("emb.token"), q.tokens);
    h = ad::add(h, ad::embedding_gather(params_.get("emb.pos1d"), q.pos));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.x1"), q.x1));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.y1"), q.y1));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.x2"), q.x2));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.y2"), q.y2));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.w"), q.w));
    h = ad::add(h, ad::embedding_gather(params_.get("emb.h"), q.h));
    h = affine_norm(h, params_.get("emb.ln.g"), params_.get("emb.ln.b"));
    h = ad::dropout(h, cfg_.dropout, derive_seed(opt.dropout_seed, "emb-drop"), opt.training);
    return h;
}

Tensor LayoutEncoder::attention_bias(const TokenSequence& seq) const {
    const QuantizedInputs q = quantize_inputs(seq, cfg_);
    const int L = seq.length();
    std::vector<int> b1(static_cast<size_t>(L) * L);
    std::vector<int> bx(static_cast<size_t>(L) * L);
    std::vector<int> by(static_cast<size_t>(L) * L);
    const int nb = cfg_.relative_bias_buckets;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const size_t k = static_cast<size_t>(i) * L + j;
            b1[k] = relative_bucket(q.pos[static_cast<size_t>(j)] - q.pos[static_cast<size_t>(i)],
                                    nb, cfg_.max_1d_position);
            bx[k] = relative_bucket(q.xc[static_cast<size_t>(j)] - q.xc[static_cast<size_t>(i)],
                                    nb, cfg_.coordinate_bins);
            by[k] = relative_bucket(q.yc[static_cast<size_t>(j)] - q.yc[static_cast<size_t>(i)],
                                    nb, cfg_.coordinate_bins);
        }
    }
    Tensor bias = ad::embedding_gather(params_.get("bias.1d"), b1);       // [L*L, heads]
    bias = ad::add(bias, ad::embedding_gather(params_.get("bias.x"), bx));
    bias = ad::add(bias, ad::embedding_gather(params_.get("bias.y"), by));
    bias = ad::permute(bias, {1, 0});                                     // [heads, L*L]
    return ad::reshape(bias, {cfg_.heads, L, L});
}

Tensor LayoutEncoder::encode(const TokenSequence& seq, const EncodeOptions& opt) const {
    const int L = seq.length();
    const int H = cfg_.hidden_size;
    const int nh = cfg_.heads;
    const int hd = H / nh;
    uint64_t site = 0;
    auto drop = [&](const Tensor& t) {
        return ad::dropout(t, cfg_.dropout, derive_seed(opt.dropout_seed, "drop", site++),
                           opt.training);
    };

    Tensor x = embed_inputs(seq, opt);
    Tensor bias = attention_bias(seq);

    Tensor key_mask;  // additive [L]; 0 on valid keys, -inf beyond valid_len
    if (opt.valid_len >= 0 && opt.valid_len < L) {
        std::vector<double> m(static_cast<size_t>(L), 0.0);
        for (int j = opt.valid_len; j < L; ++j) m[static_cast<size_t>(j)] = kNegInf;
        key_mask = Tensor::from({L}, std::move(m));
    }

    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string pre = "layer." + std::to_string(l) + ".";
        Tensor h = affine_norm(x, params_.get(pre + "ln1.g"), params_.get(pre + "ln1.b"));
        auto split_heads = [&](const Tensor& t) {
            // [L, H] -> [heads, L, head_dim]
            return ad::permute(ad::reshape(t, {L, nh, hd}), {1, 0, 2});
        };
        Tensor qh = split_heads(linear(h, params_.get(pre + "attn.wq"), params_.get(pre + "attn.bq")));
        Tensor kh = split_heads(ad::matmul(h, params_.get(pre + "attn.wk")));
        Tensor vh = split_heads(linear(h, params_.get(pre + "attn.wv"), params_.get(pre + "attn.bv")));
        Tensor scores = ad::scale(ad::matmul(qh, ad::permute(kh, {0, 2, 1})), inv_sqrt_hd);
        scores = ad::add(scores, bias);
        if (key_mask.defined()) scores = ad::add(scores, key_mask);
        Tensor attn = ad::softmax(scores, -1);
        attn = drop(attn);
        Tensor ctx = ad::matmul(attn, vh);                      // [heads, L, hd]
        ctx = ad::reshape(ad::permute(ctx, {1, 0, 2}), {L, H});
        ctx = linear(ctx, params_.get(pre + "attn.wo"), params_.get(pre + "attn.bo"));
        x = ad::add(x, drop(ctx));

        Tensor f = affine_norm(x, params_.get(pre + "ln2.g"), params_.get(pre + "ln2.b"));
        f = ad::relu(linear(f, params_.get(pre + "ffn.w1"), params_.get(pre + "ffn.b1")));
        f = linear(f, params_.get(pre + "ffn.w2"), params_.get(pre + "ffn.b2"));
        x = ad::add(x, drop(f));
    }
    return affine_norm(x, params_.get("final_ln.g"), params_.get("final_ln.b"));
}

Tensor LayoutEncoder::mlm_logits(const Tensor& states) const {
    return linear(states, params_.get("head.mlm.w"), params_.get("head.mlm.b"));
}

Tensor LayoutEncoder::mpm_predict(const Tensor& states,
                                  const std::vector<int>& masked_positions) const {
    if (masked_positions.empty()) throw RuntimeError("mpm_predict: no masked positions");
    Tensor g = ad::gather_rows(states, masked_positions);
    Tensor s = ad::sigmoid(linear(g, params_.get("head.box.w"), params_.get("head.box.b")));
    Tensor cx = ad::slice(s, 1, 0, 1);
    Tensor cy = ad::slice(s, 1, 1, 1);
    Tensor hw = ad::scale(ad::slice(s, 1, 2, 1), 0.5);
    Tensor hh = ad::scale(ad::slice(s, 1, 3, 1), 0.5);
    Tensor x1 = ad::clamp(ad::sub(cx, hw), 0.0, 1.0);
    Tensor y1 = ad::clamp(ad::sub(cy, hh), 0.0, 1.0);
    Tensor x2 = ad::clamp(ad::add(cx, hw), 0.0, 1.0);
    Tensor y2 = ad::clamp(ad::add(cy, hh), 0.0, 1.0);
    return ad::concat({x1, y1, x2, y2}, 1);
}

Tensor LayoutEncoder::tag_logits(const Tensor& states) const {
    if (!params_.has("head.tags.w")) throw RuntimeError("model has no token-classification head");
    return linear(states, params_.get("head.tags.w"), params_.get("head.tags.b"));
}

Tensor LayoutEncoder::class_logits(const Tensor& states) const {
    if (!params_.has("head.cls.w")) throw RuntimeError("model has no document-classification head");
    Tensor cls = ad::slice(states, 0, 0, 1);  // CLS state
    return linear(cls, params_.get("head.cls.w"), params_.get("head.cls.b"));
}

Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2 || static_cast<int>(labels.size()) != logits.dim(0)) {
        throw RuntimeError("cross_entropy_mean: labels must align with logit rows");
    }
    std::vector<int> positions;
    std::vector<int> targets;
    for (int i = 0; i < logits.dim(0); ++i) {
        const int y = labels[static_cast<size_t>(i)];
        if (y == kIgnoreLabel) continue;
        if (y < 0 || y >= logits.dim(1)) {
            throw RuntimeError("cross_entropy_mean: label " + std::to_string(y) + " out of range");
        }
        positions.push_back(i);
        targets.push_back(y);
    }
    if (positions.empty()) {
        throw RuntimeError("cross_entropy_mean: no labeled positions");
    }
    Tensor rows = ad::gather_rows(logits, positions);
    Tensor logp = ad::log_softmax(rows, -1);
    return ad::neg(ad::mean(ad::select_index(logp, targets)));
}

Tensor mlm_loss(const Tensor& mlm_logits, const std::vector<int>& labels) {
    return cross_entropy_mean(mlm_logits, labels);
}

Tensor giou_loss(const Tensor& predicted, const Tensor& truth) {
    if (predicted.rank() != 2 || predicted.dim(1) != 4 || truth.rank() != 2 ||
        truth.dim(1) != 4 || predicted.dim(0) != truth.dim(0)) {
        ad::shape_error("giou_loss", {&predicted, &truth});
    }
    if (predicted.dim(0) == 0) throw RuntimeError("giou_loss: no boxes");
    for (int i = 0; i < truth.dim(0); ++i) {
        const double w = truth.at({i, 2}) - truth.at({i, 0});
        const double h = truth.at({i, 3}) - truth.at({i, 1});
        if (w <= 0.0 || h <= 0.0) {
            throw RuntimeError("giou_loss: truth box " + std::to_string(i) +
                               " has non-positive area");
        }
    }
    auto col = [](const Tensor& t, int c) { return ad::slice(t, 1, c, 1); };
    Tensor px1 = col(predicted, 0), py1 = col(predicted, 1);
    Tensor px2 = col(predicted, 2), py2 = col(predicted, 3);
    Tensor tx1 = col(truth, 0), ty1 = col(truth, 1);
    Tensor tx2 = col(truth, 2), ty2 = col(truth, 3);

    Tensor iw = ad::relu(ad::sub(ad::minimum(px2, tx2), ad::maximum(px1, tx1)));
    Tensor ih = ad::relu(ad::sub(ad::minimum(py2, ty2), ad::maximum(py1, ty1)));
    Tensor inter = ad::mul(iw, ih);
    Tensor area_p = ad::mul(ad::sub(px2, px1), ad::sub(py2, py1));
    Tensor area_t = ad::mul(ad::sub(tx2, tx1), ad::sub(ty2, ty1));
    Tensor uni = ad::sub(ad::add(area_p, area_t), inter);
    Tensor cw = ad::sub(ad::maximum(px2, tx2), ad::minimum(px1, tx1));
    Tensor ch = ad::sub(ad::maximum(py2, ty2), ad::minimum(py1, ty1));
    Tensor area_c = ad::mul(cw, ch);

    // Denominators are guarded with max(x, eps); valid truth boxes keep both
    // areas strictly positive, so the guard never disturbs real inputs and
    // the identity/disjoint hand values hold exactly.
    Tensor eps_floor = Tensor::full({truth.dim(0), 1}, kAreaEps);
    Tensor iou = ad::div(inter, ad::maximum(uni, eps_floor));
    Tensor penalty = ad::div(ad::sub(area_c, uni), ad::maximum(area_c, eps_floor));
    Tensor giou = ad::sub(iou, penalty);
    return ad::neg(ad::mean(giou));
}

Tensor total_loss(const Tensor& l_mlm, const Tensor& l_mpm, double lambda) {
    if (!std::isfinite(l_mlm.value()) || !std::isfinite(l_mpm.value())) {
        throw RuntimeError("total_loss: non-finite loss term");
    }
    return ad::add(l_mlm, ad::scale(l_mpm, lambda));
}

Tensor boxes_to_tensor(const std::vector<BBox>& boxes) {
    std::vector<double> data;
    data.reserve(boxes.size() * 4);
    for (const auto& b : boxes) {
        data.push_back(b.x1);
        data.push_back(b.y1);
        data.push_back(b.x2);
        data.push_back(b.y2);
    }
    return Tensor::from({static_cast<int>(boxes.size()), 4}, std::move(data));
}

// -------------------------------------------------------------- checkpointing

namespace {

constexpr char kCkptMagic[8] = {'L', 'K', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kCkptFormatVersion = 1;

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is) {
    const uint64_t bits = read_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

json config_to_json(const ModelConfig& c) {
    return json{{"vocab_size", c.vocab_size},
                {"hidden_size", c.hidden_size},
                {"layers", c.layers},
                {"heads", c.heads},
                {"ffn_size", c.ffn_size},
                {"max_len", c.max_len},
                {"max_1d_position", c.max_1d_position},
                {"coordinate_bins", c.coordinate_bins},
                {"relative_bias_buckets", c.relative_bias_buckets},
                {"dropout", c.dropout},
                {"num_tags", c.num_tags},
                {"num_classes", c.num_classes}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ffn_size = j.at("ffn_size").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.max_1d_position = j.at("max_1d_position").get<int>();
    c.coordinate_bins = j.at("coordinate_bins").get<int>();
    c.relative_bias_buckets = j.at("relative_bias_buckets").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.num_tags = j.at("num_tags").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot write checkpoint '" + path + "'");

    json manifest;
    manifest["format_version"] = kCkptFormatVersion;
    manifest["model"] = config_to_json(ckpt.config);
    manifest["meta"] = ckpt.manifest_json.empty() ? json::object()
                                                  : json::parse(ckpt.manifest_json);
    const std::string mtext = manifest.dump();

    os.write(kCkptMagic, 8);
    write_u64(os, mtext.size());
    os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    write_u64(os, ckpt.params.items().size());
    for (const auto& [name, t] : ckpt.params.items()) {
        write_u64(os, name.size());
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(os, t.shape().size());
        for (int d : t.shape()) write_u64(os, static_cast<uint64_t>(d));
        for (double v : t.data()) write_f64(os, v);
    }
    if (!os) throw RuntimeError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCkptMagic, 8) != 0) {
        throw ConfigError("'" + path + "' is not a checkpoint file");
    }
    const uint64_t mlen = read_u64(is);
    std::string mtext(mlen, '\0');
    is.read(mtext.data(), static_cast<std::streamsize>(mlen));
    json manifest = json::parse(mtext);
    if (manifest.at("format_version").get<int>() != kCkptFormatVersion) {
        throw ConfigError("checkpoint '" + path + "' has unsupported format version");
    }

    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("model"));
    ckpt.manifest_json = manifest.at("meta").dump();
    const uint64_t n_params = read_u64(is);
    for (uint64_t p = 0; p < n_params; ++p) {
        const uint64_t name_len = read_u64(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        const uint64_t ndim = read_u64(is);
        std::vector<int> shape;
        int64_t numel = 1;
        for (uint64_t d = 0; d < ndim; ++d) {
            shape.push_back(static_cast<int>(read_u64(is)));
            numel *= shape.back();
        }
        std::vector<double> data(static_cast<size_t>(numel));
        for (auto& v : data) v = read_f64(is);
        if (!is) throw ConfigError("checkpoint '" + path + "' is truncated");
        ckpt.params.add(name, ad::Tensor::from(std::move(shape), std::move(data), true));
    }
    return ckpt;
}

}  // namespace layoutkit

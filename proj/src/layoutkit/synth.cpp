#include "layoutkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit {

GenSpec GenSpec::defaults() {
    GenSpec s;
    s.filler_words = {
        "the",     "of",      "and",     "for",     "with",    "from",    "unit",
        "item",    "items",   "per",     "net",     "due",     "paid",    "cash",
        "card",    "ref",     "page",    "terms",   "note",    "desc",    "code",
        "tax",     "rate",    "disc",    "plan",    "order",   "batch",   "line",
        "goods",   "sent",    "recv",    "open",    "close",   "void",    "copy",
        "orig",    "serv",    "fee",     "misc",    "sub",     "gross",   "bal",
        "acct",    "inv",     "doc",     "pay",     "chg",     "adj",     "balance",
        "carried", "forward", "deliver", "billing", "shipping", "account", "number",
        "within",  "thirty",  "days",    "overdue", "charge",  "applies", "thank",
        "visit",   "again",   "customer", "signed", "approved", "pending", "partial",
        "remit",   "payable", "contact", "support", "hours",   "monday",  "friday"};
    s.name_words = {
        "arbor",   "birch",   "cedar",   "delta",   "ember",   "fjord",   "grove",
        "haven",   "indigo",  "juniper", "keel",    "lumen",   "maple",   "north",
        "onyx",    "pine",    "quartz",  "ridge",   "stone",   "timber",  "umber",
        "vale",    "willow",  "xenon",   "yarrow",  "zephyr",  "bay",     "cove",
        "aspen",   "brook",   "crest",   "dune",    "elm",     "fern",    "glen",
        "heath",   "isle",    "knoll",   "larch",   "mesa",    "nook",    "oriel",
        "plume",   "quay",    "reef",    "shoal",   "thorn",   "upland",  "vista",
        "wharf"};
    s.amount_values = {
        "193.00", "478.25", "312.40", "58.90",  "704.15", "266.80", "831.55", "149.95",
        "520.30", "97.60",  "615.45", "382.70", "240.05", "768.90", "103.35", "456.20",
        "689.75", "35.10",  "574.85", "821.50", "137.25", "902.60", "318.95", "645.40",
        "72.15",  "804.90", "231.65", "559.80", "126.45", "947.30", "363.55", "680.20"};
    s.date_values = {
        "2024-01-15", "2024-02-28", "2024-03-09", "2024-04-22", "2024-05-11",
        "2024-06-30", "2024-07-04", "2024-08-19", "2024-09-02", "2024-10-27",
        "2024-11-13", "2024-12-24", "2025-01-08", "2025-02-14", "2025-03-21",
        "2025-04-06", "2025-05-19", "2025-06-23", "2025-07-31", "2025-08-12"};
    return s;
}

void GenSpec::validate() const {
    if (doc_count < 0) throw ConfigError("corpus.doc_count must be >= 0");
    if (train_fraction < 0 || dev_fraction < 0 || train_fraction + dev_fraction > 1.0) {
        throw ConfigError("corpus split fractions must be non-negative and sum to <= 1");
    }
    if (page_width <= 0 || page_height <= 0) throw ConfigError("corpus page dimensions must be positive");
    if (grid_cols < 2) throw ConfigError("corpus.grid_cols must be >= 2");
    if (filler_words.empty() || name_words.empty() || amount_values.empty() ||
        date_values.empty()) {
        throw ConfigError("corpus word pools must be non-empty");
    }
    if (entity_tags.size() < 2) throw ConfigError("corpus.entity_tags needs at least 2 tags");
    if (doc_classes.empty()) throw ConfigError("corpus.doc_classes must be non-empty");
    for (double p : {multi_segment_prob, distractor_prob, cross_context_prob,
                     vertical_pair_prob}) {
        if (p < 0.0 || p > 1.0) throw ConfigError("corpus probabilities must be in [0,1]");
    }
    if (jitter < 0.0) throw ConfigError("corpus.jitter must be >= 0");
    if (name_in_filler_prob < 0 || name_in_filler_prob > 1 || loose_value_prob < 0 ||
        loose_value_prob > 1) {
        throw ConfigError("corpus probabilities must be in [0,1]");
    }
    if (name_cluster_size < 2 || name_cluster_size > static_cast<int>(name_words.size())) {
        throw ConfigError("corpus.name_cluster_size must be in [2, |name_words|]");
    }
    // Worst case block layout: header + company + 3 address lines + stacked
    // date pair + stacked total pair + distractor + loose-value line.
    const int worst = 1 + 1 + 3 + 2 + 2 + 1 + 1;
    if (grid_rows < worst) {
        throw ConfigError("corpus.grid_rows = " + std::to_string(grid_rows) +
                          " cannot hold up to " + std::to_string(worst) +
                          " content lines (grid too small for the entity schema)");
    }
}

namespace {

struct GenWord {
    std::string text;
    std::string label;
};

using GenSegment = std::vector<GenWord>;
using GenLine = std::vector<GenSegment>;

constexpr double kCharW = 14.0;
constexpr double kWordH = 36.0;
constexpr double kWordGap = 14.0;
constexpr double kRowH = 100.0;
constexpr double kMarginX = 40.0;
constexpr double kMarginY = 60.0;

double word_width(const std::string& text) {
    return kCharW * static_cast<double>(text.size()) + kWordGap;
}

class DocBuilder {
public:
    DocBuilder(const GenSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
        full_budget_ = spec.page_width - 2 * kMarginX - 30.0;
        half_budget_ = (spec.page_width - 2 * kMarginX) / spec.grid_cols - 40.0;
    }

    Document build(const std::string& doc_id) {
        const std::string cls =
            spec_.doc_classes[rng_.below(spec_.doc_classes.size())];

        std::vector<GenLine> lines;
        {
            GenSegment header{{cls, ""}, {pick(spec_.name_words), ""}};
            if (rng_.bernoulli(0.5)) header.push_back({pick(spec_.filler_words), ""});
            lines.push_back({std::move(header)});
        }

        std::vector<std::vector<GenLine>> blocks;
        blocks.push_back(company_block());
        blocks.push_back(address_block());
        blocks.push_back(pair_block("date", pick(spec_.date_values), "date"));
        const std::string amount = pick(spec_.amount_values);
        blocks.push_back(pair_block("total", amount, "total"));
        if (rng_.bernoulli(spec_.distractor_prob)) {
            blocks.push_back(distractor_block(amount));
        }
        if (rng_.bernoulli(spec_.loose_value_prob)) {
            blocks.push_back(loose_value_block());
        }
        rng_.shuffle(blocks);
        for (auto& b : blocks) {
            for (auto& l : b) lines.push_back(std::move(l));
        }
        while (static_cast<int>(lines.size()) < spec_.grid_rows && rng_.bernoulli(0.75)) {
            lines.push_back(filler_line());
        }
        if (static_cast<int>(lines.size()) > spec_.grid_rows) {
            throw RuntimeError("generated " + std::to_string(lines.size()) +
                               " lines for a grid of " + std::to_string(spec_.grid_rows));
        }
        return realize(doc_id, cls, lines);
    }

private:
    const std::string& pick(const std::vector<std::string>& pool) {
        return pool[rng_.below(pool.size())];
    }

    // Address/company words come from one cluster of consecutive pool
    // entries, so line-mates predict each other.
    int pick_cluster() {
        const int n_clusters =
            static_cast<int>(spec_.name_words.size()) / spec_.name_cluster_size;
        return static_cast<int>(rng_.below(static_cast<uint64_t>(std::max(1, n_clusters))));
    }

    const std::string& pick_in_cluster(int cluster) {
        const size_t base = static_cast<size_t>(cluster) *
                            static_cast<size_t>(spec_.name_cluster_size);
        return spec_.name_words[base + rng_.below(static_cast<uint64_t>(
                                            spec_.name_cluster_size))];
    }

    // Filler text walks a fixed bigram graph (four successors per word), so
    // a masked filler word is inferable from its neighbors.
    size_t next_filler_index(size_t prev) {
        const size_t f = spec_.filler_words.size();
        const uint64_t pickn = rng_.below(4);
        return (prev * 5 + 1 + pickn * 3) % f;
    }

    // Filler vocabulary with entity-like surfaces mixed in, so a word's
    // identity does not give its tag away. Names mixed here are drawn from
    // the whole pool (no cluster coherence).
    const std::string& pick_fillerish(size_t& chain) {
        if (rng_.bernoulli(spec_.name_in_filler_prob)) return pick(spec_.name_words);
        chain = next_filler_index(chain);
        return spec_.filler_words[chain];
    }

    // Appends words from `next` while the pixel budget and count cap allow.
    template <typename NextWord>
    GenSegment fill(int min_words, int max_words, double budget, const std::string& label,
                    NextWord next) {
        GenSegment seg;
        double used = 0;
        const int target = static_cast<int>(rng_.range(min_words, max_words));
        for (int i = 0; i < target; ++i) {
            const std::string w = next();
            if (!seg.empty() && used + word_width(w) > budget) break;
            used += word_width(w);
            seg.push_back({w, label});
        }
        return seg;
    }

    std::vector<GenLine> company_block() {
        const int cluster = pick_cluster();
        GenSegment seg =
            fill(2, 3, full_budget_ - word_width("ltd"), "company",
                 [&] { return pick_in_cluster(cluster); });
        seg.push_back({"ltd", "company"});
        return {GenLine{std::move(seg)}};
    }

    std::vector<GenLine> address_block() {
        const int n_lines = rng_.bernoulli(spec_.multi_segment_prob)
                                ? static_cast<int>(rng_.range(2, 3))
                                : 1;
        const int cluster = pick_cluster();  // shared by all lines of one address
        std::vector<GenLine> out;
        for (int i = 0; i < n_lines; ++i) {
            out.push_back(GenLine{fill(3, 5, full_budget_, "address",
                                       [&] { return pick_in_cluster(cluster); })});
        }
        return out;
    }

    // A key segment plus a labeled value segment. Normally the value reads
    // after the key; a cross-context fraction places it left of or above the
    // key so the straightforward order is misleading.
    std::vector<GenLine> pair_block(const std::string& key, const std::string& value,
                                    const std::string& tag) {
        GenSegment key_seg{{key, ""}};
        GenSegment value_seg{{value, tag}};
        if (rng_.bernoulli(spec_.cross_context_prob)) {
            if (rng_.bernoulli(spec_.vertical_pair_prob)) {
                return {GenLine{value_seg}, GenLine{key_seg}};  // value above key
            }
            return {GenLine{value_seg, key_seg}};               // value left of key
        }
        if (rng_.bernoulli(spec_.vertical_pair_prob * 0.3)) {
            return {GenLine{key_seg}, GenLine{value_seg}};      // key above value
        }
        return {GenLine{key_seg, value_seg}};
    }

    std::vector<GenLine> distractor_block(const std::string& amount) {
        GenSegment key_seg{{rng_.bernoulli(0.5) ? std::string("qty") : std::string("subtotal"), ""}};
        GenSegment value_seg{{amount, ""}};  // same surface text, no label
        return {GenLine{key_seg, value_seg}};
    }

    // An unkeyed date or amount inside plain filler text; unlabeled, so the
    // corresponding tag cannot be read off the surface form alone.
    std::vector<GenLine> loose_value_block() {
        size_t chain = rng_.below(spec_.filler_words.size());
        GenSegment seg =
            fill(2, 3, full_budget_ / 2, "", [&] { return pick_fillerish(chain); });
        seg.push_back({rng_.bernoulli(0.5) ? pick(spec_.date_values) : pick(spec_.amount_values),
                       ""});
        seg.push_back({pick(spec_.filler_words), ""});
        return {GenLine{std::move(seg)}};
    }

    GenLine filler_line() {
        GenLine line;
        const int n_segs = rng_.bernoulli(0.4) ? 2 : 1;
        for (int s = 0; s < n_segs; ++s) {
            size_t chain = rng_.below(spec_.filler_words.size());
            line.push_back(fill(n_segs == 2 ? 2 : 3, n_segs == 2 ? 3 : 7,
                                n_segs == 2 ? half_budget_ : full_budget_, "",
                                [&] { return pick_fillerish(chain); }));
        }
        return line;
    }

    double jitter_px() {
        if (spec_.jitter <= 0) return 0.0;
        return static_cast<double>(rng_.range(-static_cast<int64_t>(spec_.jitter),
                                              static_cast<int64_t>(spec_.jitter)));
    }

    Document realize(const std::string& doc_id, const std::string& cls,
                     const std::vector<GenLine>& lines) {
        Document doc;
        doc.doc_id = doc_id;
        doc.page_width = spec_.page_width;
        doc.page_height = spec_.page_height;
        doc.doc_class = cls;

        int seg_id = 0;
        for (size_t row = 0; row < lines.size(); ++row) {
            const GenLine& line = lines[row];
            const double y0 = kMarginY + static_cast<double>(row) * kRowH;
            const int n = static_cast<int>(line.size());
            const double span = spec_.page_width - 2 * kMarginX;
            const double col_w = span / n;
            for (int c = 0; c < n; ++c) {
                Segment seg;
                seg.segment_id = seg_id++;
                double x = kMarginX + c * col_w;
                const double y = y0 + jitter_px();
                for (const auto& gw : line[static_cast<size_t>(c)]) {
                    Word w;
                    w.text = gw.text;
                    w.entity_label = gw.label;
                    const double wlen = kCharW * static_cast<double>(gw.text.size());
                    double x1 = x + jitter_px();
                    double y1 = y + jitter_px();
                    double x2 = x1 + wlen;
                    double y2 = y1 + kWordH;
                    x1 = std::clamp(x1, 0.0, spec_.page_width - 1);
                    x2 = std::clamp(x2, x1 + 1, spec_.page_width);
                    y1 = std::clamp(y1, 0.0, spec_.page_height - 1);
                    y2 = std::clamp(y2, y1 + 1, spec_.page_height);
                    w.box = {x1, y1, x2, y2};
                    seg.words.push_back(std::move(w));
                    x = x2 + kWordGap;
                }
                BBox box = seg.words.front().box;
                for (const auto& w : seg.words) box = BBox::join(box, w.box);
                seg.box = box;
                doc.segments.push_back(std::move(seg));
            }
        }
        validate_document(doc);
        return doc;
    }

    const GenSpec& spec_;
    Rng& rng_;
    double full_budget_ = 0;
    double half_budget_ = 0;
};

std::string split_doc_id(const char* split, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%06d", split, index);
    return buf;
}

}  // namespace

CorpusSplits generate_corpus(const GenSpec& spec) {
    spec.validate();
    CorpusSplits out;
    const int n_train = static_cast<int>(std::llround(spec.train_fraction * spec.doc_count));
    const int n_dev = static_cast<int>(std::llround(spec.dev_fraction * spec.doc_count));
    for (int i = 0; i < spec.doc_count; ++i) {
        Rng rng(derive_seed(spec.seed, "gen-doc", static_cast<uint64_t>(i)));
        DocBuilder builder(spec, rng);
        if (i < n_train) {
            out.train.push_back(builder.build(split_doc_id("train", i)));
        } else if (i < n_train + n_dev) {
            out.dev.push_back(builder.build(split_doc_id("dev", i - n_train)));
        } else {
            out.test.push_back(builder.build(split_doc_id("test", i - n_train - n_dev)));
        }
    }
    return out;
}

std::vector<EntitySpan> gold_spans(const Document& doc) {
    Document ordered = doc;
    ordered.serial_order.clear();
    if (!ordered.normalized) ordered = normalize_document(ordered);
    const std::vector<int> order = reading_order(ordered);

    std::vector<EntitySpan> spans;
    EntitySpan current;
    auto flush = [&]() {
        if (!current.tag.empty()) spans.push_back(current);
        current = {};
    };
    for (int seg_idx : order) {
        const auto& seg = doc.segments[static_cast<size_t>(seg_idx)];
        for (size_t wi = 0; wi < seg.words.size(); ++wi) {
            const std::string& tag = seg.words[wi].entity_label;
            if (tag.empty()) {
                flush();
                continue;
            }
            if (tag != current.tag) {
                flush();
                current.tag = tag;
            }
            current.words.emplace_back(seg_idx, static_cast<int>(wi));
        }
    }
    flush();
    return spans;
}

CorpusStats corpus_stats(const std::vector<Document>& docs,
                         const std::vector<std::string>& entity_tags) {
    if (docs.empty()) throw ConfigError("corpus_stats: empty corpus");
    CorpusStats st;
    st.docs = static_cast<int>(docs.size());
    std::map<std::string, TagStats> by_tag;
    for (const auto& t : entity_tags) by_tag[t] = TagStats{t, 0, 0, 0};

    int total_entities = 0, total_multi = 0, distractor_docs = 0;
    for (const auto& doc : docs) {
        st.segments += static_cast<int>(doc.segments.size());
        st.words += doc.word_count();
        for (const auto& span : gold_spans(doc)) {
            auto& row = by_tag[span.tag];  // unexpected tags get their own row
            if (row.tag.empty()) row.tag = span.tag;
            row.entities += 1;
            row.words += static_cast<int>(span.words.size());
            std::set<int> segs;
            for (auto& [s, w] : span.words) segs.insert(s);
            if (segs.size() >= 2) {
                row.multi_segment += 1;
                ++total_multi;
            }
            ++total_entities;
        }
        // duplicate-distractor: some unlabeled word shares text with a
        // labeled word of the same document
        std::set<std::string> labeled_texts, unlabeled_texts;
        for (const auto& seg : doc.segments) {
            for (const auto& w : seg.words) {
                (w.entity_label.empty() ? unlabeled_texts : labeled_texts).insert(w.text);
            }
        }
        for (const auto& t : labeled_texts) {
            if (unlabeled_texts.count(t)) {
                ++distractor_docs;
                break;
            }
        }
    }
    for (auto& [tag, row] : by_tag) st.per_tag.push_back(row);
    st.multi_segment_fraction =
        total_entities > 0 ? static_cast<double>(total_multi) / total_entities : 0.0;
    st.distractor_fraction = static_cast<double>(distractor_docs) / st.docs;
    return st;
}

std::string CorpusStats::table() const {
    std::ostringstream os;
    os << "docs: " << docs << "  segments: " << segments << "  words: " << words << "\n";
    os << "tag           entities    words  multi-seg\n";
    for (const auto& row : per_tag) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-12s %9d %8d %10d\n", row.tag.c_str(), row.entities,
                      row.words, row.multi_segment);
        os << buf;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "multi-segment entity fraction: %.4f\n",
                  multi_segment_fraction);
    os << buf;
    std::snprintf(buf, sizeof(buf), "duplicate-distractor doc fraction: %.4f\n",
                  distractor_fraction);
    os << buf;
    return os.str();
}

std::string CorpusStats::to_json() const {
    nlohmann::json j;
    j["docs"] = docs;
    j["segments"] = segments;
    j["words"] = words;
    j["multi_segment_fraction"] = multi_segment_fraction;
    j["distractor_fraction"] = distractor_fraction;
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& row : per_tag) {
        tags.push_back({{"tag", row.tag},
                        {"entities", row.entities},
                        {"words", row.words},
                        {"multi_segment", row.multi_segment}});
    }
    j["tags"] = std::move(tags);
    return j.dump(2);
}

}  // namespace layoutkit

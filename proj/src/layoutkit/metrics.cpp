#include "layoutkit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"

namespace layoutkit {

BioLabels::BioLabels(std::vector<std::string> tags) : tags_(std::move(tags)) {
    std::set<std::string> seen(tags_.begin(), tags_.end());
    if (seen.size() != tags_.size()) throw ConfigError("duplicate entity tags");
}

int BioLabels::begin_label(const std::string& tag) const {
    for (size_t i = 0; i < tags_.size(); ++i) {
        if (tags_[i] == tag) return 1 + 2 * static_cast<int>(i);
    }
    throw RuntimeError("unknown entity tag '" + tag + "'");
}

int BioLabels::inside_label(const std::string& tag) const { return begin_label(tag) + 1; }

const std::string& BioLabels::tag_of(int label) const {
    if (label <= 0 || label >= num_labels()) throw RuntimeError("label id out of range");
    return tags_[static_cast<size_t>((label - 1) / 2)];
}

std::string BioLabels::name_of(int label) const {
    if (label == 0) return "O";
    return (is_begin(label) ? "B-" : "I-") + tag_of(label);
}

std::vector<EntitySpan> decode_bio(const BioLabels& bio, const std::vector<int>& word_labels,
                                   const std::vector<std::pair<int, int>>& word_refs) {
    if (word_labels.size() != word_refs.size()) {
        throw RuntimeError("decode_bio: label/reference length mismatch");
    }
    std::vector<EntitySpan> spans;
    EntitySpan current;
    auto flush = [&]() {
        if (!current.tag.empty()) spans.push_back(current);
        current = {};
    };
    for (size_t i = 0; i < word_labels.size(); ++i) {
        const int label = word_labels[i];
        if (label == bio.o_label()) {
            flush();
            continue;
        }
        const std::string& tag = bio.tag_of(label);
        // B always opens; I continues only a same-tag open span, otherwise it
        // is repaired into a fresh begin.
        if (bio.is_begin(label) || tag != current.tag) {
            flush();
            current.tag = tag;
        }
        current.words.push_back(word_refs[i]);
    }
    flush();
    return spans;
}

namespace {

void finalize(MetricRow& row) {
    row.precision = row.predicted > 0 ? static_cast<double>(row.matched) / row.predicted : 0.0;
    row.recall = row.gold > 0 ? static_cast<double>(row.matched) / row.gold : 0.0;
    row.f1 = (row.precision + row.recall) > 0.0
                 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
}

EntitySpan canonical(const EntitySpan& s) {
    EntitySpan out = s;
    std::sort(out.words.begin(), out.words.end());
    return out;
}

}  // namespace

EvalReport span_f1(const std::vector<std::vector<EntitySpan>>& gold,
                   const std::vector<std::vector<EntitySpan>>& predicted, MatchLevel level,
                   const std::vector<std::string>& tags) {
    if (gold.size() != predicted.size()) {
        throw RuntimeError("span_f1: gold and predicted cover different document sets");
    }
    std::map<std::string, MetricRow> rows;
    for (const auto& t : tags) rows[t].name = t;

    for (size_t d = 0; d < gold.size(); ++d) {
        if (level == MatchLevel::kEntity) {
            std::multiset<EntitySpan> gold_set, pred_set;
            for (const auto& s : gold[d]) gold_set.insert(canonical(s));
            for (const auto& s : predicted[d]) pred_set.insert(canonical(s));
            for (const auto& s : gold_set) rows[s.tag].gold += 1;
            for (const auto& s : pred_set) {
                rows[s.tag].predicted += 1;
                auto it = gold_set.find(s);
                if (it != gold_set.end()) {
                    rows[s.tag].matched += 1;
                    gold_set.erase(it);
                }
            }
        } else {
            std::map<std::pair<int, int>, std::string> gold_tags, pred_tags;
            for (const auto& s : gold[d]) {
                for (const auto& w : s.words) gold_tags[w] = s.tag;
            }
            for (const auto& s : predicted[d]) {
                for (const auto& w : s.words) pred_tags[w] = s.tag;
            }
            for (const auto& [w, t] : gold_tags) rows[t].gold += 1;
            for (const auto& [w, t] : pred_tags) {
                rows[t].predicted += 1;
                auto it = gold_tags.find(w);
                if (it != gold_tags.end() && it->second == t) rows[t].matched += 1;
            }
        }
    }

    EvalReport report;
    report.level = level == MatchLevel::kEntity ? "entity" : "word";
    report.overall.name = "overall";
    for (auto& [tag, row] : rows) {
        if (row.name.empty()) row.name = tag;
        finalize(row);
        report.overall.gold += row.gold;
        report.overall.predicted += row.predicted;
        report.overall.matched += row.matched;
        report.per_tag.push_back(row);
    }
    finalize(report.overall);
    return report;
}

EvalReport classification_report(const std::vector<std::string>& gold,
                                 const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& classes) {
    if (gold.size() != predicted.size()) {
        throw RuntimeError("classification_report: size mismatch");
    }
    EvalReport report;
    report.level = "classification";
    std::map<std::string, ClassAccuracyRow> rows;
    for (const auto& c : classes) rows[c].label = c;
    int correct = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        auto& row = rows[gold[i]];
        if (row.label.empty()) row.label = gold[i];
        row.total += 1;
        if (gold[i] == predicted[i]) {
            row.correct += 1;
            ++correct;
        }
    }
    report.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / gold.size();
    for (auto& [c, row] : rows) report.per_class.push_back(row);
    return report;
}

std::string EvalReport::table() const {
    std::ostringstream os;
    char buf[160];
    if (level == "classification") {
        std::snprintf(buf, sizeof(buf), "accuracy: %.4f\n", accuracy);
        os << buf;
        os << "class          correct    total      acc\n";
        for (const auto& row : per_class) {
            const double acc = row.total > 0 ? static_cast<double>(row.correct) / row.total : 0.0;
            std::snprintf(buf, sizeof(buf), "%-14s %7d %8d %8.4f\n", row.label.c_str(),
                          row.correct, row.total, acc);
            os << buf;
        }
        return os.str();
    }
    os << "level: " << level << "\n";
    os << "tag                P        R       F1     gold     pred  matched\n";
    auto line = [&](const MetricRow& row) {
        std::snprintf(buf, sizeof(buf), "%-12s %8.4f %8.4f %8.4f %8d %8d %8d\n",
                      row.name.c_str(), row.precision, row.recall, row.f1, row.gold,
                      row.predicted, row.matched);
        os << buf;
    };
    for (const auto& row : per_tag) line(row);
    line(overall);
    return os.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    if (level == "classification") {
        os << "class,correct,total,accuracy\n";
        for (const auto& row : per_class) {
            const double acc = row.total > 0 ? static_cast<double>(row.correct) / row.total : 0.0;
            os << row.label << "," << row.correct << "," << row.total << "," << acc << "\n";
        }
        os << "overall,,," << accuracy << "\n";
        return os.str();
    }
    os << "level,tag,precision,recall,f1,gold,predicted,matched\n";
    auto line = [&](const MetricRow& row) {
        os << level << "," << row.name << "," << row.precision << "," << row.recall << ","
           << row.f1 << "," << row.gold << "," << row.predicted << "," << row.matched << "\n";
    };
    for (const auto& row : per_tag) line(row);
    line(overall);
    return os.str();
}

namespace {

nlohmann::json report_to_json_obj(const EvalReport& r) {
    nlohmann::json j;
    j["level"] = r.level;
    if (r.level == "classification") {
        j["accuracy"] = r.accuracy;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : r.per_class) {
            rows.push_back({{"class", row.label}, {"correct", row.correct}, {"total", row.total}});
        }
        j["per_class"] = std::move(rows);
        return j;
    }
    auto row_json = [](const MetricRow& row) {
        return nlohmann::json{{"tag", row.name},         {"precision", row.precision},
                              {"recall", row.recall},    {"f1", row.f1},
                              {"gold", row.gold},        {"predicted", row.predicted},
                              {"matched", row.matched}};
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.per_tag) rows.push_back(row_json(row));
    j["per_tag"] = std::move(rows);
    j["overall"] = row_json(r.overall);
    return j;
}

}  // namespace

std::string EvalReport::to_json() const { return report_to_json_obj(*this).dump(2); }

std::string RobustnessTable::table() const {
    std::ostringstream os;
    char buf[256];
    os << "p_swap   word-F1  entity-F1";
    if (!rows.empty()) {
        for (const auto& row : rows.front().entity_level.per_tag) {
            std::snprintf(buf, sizeof(buf), "  %10s", row.name.c_str());
            os << buf;
        }
    }
    os << "\n";
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%6.2f  %8.4f  %9.4f", row.p_swap,
                      row.word_level.overall.f1, row.entity_level.overall.f1);
        os << buf;
        for (const auto& tag_row : row.entity_level.per_tag) {
            std::snprintf(buf, sizeof(buf), "  %10.4f", tag_row.f1);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string RobustnessTable::to_csv() const {
    std::ostringstream os;
    os << "p_swap,word_f1,entity_f1";
    if (!rows.empty()) {
        for (const auto& row : rows.front().entity_level.per_tag) {
            os << ",entity_f1_" << row.name;
        }
    }
    os << "\n";
    for (const auto& row : rows) {
        os << row.p_swap << "," << row.word_level.overall.f1 << ","
           << row.entity_level.overall.f1;
        for (const auto& tag_row : row.entity_level.per_tag) os << "," << tag_row.f1;
        os << "\n";
    }
    return os.str();
}

std::string RobustnessTable::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
        j.push_back({{"p_swap", row.p_swap},
                     {"word", report_to_json_obj(row.word_level)},
                     {"entity", report_to_json_obj(row.entity_level)}});
    }
    return j.dump(2);
}

}  // namespace layoutkit

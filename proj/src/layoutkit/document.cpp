#include "layoutkit/document.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "layoutkit/errors.hpp"

namespace layoutkit {

using nlohmann::json;

OneDMode parse_one_d_mode(const std::string& s) {
    if (s == "global") return OneDMode::kGlobal;
    if (s == "local") return OneDMode::kLocal;
    throw ConfigError("unknown 1D position mode '" + s + "' (expected 'global' or 'local')");
}

TwoDMode parse_two_d_mode(const std::string& s) {
    if (s == "word") return TwoDMode::kWord;
    if (s == "segment") return TwoDMode::kSegment;
    throw ConfigError("unknown 2D position mode '" + s + "' (expected 'word' or 'segment')");
}

std::string to_string(OneDMode m) { return m == OneDMode::kGlobal ? "global" : "local"; }
std::string to_string(TwoDMode m) { return m == TwoDMode::kWord ? "word" : "segment"; }

int Document::word_count() const {
    int n = 0;
    for (const auto& s : segments) n += static_cast<int>(s.words.size());
    return n;
}

namespace {

bool contains_whitespace(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

void check_box_order(const BBox& b, const std::string& doc_id, const std::string& what) {
    if (b.x1 > b.x2 || b.y1 > b.y2) {
        std::ostringstream os;
        os << "document '" << doc_id << "': " << what << " has inverted corners ("
           << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << ")";
        throw ConfigError(os.str());
    }
}

}  // namespace

void validate_document(const Document& doc) {
    if (doc.doc_id.empty()) throw ConfigError("document with empty doc_id");
    if (doc.page_width <= 0.0 || doc.page_height <= 0.0) {
        throw ConfigError("document '" + doc.doc_id + "': non-positive page dimensions");
    }
    if (doc.segments.empty()) {
        throw ConfigError("document '" + doc.doc_id + "': no segments");
    }
    const double max_x = doc.normalized ? 1.0 : doc.page_width;
    const double max_y = doc.normalized ? 1.0 : doc.page_height;
    // Segment boxes must contain their word boxes within one quantization bin.
    const double tol_x = doc.normalized ? 1.0 / kCoordBins : doc.page_width / kCoordBins;
    const double tol_y = doc.normalized ? 1.0 / kCoordBins : doc.page_height / kCoordBins;

    std::vector<int> seen_ids;
    for (const auto& seg : doc.segments) {
        if (seg.words.empty()) {
            throw ConfigError("document '" + doc.doc_id + "': segment " +
                              std::to_string(seg.segment_id) + " has no words");
        }
        if (std::find(seen_ids.begin(), seen_ids.end(), seg.segment_id) != seen_ids.end()) {
            throw ConfigError("document '" + doc.doc_id + "': duplicate segment_id " +
                              std::to_string(seg.segment_id));
        }
        seen_ids.push_back(seg.segment_id);
        check_box_order(seg.box, doc.doc_id, "segment box");
        for (const auto& w : seg.words) {
            if (w.text.empty()) {
                throw ConfigError("document '" + doc.doc_id + "': empty word text");
            }
            if (contains_whitespace(w.text)) {
                throw ConfigError("document '" + doc.doc_id + "': word '" + w.text +
                                  "' contains whitespace");
            }
            check_box_order(w.box, doc.doc_id, "word box");
            if (w.box.x1 < 0.0 || w.box.y1 < 0.0 || w.box.x2 > max_x || w.box.y2 > max_y) {
                throw ConfigError("document '" + doc.doc_id + "': word '" + w.text +
                                  "' box outside the page");
            }
            if (w.box.x1 < seg.box.x1 - tol_x || w.box.y1 < seg.box.y1 - tol_y ||
                w.box.x2 > seg.box.x2 + tol_x || w.box.y2 > seg.box.y2 + tol_y) {
                throw ConfigError("document '" + doc.doc_id + "': word '" + w.text +
                                  "' box outside its segment box");
            }
        }
    }
}

Document normalize_document(const Document& doc) {
    if (doc.page_width <= 0.0 || doc.page_height <= 0.0) {
        throw ConfigError("document '" + doc.doc_id + "': non-positive page dimensions");
    }
    if (doc.normalized) return doc;
    Document out = doc;
    const double sx = 1.0 / doc.page_width;
    const double sy = 1.0 / doc.page_height;
    auto scale_box = [&](BBox& b) {
        b.x1 *= sx; b.x2 *= sx;
        b.y1 *= sy; b.y2 *= sy;
    };
    for (auto& seg : out.segments) {
        scale_box(seg.box);
        for (auto& w : seg.words) scale_box(w.box);
    }
    out.normalized = true;
    return out;
}

std::vector<std::vector<int>> group_lines(const Document& doc) {
    const int n = static_cast<int>(doc.segments.size());
    // Union-find over the pairwise same-line relation.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (same_line(doc.segments[i].box, doc.segments[j].box)) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::vector<std::vector<int>> groups;
    std::vector<int> root_to_group(n, -1);
    for (int i = 0; i < n; ++i) {
        int r = find(i);
        if (root_to_group[r] < 0) {
            root_to_group[r] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[root_to_group[r]].push_back(i);
    }
    for (auto& g : groups) {
        std::sort(g.begin(), g.end(), [&](int a, int b) {
            const auto& ba = doc.segments[a].box;
            const auto& bb = doc.segments[b].box;
            if (ba.x1 != bb.x1) return ba.x1 < bb.x1;
            return doc.segments[a].segment_id < doc.segments[b].segment_id;
        });
    }
    auto line_y = [&](const std::vector<int>& g) {
        double sum = 0.0;
        for (int idx : g) sum += doc.segments[idx].box.cy();
        return sum / static_cast<double>(g.size());
    };
    std::sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
        const double ya = line_y(a), yb = line_y(b);
        if (ya != yb) return ya < yb;
        return doc.segments[a.front()].segment_id < doc.segments[b.front()].segment_id;
    });
    return groups;
}

std::vector<int> reading_order(const Document& doc) {
    std::vector<int> order;
    for (const auto& line : group_lines(doc)) {
        order.insert(order.end(), line.begin(), line.end());
    }
    return order;
}

Document assign_positions(const Document& doc, OneDMode mode) {
    Document out = doc;
    if (out.serial_order.empty()) out.serial_order = reading_order(out);
    if (out.serial_order.size() != out.segments.size()) {
        throw RuntimeError("document '" + doc.doc_id + "': serialization order size mismatch");
    }
    int global_pos = 1;
    for (int seg_idx : out.serial_order) {
        auto& seg = out.segments[seg_idx];
        int local_pos = 1;
        for (auto& w : seg.words) {
            w.pos_1d = mode == OneDMode::kGlobal ? global_pos++ : local_pos++;
        }
    }
    return out;
}

namespace {

json box_to_json(const BBox& b) {
    auto num = [](double v) -> json {
        double r = std::round(v);
        // Pixel boxes in corpora are whole numbers; keep them as JSON ints so
        // save/load round-trips are byte-stable.
        if (r == v && std::abs(v) < 1e15) return static_cast<int64_t>(r);
        return v;
    };
    return json::array({num(b.x1), num(b.y1), num(b.x2), num(b.y2)});
}

BBox box_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) {
        throw ConfigError(where + ": 'box' must be an array of 4 numbers");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + ": 'box' must contain numbers");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json document_to_json(const Document& doc) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["page_width"] = doc.page_width;
    j["page_height"] = doc.page_height;
    if (!doc.doc_class.empty()) j["class"] = doc.doc_class;
    json segs = json::array();
    for (const auto& seg : doc.segments) {
        json js;
        js["box"] = box_to_json(seg.box);
        json words = json::array();
        for (const auto& w : seg.words) {
            json jw;
            jw["text"] = w.text;
            jw["box"] = box_to_json(w.box);
            if (!w.entity_label.empty()) jw["label"] = w.entity_label;
            words.push_back(std::move(jw));
        }
        js["words"] = std::move(words);
        segs.push_back(std::move(js));
    }
    j["segments"] = std::move(segs);
    return j;
}

Document document_from_json(const json& j, const std::string& where) {
    static const char* kDocKeys[] = {"doc_id", "page_width", "page_height", "class", "segments"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(std::begin(kDocKeys), std::end(kDocKeys),
                         [&](const char* k) { return it.key() == k; }) == std::end(kDocKeys)) {
            throw ConfigError(where + ": unknown document key '" + it.key() + "'");
        }
    }
    Document doc;
    if (!j.contains("doc_id") || !j["doc_id"].is_string()) {
        throw ConfigError(where + ": missing string 'doc_id'");
    }
    doc.doc_id = j["doc_id"].get<std::string>();
    if (!j.contains("page_width") || !j.contains("page_height") ||
        !j["page_width"].is_number() || !j["page_height"].is_number()) {
        throw ConfigError(where + ": missing numeric 'page_width'/'page_height'");
    }
    doc.page_width = j["page_width"].get<double>();
    doc.page_height = j["page_height"].get<double>();
    if (j.contains("class")) doc.doc_class = j["class"].get<std::string>();
    if (!j.contains("segments") || !j["segments"].is_array()) {
        throw ConfigError(where + ": missing 'segments' array");
    }
    int next_id = 0;
    for (const auto& js : j["segments"]) {
        Segment seg;
        seg.segment_id = next_id++;
        seg.box = box_from_json(js.at("box"), where);
        if (!js.contains("words") || !js["words"].is_array()) {
            throw ConfigError(where + ": segment without 'words' array");
        }
        for (const auto& jw : js["words"]) {
            Word w;
            if (!jw.contains("text") || !jw["text"].is_string()) {
                throw ConfigError(where + ": word without string 'text'");
            }
            w.text = jw["text"].get<std::string>();
            w.box = box_from_json(jw.at("box"), where);
            if (jw.contains("label")) w.entity_label = jw["label"].get<std::string>();
            seg.words.push_back(std::move(w));
        }
        doc.segments.push_back(std::move(seg));
    }
    validate_document(doc);
    return doc;
}

}  // namespace

std::vector<Document> parse_corpus_jsonl(const std::string& text, const std::string& origin) {
    std::vector<Document> docs;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(where + ": malformed JSON line (" + std::string(e.what()) + ")");
        }
        docs.push_back(document_from_json(j, where));
    }
    return docs;
}

std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open corpus file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_corpus_jsonl(ss.str(), path);
}

std::string corpus_to_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        out += document_to_json(d).dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RuntimeError("cannot write corpus file '" + path + "'");
    f << corpus_to_jsonl(docs);
    if (!f) throw RuntimeError("failed writing corpus file '" + path + "'");
}

bool documents_equal(const Document& a, const Document& b) {
    if (a.doc_id != b.doc_id || a.page_width != b.page_width ||
        a.page_height != b.page_height || a.doc_class != b.doc_class ||
        a.segments.size() != b.segments.size()) {
        return false;
    }
    for (size_t i = 0; i < a.segments.size(); ++i) {
        const auto& sa = a.segments[i];
        const auto& sb = b.segments[i];
        if (!(sa.box == sb.box) || sa.words.size() != sb.words.size()) return false;
        for (size_t k = 0; k < sa.words.size(); ++k) {
            const auto& wa = sa.words[k];
            const auto& wb = sb.words[k];
            if (wa.text != wb.text || !(wa.box == wb.box) ||
                wa.entity_label != wb.entity_label) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace layoutkit

#include "scattermesh/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "csv.hpp"
#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

using json = nlohmann::json;

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::vector<std::string> split_pipe(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '|') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::optional<std::string> non_empty(std::string s) {
    if (s.empty()) return std::nullopt;
    return s;
}

class RecordSink {
public:
    void add(DocumentRecord record, std::size_t line) {
        if (record.id.empty() || record.title.empty()) {
            ++result_.skipped;
            return;
        }
        if (!seen_.insert(record.id).second) {
            throw IngestError(line_prefix(line) + "duplicate id '" + record.id + "'");
        }
        records_.push_back(std::move(record));
    }

    LoadResult finish(std::string provenance) {
        result_.corpus = Corpus(std::move(records_), std::move(provenance));
        return std::move(result_);
    }

private:
    std::vector<DocumentRecord> records_;
    std::unordered_set<std::string> seen_;
    LoadResult result_;
};

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw IngestError(line_prefix(line) + "field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

DocumentRecord parse_json_record(const std::string& text, std::size_t line) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IngestError(line_prefix(line) + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw IngestError(line_prefix(line) + "expected a JSON object");

    DocumentRecord rec;
    rec.id = optional_string(obj, "id", line).value_or("");
    rec.title = optional_string(obj, "title", line).value_or("");
    rec.abstract_text = optional_string(obj, "abstract", line);
    rec.body = optional_string(obj, "body", line);
    if (auto it = obj.find("mesh_major"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw IngestError(line_prefix(line) + "field 'mesh_major' must be an array");
        for (const auto& label : *it) {
            if (!label.is_string()) {
                throw IngestError(line_prefix(line) + "field 'mesh_major' must hold strings");
            }
            rec.subject_labels.push_back(label.get<std::string>());
        }
    }
    return rec;
}

LoadResult load_jsonl(std::istream& in, const std::string& provenance) {
    RecordSink sink;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        sink.add(parse_json_record(text, line), line);
    }
    return sink.finish(provenance);
}

LoadResult load_csv(std::istream& in, const std::string& provenance) {
    csv::Reader reader(in);
    csv::Row row;
    if (!reader.next(row)) return RecordSink{}.finish(provenance);

    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < row.fields.size(); ++i) column[row.fields[i]] = i;
    if (!column.count("id") || !column.count("title")) {
        throw IngestError(line_prefix(row.line) + "CSV header must name 'id' and 'title' columns");
    }
    const std::size_t width = row.fields.size();
    auto field = [&](const csv::Row& r, const char* name) -> std::string {
        auto it = column.find(name);
        return it == column.end() ? std::string{} : r.fields[it->second];
    };

    RecordSink sink;
    while (true) {
        try {
            if (!reader.next(row)) break;
        } catch (const DataError& e) {
            throw IngestError(e.what());
        }
        if (row.fields.size() != width) {
            throw IngestError(line_prefix(row.line) + "expected " + std::to_string(width) +
                              " fields, found " + std::to_string(row.fields.size()));
        }
        DocumentRecord rec;
        rec.id = field(row, "id");
        rec.title = field(row, "title");
        rec.abstract_text = non_empty(field(row, "abstract"));
        rec.body = non_empty(field(row, "body"));
        rec.subject_labels = split_pipe(field(row, "mesh_major"));
        sink.add(std::move(rec), row.line);
    }
    return sink.finish(provenance);
}

bool has_text(const std::optional<std::string>& s) { return s && !s->empty(); }

}  // namespace

Corpus::Corpus(std::vector<DocumentRecord> records, std::string provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.id.empty()) throw IngestError("record " + std::to_string(i) + " has an empty id");
        if (r.title.empty()) throw IngestError("record '" + r.id + "' has an empty title");
        if (!index_.emplace(r.id, i).second) throw IngestError("duplicate id '" + r.id + "'");
    }
}

const DocumentRecord* Corpus::find(std::string_view id) const {
    auto idx = index_of(id);
    return idx ? &records_[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
    std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    std::vector<DocumentRecord> out;
    for (const auto& r : records_) {
        if (wanted.count(r.id)) out.push_back(r);
    }
    return Corpus(std::move(out), provenance_);
}

CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "csv") return CorpusFormat::csv;
    throw DataError("unknown corpus format '" + std::string(name) + "' (expected jsonl or csv)");
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read corpus file '" + path.string() + "'");
    const std::string provenance = path.string();
    return format == CorpusFormat::jsonl ? load_jsonl(in, provenance) : load_csv(in, provenance);
}

LoadResult load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, corpus_format_for(path));
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& r : corpus.records()) {
        json obj = {{"id", r.id}, {"title", r.title}};
        if (r.abstract_text) obj["abstract"] = *r.abstract_text;
        if (r.body) obj["body"] = *r.body;
        if (!r.subject_labels.empty()) obj["mesh_major"] = r.subject_labels;
        out << obj.dump() << '\n';
    }
}

std::vector<std::string> LabeledDataset::truth_in_order() const {
    std::vector<std::string> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus.records()) out.push_back(truth.at(r.id));
    return out;
}

LabeledDataset build_labeled_dataset(const Corpus& corpus,
                                     const std::vector<std::string>& candidate_labels,
                                     std::size_t k_classes, std::size_t min_class_size) {
    if (candidate_labels.empty()) throw DataError("candidate label list is empty");
    if (k_classes < 2) throw DataError("k_classes must be at least 2");

    std::vector<std::string> candidates;
    for (const auto& label : candidate_labels) {
        if (std::find(candidates.begin(), candidates.end(), label) == candidates.end()) {
            candidates.push_back(label);
        }
    }

    std::vector<std::size_t> counts(candidates.size(), 0);
    for (const auto& r : corpus.records()) {
        std::set<std::string> labels(r.subject_labels.begin(), r.subject_labels.end());
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (labels.count(candidates[c])) ++counts[c];
        }
    }

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    const auto nonzero = static_cast<std::size_t>(
        std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
    if (nonzero < k_classes) {
        throw DataError("only " + std::to_string(nonzero) + " candidate labels occur in the corpus, " +
                        std::to_string(k_classes) + " classes requested");
    }

    LabeledDataset out;
    for (std::size_t i = 0; i < k_classes; ++i) out.classes.push_back(candidates[order[i]]);

    std::vector<DocumentRecord> kept;
    std::map<std::string, std::size_t> members;
    for (const auto& r : corpus.records()) {
        std::set<std::string> labels(r.subject_labels.begin(), r.subject_labels.end());
        const std::string* hit = nullptr;
        std::size_t hits = 0;
        for (const auto& cls : out.classes) {
            if (labels.count(cls)) {
                hit = &cls;
                ++hits;
            }
        }
        if (hits != 1) {
            ++out.dropped;
            continue;
        }
        DocumentRecord stripped = r;
        stripped.subject_labels.clear();
        out.truth[r.id] = *hit;
        ++members[*hit];
        kept.push_back(std::move(stripped));
    }

    const std::size_t floor = std::max<std::size_t>(min_class_size, 1);
    for (const auto& cls : out.classes) {
        if (members[cls] < floor) {
            throw DataError("class '" + cls + "' has " + std::to_string(members[cls]) +
                            " single-label members, fewer than the required " +
                            std::to_string(floor));
        }
    }
    out.corpus = Corpus(std::move(kept), corpus.provenance());
    return out;
}

LabeledDataset attach_truth(const Corpus& corpus, const std::map<std::string, std::string>& truth) {
    for (const auto& [id, cls] : truth) {
        if (!corpus.find(id)) throw DataError("truth sidecar names unknown id '" + id + "'");
    }
    LabeledDataset out;
    std::vector<DocumentRecord> kept;
    for (const auto& r : corpus.records()) {
        auto it = truth.find(r.id);
        if (it == truth.end()) {
            ++out.dropped;
            continue;
        }
        if (std::find(out.classes.begin(), out.classes.end(), it->second) == out.classes.end()) {
            out.classes.push_back(it->second);
        }
        DocumentRecord stripped = r;
        stripped.subject_labels.clear();
        kept.push_back(std::move(stripped));
        out.truth.emplace(r.id, it->second);
    }
    out.corpus = Corpus(std::move(kept), corpus.provenance());
    return out;
}

std::map<std::string, std::string> load_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read truth file '" + path.string() + "'");
    csv::Reader reader(in);
    csv::Row row;
    if (!reader.next(row) || row.fields.size() < 2 || row.fields[0] != "id" || row.fields[1] != "class") {
        throw IngestError("truth file '" + path.string() + "' must start with header id,class");
    }
    std::map<std::string, std::string> truth;
    while (reader.next(row)) {
        if (row.fields.size() != 2) {
            throw IngestError(line_prefix(row.line) + "expected 2 fields in truth file");
        }
        if (!truth.emplace(row.fields[0], row.fields[1]).second) {
            throw IngestError(line_prefix(row.line) + "duplicate id '" + row.fields[0] + "'");
        }
    }
    return truth;
}

void save_truth_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    csv::write_row(out, {"id", "class"});
    for (const auto& r : dataset.corpus.records()) csv::write_row(out, {r.id, dataset.truth.at(r.id)});
}

std::string_view to_string(FieldSubset subset) {
    switch (subset) {
        case FieldSubset::TitleOnly: return "title";
        case FieldSubset::TitleAbstract: return "title_abstract";
        case FieldSubset::TitleAbstractBody: return "title_abstract_body";
    }
    return "title";
}

FieldSubset parse_field_subset(std::string_view name) {
    if (name == "title" || name == "a") return FieldSubset::TitleOnly;
    if (name == "title_abstract" || name == "b") return FieldSubset::TitleAbstract;
    if (name == "title_abstract_body" || name == "c") return FieldSubset::TitleAbstractBody;
    throw DataError("unknown field subset '" + std::string(name) + "'");
}

std::string compose_text(const DocumentRecord& record, FieldSubset subset) {
    std::string text = record.title;
    if (subset == FieldSubset::TitleOnly) return text;
    if (has_text(record.abstract_text)) text += "\n" + *record.abstract_text;
    if (subset == FieldSubset::TitleAbstractBody && has_text(record.body)) text += "\n" + *record.body;
    return text;
}

}  // namespace scattermesh

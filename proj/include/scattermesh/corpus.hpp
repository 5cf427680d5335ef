#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scattermesh {

struct DocumentRecord {
    std::string id;
    std::string title;
    std::optional<std::string> abstract_text;
    std::optional<std::string> body;
    // Subject headings (MeSH major topics); empty once a dataset is built.
    std::vector<std::string> subject_labels;
};

// Records in ingest order with pairwise distinct ids.
class Corpus {
public:
    Corpus() = default;
    // Throws IngestError on an empty/duplicate id or an empty title.
    explicit Corpus(std::vector<DocumentRecord> records, std::string provenance = {});

    const std::vector<DocumentRecord>& records() const noexcept { return records_; }
    const std::string& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const DocumentRecord* find(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;

    // Records whose id is in `ids`, kept in corpus order.
    Corpus subset(const std::vector<std::string>& ids) const;

private:
    std::vector<DocumentRecord> records_;
    std::string provenance_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);
// Guesses from the extension; ".csv" is csv, anything else jsonl.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

struct LoadResult {
    Corpus corpus;
    std::size_t skipped = 0;  // records with an empty id or title
};

LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);
LoadResult load_corpus(const std::filesystem::path& path);

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

struct LabeledDataset {
    Corpus corpus;                               // subject labels stripped
    std::map<std::string, std::string> truth;    // record id -> class
    std::vector<std::string> classes;            // selected, most frequent first
    std::size_t dropped = 0;                     // records without exactly one class

    // Truth class of each corpus record, in corpus order.
    std::vector<std::string> truth_in_order() const;
};

// Picks the k most frequent candidate labels (ties by candidate order) and
// keeps the records carrying exactly one of them.
LabeledDataset build_labeled_dataset(const Corpus& corpus,
                                     const std::vector<std::string>& candidate_labels,
                                     std::size_t k_classes, std::size_t min_class_size);

// Pairs a label-free corpus with a truth sidecar. Records missing from the
// sidecar are dropped; sidecar ids missing from the corpus are an error.
LabeledDataset attach_truth(const Corpus& corpus, const std::map<std::string, std::string>& truth);

std::map<std::string, std::string> load_truth_csv(const std::filesystem::path& path);
void save_truth_csv(const LabeledDataset& dataset, const std::filesystem::path& path);

enum class FieldSubset { TitleOnly, TitleAbstract, TitleAbstractBody };

std::string_view to_string(FieldSubset subset);
FieldSubset parse_field_subset(std::string_view name);

std::string compose_text(const DocumentRecord& record, FieldSubset subset);

}  // namespace scattermesh

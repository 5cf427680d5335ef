#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/SparseCore>

namespace scattermesh {

using Tokens = std::vector<std::string>;
using StopwordSet = std::unordered_set<std::string>;

// Lowercases ASCII, splits on non-alphanumerics (keeping hyphens between two
// alphanumerics), drops tokens shorter than 2, pure numbers and stopwords.
// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
Tokens tokenize(std::string_view text, const StopwordSet& stopwords);

// Built-in English list; identical to fixtures/stopwords_en.txt.
const StopwordSet& default_stopwords();
StopwordSet load_stopwords(const std::filesystem::path& path);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs);

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::vector<std::size_t>& df() const noexcept { return df_; }
    std::size_t n_docs() const noexcept { return n_docs_; }
    std::size_t size() const noexcept { return terms_.size(); }

    const std::string& term(std::size_t j) const { return terms_.at(j); }
    // -1 when absent.
    long index_of(const std::string& term) const;

    // Keeps the listed columns (ascending), df and n_docs unchanged.
    Vocabulary restricted(const std::vector<std::size_t>& columns) const;

private:
    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::size_t n_docs_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
};

// Drops df == 1 terms; term order is first appearance.
Vocabulary build_vocabulary(const std::vector<Tokens>& token_lists);

enum class WeightScheme {
    PaperLiteral,  // ln(tf) * (N / df)
    LogInside,     // ln(tf * N / df)
    Standard,      // (1 + ln tf) * ln(N / df)
};

std::string_view to_string(WeightScheme scheme);
WeightScheme parse_weight_scheme(std::string_view name);

double term_weight(WeightScheme scheme, std::size_t tf, std::size_t n_docs, std::size_t df);

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Row i is document i, column j is vocabulary term j. Zero weights are never
// stored.
struct TermDocMatrix {
    SparseRows weights;
    WeightScheme scheme = WeightScheme::PaperLiteral;
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<std::string> doc_ids;

    std::size_t rows() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(weights.cols()); }
};

TermDocMatrix weight_matrix(const std::vector<Tokens>& token_lists,
                            std::shared_ptr<const Vocabulary> vocab, WeightScheme scheme,
                            std::vector<std::string> doc_ids = {});

void write_matrix_market(const TermDocMatrix& matrix, std::ostream& out);

}  // namespace scattermesh

#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "scattermesh/vectorizer.hpp"

namespace scattermesh {

using TermSubset = std::vector<std::size_t>;  // ascending column indices

// VCGS keeps a term when it ranks within the top `rank_threshold` weights of
// more than `percent_threshold` percent of all documents. A percent of 0.1
// means 0.1% of the documents.
struct VcgsParams {
    std::size_t rank_threshold = 10;
    double percent_threshold = 0.1;

    void validate() const;
};

struct DfParams {
    std::size_t tau_df = 10;

    void validate() const;
};

// Per-term count of documents in which the term is among the top R stored
// weights (ties by ascending term index).
std::vector<std::size_t> vcgs_hit_counts(const TermDocMatrix& matrix, std::size_t rank_threshold);

TermSubset vcgs_select(const TermDocMatrix& matrix, const VcgsParams& params);
TermSubset df_select(const Vocabulary& vocab, const DfParams& params);

// Column restriction without re-weighting; the vocabulary is re-indexed and
// df/N stay frozen at their full-matrix values.
TermDocMatrix restrict(const TermDocMatrix& matrix, const TermSubset& subset);

// Rows with no stored weight. These are kept so rows stay aligned with ids.
std::vector<std::size_t> zero_rows(const TermDocMatrix& matrix);

// CSV "term","df","hits" for the kept terms.
void write_subset_csv(const TermDocMatrix& matrix, const TermSubset& subset,
                      const std::vector<std::size_t>& hit_counts, std::ostream& out);

}  // namespace scattermesh

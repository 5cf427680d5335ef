#include "scattermesh/featselect.hpp"

#include <algorithm>
#include <string>

#include "csv.hpp"
#include "scattermesh/error.hpp"

namespace scattermesh {

void VcgsParams::validate() const {
    if (rank_threshold < 1) throw DataError("VCGS rank threshold R must be >= 1");
    if (!(percent_threshold > 0.0 && percent_threshold < 100.0)) {
        throw DataError("VCGS percent threshold P must lie in (0, 100)");
    }
}

void DfParams::validate() const {
    if (tau_df < 2) throw DataError("df threshold must be >= 2");
}

std::vector<std::size_t> vcgs_hit_counts(const TermDocMatrix& matrix, std::size_t rank_threshold) {
    std::vector<std::size_t> hits(matrix.cols(), 0);
    std::vector<std::pair<double, Eigen::Index>> row;
    for (Eigen::Index i = 0; i < matrix.weights.outerSize(); ++i) {
        row.clear();
        for (SparseRows::InnerIterator it(matrix.weights, i); it; ++it) {
            row.emplace_back(it.value(), it.col());
        }
        const auto top = std::min(rank_threshold, row.size());
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(top), row.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (std::size_t r = 0; r < top; ++r) ++hits[static_cast<std::size_t>(row[r].second)];
    }
    return hits;
}

TermSubset vcgs_select(const TermDocMatrix& matrix, const VcgsParams& params) {
    params.validate();
    if (matrix.rows() == 0 || matrix.cols() == 0) throw DataError("VCGS needs a nonempty matrix");

    const auto hits = vcgs_hit_counts(matrix, params.rank_threshold);
    const double needed = params.percent_threshold / 100.0 * static_cast<double>(matrix.rows());
    TermSubset kept;
    for (std::size_t j = 0; j < hits.size(); ++j) {
        if (static_cast<double>(hits[j]) > needed) kept.push_back(j);
    }
    if (kept.empty()) {
        throw DataError("VCGS kept no terms (R=" + std::to_string(params.rank_threshold) +
                        ", P=" + std::to_string(params.percent_threshold) +
                        "); raise R or lower P");
    }
    return kept;
}

TermSubset df_select(const Vocabulary& vocab, const DfParams& params) {
    params.validate();
    TermSubset kept;
    for (std::size_t j = 0; j < vocab.size(); ++j) {
        if (vocab.df()[j] >= params.tau_df) kept.push_back(j);
    }
    if (kept.empty()) {
        throw DataError("df selection kept no terms: tau_df=" + std::to_string(params.tau_df) +
                        " exceeds every document frequency");
    }
    return kept;
}

TermDocMatrix restrict(const TermDocMatrix& matrix, const TermSubset& subset) {
    if (subset.empty()) throw DataError("cannot restrict to an empty term subset");
    std::vector<long> remap(matrix.cols(), -1);
    for (std::size_t k = 0; k < subset.size(); ++k) {
        if (subset[k] >= matrix.cols()) throw DataError("term index out of range in subset");
        if (k > 0 && subset[k] <= subset[k - 1]) throw DataError("term subset must be strictly ascending");
        remap[subset[k]] = static_cast<long>(k);
    }

    using Triplet = Eigen::Triplet<double, Eigen::Index>;
    std::vector<Triplet> entries;
    for (Eigen::Index i = 0; i < matrix.weights.outerSize(); ++i) {
        for (SparseRows::InnerIterator it(matrix.weights, i); it; ++it) {
            const long c = remap[static_cast<std::size_t>(it.col())];
            if (c >= 0) entries.emplace_back(i, c, it.value());
        }
    }

    TermDocMatrix out;
    out.weights.resize(matrix.weights.rows(), static_cast<Eigen::Index>(subset.size()));
    out.weights.setFromTriplets(entries.begin(), entries.end());
    out.weights.makeCompressed();
    out.scheme = matrix.scheme;
    out.vocab = std::make_shared<const Vocabulary>(matrix.vocab->restricted(subset));
    out.doc_ids = matrix.doc_ids;
    return out;
}

std::vector<std::size_t> zero_rows(const TermDocMatrix& matrix) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < matrix.weights.outerSize(); ++i) {
        SparseRows::InnerIterator it(matrix.weights, i);
        if (!it) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

void write_subset_csv(const TermDocMatrix& matrix, const TermSubset& subset,
                      const std::vector<std::size_t>& hit_counts, std::ostream& out) {
    csv::write_row(out, {"term", "df", "hits"});
    for (auto j : subset) {
        csv::write_row(out, {matrix.vocab->term(j), std::to_string(matrix.vocab->df()[j]),
                             j < hit_counts.size() ? std::to_string(hit_counts[j]) : ""});
    }
}

}  // namespace scattermesh

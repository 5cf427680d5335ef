#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scattermesh/vectorizer.hpp"

namespace scattermesh {

// Top-n singular triplets of a documents x terms matrix.
//
// Sign convention: in every column of term_factors the entry of largest
// magnitude (lowest index on ties) is nonnegative; the matching column of
// doc_factors is flipped jointly. This makes factors reproducible.
struct SvdFactors {
    std::size_t n = 0;
    Eigen::VectorXd singular_values;  // non-increasing, >= 0
    Eigen::MatrixXd doc_factors;      // rows x n, orthonormal columns
    Eigen::MatrixXd term_factors;     // cols x n, orthonormal columns
    std::size_t requested = 0;
    bool rank_limited = false;        // fewer than `requested` triplets exist
};

struct SvdOptions {
    std::uint64_t seed = 0;
    // Inputs with more entries than this use seeded subspace iteration on the
    // sparse matrix instead of a dense bidiagonal SVD.
    std::size_t dense_limit = 4'000'000;
    int max_iterations = 300;
};

SvdFactors truncated_svd(const Eigen::MatrixXd& matrix, std::size_t n, const SvdOptions& options = {});
SvdFactors truncated_svd(const SparseRows& matrix, std::size_t n, const SvdOptions& options = {});
SvdFactors truncated_svd(const TermDocMatrix& matrix, std::size_t n, const SvdOptions& options = {});

struct EmbeddingMatrix {
    Eigen::MatrixXd values;  // documents x n
    std::vector<std::string> doc_ids;
};

// Rows of U_n scaled by the singular values, i.e. M' V_n.
EmbeddingMatrix project_documents(const SvdFactors& factors, std::vector<std::string> doc_ids = {});

// reduced . V_n^T, a vector in term space.
Eigen::VectorXd back_transform(const Eigen::VectorXd& reduced, const SvdFactors& factors);

// U_n diag(sigma) V_n^T.
Eigen::MatrixXd reconstruct(const SvdFactors& factors);

void write_singular_values_csv(const SvdFactors& factors, std::ostream& out);

}  // namespace scattermesh

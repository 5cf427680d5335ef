#include "scattermesh/lsa.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include <Eigen/SVD>

#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

std::size_t numeric_rank(const Eigen::VectorXd& sigma, Eigen::Index rows, Eigen::Index cols) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double tol = static_cast<double>(std::max(rows, cols)) *
                       std::numeric_limits<double>::epsilon() * sigma(0);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > tol) ++r;
    }
    return r;
}

SvdFactors finish(const Eigen::VectorXd& sigma, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                  std::size_t requested, Eigen::Index rows, Eigen::Index cols) {
    const std::size_t rank = numeric_rank(sigma, rows, cols);
    if (rank == 0) throw DataError("cannot factor a matrix of rank 0");

    SvdFactors f;
    f.requested = requested;
    f.n = std::min(requested, rank);
    f.rank_limited = f.n < requested;
    const auto n = static_cast<Eigen::Index>(f.n);
    f.singular_values = sigma.head(n);
    f.doc_factors = u.leftCols(n);
    f.term_factors = v.leftCols(n);

    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < f.term_factors.rows(); ++i) {
            const double a = std::abs(f.term_factors(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (f.term_factors(arg, j) < 0.0) {
            f.term_factors.col(j) *= -1.0;
            f.doc_factors.col(j) *= -1.0;
        }
    }
    return f;
}

void check_request(std::size_t n, Eigen::Index rows, Eigen::Index cols) {
    if (n == 0) throw DataError("SVD rank n must be positive");
    if (rows == 0 || cols == 0) throw DataError("cannot factor an empty matrix");
}

SvdFactors dense_svd(const Eigen::MatrixXd& m, std::size_t n) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return finish(svd.singularValues(), svd.matrixU(), svd.matrixV(), n, m.rows(), m.cols());
}

// Seeded block subspace iteration; stops when the leading n values settle.
SvdFactors subspace_svd(const SparseRows& m, std::size_t n, const SvdOptions& options) {
    const Eigen::Index limit = std::min(m.rows(), m.cols());
    const Eigen::Index block = std::min<Eigen::Index>(static_cast<Eigen::Index>(n) + 10, limit);
    const Eigen::Index want = std::min<Eigen::Index>(static_cast<Eigen::Index>(n), block);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd omega(m.cols(), block);
    for (Eigen::Index j = 0; j < block; ++j) {
        for (Eigen::Index i = 0; i < m.cols(); ++i) omega(i, j) = gauss(rng);
    }

    const SparseRows mt = m.transpose();
    Eigen::MatrixXd q = orthonormal_basis(m * omega);
    Eigen::VectorXd previous = Eigen::VectorXd::Zero(want);
    Eigen::BDCSVD<Eigen::MatrixXd> small;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::MatrixXd z = orthonormal_basis(mt * q);
        q = orthonormal_basis(m * z);
        const Eigen::MatrixXd b = (mt * q).transpose();  // block x cols
        small.compute(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd current = small.singularValues().head(want);
        const double scale = std::max(current(0), std::numeric_limits<double>::min());
        if (iter > 1 && (current - previous).cwiseAbs().maxCoeff() <= 1e-14 * scale) break;
        previous = current;
    }
    const Eigen::MatrixXd u = q * small.matrixU();
    return finish(small.singularValues(), u, small.matrixV(), n, m.rows(), m.cols());
}

}  // namespace

SvdFactors truncated_svd(const Eigen::MatrixXd& matrix, std::size_t n, const SvdOptions&) {
    check_request(n, matrix.rows(), matrix.cols());
    return dense_svd(matrix, n);
}

SvdFactors truncated_svd(const SparseRows& matrix, std::size_t n, const SvdOptions& options) {
    check_request(n, matrix.rows(), matrix.cols());
    const auto entries = static_cast<std::size_t>(matrix.rows()) * static_cast<std::size_t>(matrix.cols());
    if (entries <= options.dense_limit) return dense_svd(Eigen::MatrixXd(matrix), n);
    return subspace_svd(matrix, n, options);
}

SvdFactors truncated_svd(const TermDocMatrix& matrix, std::size_t n, const SvdOptions& options) {
    return truncated_svd(matrix.weights, n, options);
}

EmbeddingMatrix project_documents(const SvdFactors& factors, std::vector<std::string> doc_ids) {
    EmbeddingMatrix e;
    e.values = factors.doc_factors * factors.singular_values.asDiagonal();
    e.doc_ids = std::move(doc_ids);
    return e;
}

Eigen::VectorXd back_transform(const Eigen::VectorXd& reduced, const SvdFactors& factors) {
    if (reduced.size() != static_cast<Eigen::Index>(factors.n)) {
        throw DataError("reduced vector has length " + std::to_string(reduced.size()) + ", expected " +
                        std::to_string(factors.n));
    }
    return factors.term_factors * reduced;
}

Eigen::MatrixXd reconstruct(const SvdFactors& factors) {
    return factors.doc_factors * factors.singular_values.asDiagonal() * factors.term_factors.transpose();
}

void write_singular_values_csv(const SvdFactors& factors, std::ostream& out) {
    out << "index,singular_value\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < factors.singular_values.size(); ++i) {
        out << i << ',' << factors.singular_values(i) << '\n';
    }
}

}  // namespace scattermesh

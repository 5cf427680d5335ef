#pragma once

#include <memory>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "scattermesh/vectorizer.hpp"

// Term-document matrix over terms "t0".."tN" holding the given dense weights.
inline scattermesh::TermDocMatrix make_matrix(const Eigen::MatrixXd& dense) {
    std::vector<std::string> terms;
    std::vector<std::size_t> df;
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
        terms.push_back("t" + std::to_string(j));
        df.push_back(std::max<std::size_t>(2, std::size_t((dense.col(j).array() != 0.0).count())));
    }
    scattermesh::TermDocMatrix m;
    m.weights = dense.sparseView();
    m.weights.makeCompressed();
    m.vocab = std::make_shared<const scattermesh::Vocabulary>(terms, df, std::size_t(dense.rows()));
    for (Eigen::Index i = 0; i < dense.rows(); ++i) m.doc_ids.push_back("d" + std::to_string(i));
    return m;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
    }
    return m;
}

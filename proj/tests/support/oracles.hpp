#pragma once

// Reference implementations used only to check the library. They favour
// directness over speed and share no code with src/.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Table = std::vector<std::vector<std::size_t>>;

// Singular values by one-sided Jacobi rotations, descending.
std::vector<double> jacobi_singular_values(const Eigen::MatrixXd& m);

// Mutual information of a table in nats, straight from the definition.
double mutual_information(const Table& t);

// Expected MI by enumerating every table with the given marginals and
// weighting each by its exact hypergeometric probability.
double expected_mi_enumerated(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols);

// AMI with arithmetic (or max) normalisation built on the enumeration above.
double ami_enumerated(const Table& t, bool max_normalizer = false);

// Silhouette over cosine distance from an explicit N x N pass. Zero vectors
// are at distance 1 from everything.
double silhouette_brute(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                        bool nearest = false);

struct Partition {
    std::vector<std::size_t> assignments;
    double objective = 0.0;
};

// Optimal 2-means partition by trying every split of the points.
Partition best_two_partition(const Eigen::MatrixXd& points);

}  // namespace oracle

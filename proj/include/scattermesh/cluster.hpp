#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scattermesh/error.hpp"

namespace scattermesh {

enum class Algorithm { maximin, kmeans_pp };

std::string_view to_string(Algorithm algorithm);

struct MaximinParams {
    double theta = 0.9;
    std::uint64_t seed = 0;

    // 0 < theta < 2: cosine distance on embeddings may exceed 1.
    void validate() const;
};

struct KmeansParams {
    std::size_t k = 4;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 300;
    double tolerance = 1e-6;  // relative objective change
    std::size_t restarts = 10;
    std::size_t workers = 1;  // restarts run on up to this many threads

    void validate() const;
};

struct Clustering {
    std::vector<std::size_t> assignments;
    Eigen::MatrixXd centroids;  // k x dims, mean of each cluster's members
    std::size_t k = 0;
    Algorithm algorithm = Algorithm::kmeans_pp;
    std::variant<MaximinParams, KmeansParams> params;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::optional<double> objective;     // k-means only
    std::vector<double> objective_trace; // k-means objective after each Lloyd update
    std::vector<std::size_t> centers;    // maximin: point index of each center
    std::vector<std::string> warnings;

    std::vector<std::size_t> cluster_sizes() const;
    std::vector<std::vector<std::size_t>> members() const;
};

// 1 - cos(x, y), clamped to [0, 2]. Throws DataError on a zero vector.
template <class A, class B>
double cosine_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw DataError("cosine distance is undefined for a zero vector");
    const double d = 1.0 - x.dot(y) / (nx * ny);
    return std::clamp(d, 0.0, 2.0);
}

// Farthest-point center selection under cosine distance. Zero rows never
// become centers and are assigned to cluster 0.
Clustering maximin(const Eigen::MatrixXd& points, const MaximinParams& params);

// D^2-seeded k-means with Lloyd iterations under squared Euclidean distance;
// best objective over `restarts` runs seeded seed, seed+1, ...
Clustering kmeans_pp(const Eigen::MatrixXd& points, const KmeansParams& params);

// Sum of squared distances from each point to its cluster's centroid.
double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                        const Eigen::MatrixXd& centroids);

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                              std::size_t k);

std::size_t count_distinct_rows(const Eigen::MatrixXd& points);

}  // namespace scattermesh

#include "scattermesh/cluster.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <numeric>
#include <random>

namespace scattermesh {

namespace {

// Uniform double in [0, 1) from the top 53 bits; avoids the library-defined
// behaviour of std distributions so seeds reproduce across toolchains.
double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
}

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i, const Eigen::MatrixXd& centers,
                        Eigen::Index c) {
    return (points.row(i) - centers.row(c)).squaredNorm();
}

std::size_t nearest(const Eigen::MatrixXd& points, Eigen::Index i, const Eigen::MatrixXd& centers,
                    double* best_out = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(points, i, centers, c);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(c);
        }
    }
    if (best_out) *best_out = best_d;
    return best;
}

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& points, std::size_t k, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(points.rows());
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), points.cols());
    std::size_t first = uniform_index(rng, n);
    centers.row(0) = points.row(static_cast<Eigen::Index>(first));

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points, static_cast<Eigen::Index>(i), centers, 0);

    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > target) break;
            }
        }
        if (pick == n) throw DataError("k-means++ seeding ran out of distinct points");
        centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points, static_cast<Eigen::Index>(i), centers,
                                                     static_cast<Eigen::Index>(c)));
        }
    }
    return centers;
}

// Moves empty clusters onto the point farthest from its own centroid.
void repair_empty(const Eigen::MatrixXd& points, std::vector<std::size_t>& assignments,
                  Eigen::MatrixXd& centers) {
    const auto k = static_cast<std::size_t>(centers.rows());
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] != 0) continue;
        std::size_t far = assignments.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (sizes[assignments[i]] < 2) continue;
            const double d = squared_distance(points, static_cast<Eigen::Index>(i), centers,
                                              static_cast<Eigen::Index>(assignments[i]));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == assignments.size()) throw DataError("cannot repair an empty k-means cluster");
        --sizes[assignments[far]];
        assignments[far] = c;
        sizes[c] = 1;
        centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
    }
}

Clustering lloyd_run(const Eigen::MatrixXd& points, const KmeansParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto n = static_cast<std::size_t>(points.rows());
    Eigen::MatrixXd centers = seed_centers(points, params.k, rng);

    Clustering out;
    out.algorithm = Algorithm::kmeans_pp;
    out.params = params;
    out.seed = seed;
    out.k = params.k;
    out.assignments.assign(n, 0);

    std::vector<std::size_t> previous;
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) out.assignments[i] = nearest(points, static_cast<Eigen::Index>(i), centers);
        repair_empty(points, out.assignments, centers);
        const bool unchanged = out.assignments == previous;
        previous = out.assignments;

        centers = cluster_means(points, out.assignments, params.k);
        const double objective = kmeans_objective(points, out.assignments, centers);
        out.objective_trace.push_back(objective);
        out.iterations = iter + 1;
        if (unchanged) break;
        if (out.objective_trace.size() >= 2) {
            const double prev = out.objective_trace[out.objective_trace.size() - 2];
            if (prev - objective <= params.tolerance * prev) break;
        }
    }
    out.centroids = std::move(centers);
    out.objective = out.objective_trace.back();
    return out;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
    return algorithm == Algorithm::maximin ? "maximin" : "kmeans";
}

void MaximinParams::validate() const {
    if (!(theta > 0.0 && theta < 2.0)) throw DataError("maximin theta must lie in (0, 2)");
}

void KmeansParams::validate() const {
    if (k < 1) throw DataError("k-means k must be >= 1");
    if (max_iterations < 1) throw DataError("k-means max_iterations must be >= 1");
    if (restarts < 1) throw DataError("k-means restarts must be >= 1");
    if (!(tolerance >= 0.0)) throw DataError("k-means tolerance must be >= 0");
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

std::vector<std::vector<std::size_t>> Clustering::members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
    return out;
}

double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                        const Eigen::MatrixXd& centroids) {
    double total = 0.0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        total += squared_distance(points, static_cast<Eigen::Index>(i), centroids,
                                  static_cast<Eigen::Index>(assignments[i]));
    }
    return total;
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                              std::size_t k) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        sums.row(static_cast<Eigen::Index>(assignments[i])) += points.row(static_cast<Eigen::Index>(i));
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c]) sums.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
    }
    return sums;
}

std::size_t count_distinct_rows(const Eigen::MatrixXd& points) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (less(order[i - 1], order[i])) ++distinct;
    }
    return distinct;
}

Clustering maximin(const Eigen::MatrixXd& points, const MaximinParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(points.rows());

    Eigen::MatrixXd unit_rows = points;
    std::vector<std::size_t> nonzero;
    for (std::size_t i = 0; i < n; ++i) {
        const double norm = points.row(static_cast<Eigen::Index>(i)).norm();
        if (norm > 0.0) {
            unit_rows.row(static_cast<Eigen::Index>(i)) /= norm;
            nonzero.push_back(i);
        }
    }
    if (nonzero.empty()) throw DataError("maximin needs at least one nonzero vector");

    auto dist = [&](std::size_t a, std::size_t b) {
        const double d = 1.0 - unit_rows.row(static_cast<Eigen::Index>(a)).dot(unit_rows.row(static_cast<Eigen::Index>(b)));
        return std::clamp(d, 0.0, 2.0);
    };

    Clustering out;
    out.algorithm = Algorithm::maximin;
    out.params = params;
    out.seed = params.seed;

    std::mt19937_64 rng(params.seed);
    out.centers.push_back(nonzero[uniform_index(rng, nonzero.size())]);

    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    std::vector<bool> is_center(n, false);
    is_center[out.centers[0]] = true;

    auto farthest = [&]() -> std::pair<std::size_t, double> {
        std::size_t arg = n;
        double best = -1.0;
        for (auto i : nonzero) {
            if (!is_center[i] && min_dist[i] > best) {
                best = min_dist[i];
                arg = i;
            }
        }
        return {arg, best};
    };
    auto absorb = [&](std::size_t c) {
        for (auto i : nonzero) min_dist[i] = std::min(min_dist[i], dist(i, c));
    };

    absorb(out.centers[0]);
    auto [second, second_d] = farthest();
    if (second == n || second_d <= 0.0) {
        out.warnings.push_back("all vectors point the same way; returning a single cluster");
    } else {
        // Steps 1-2 always produce two centers; later centers must clear theta.
        out.centers.push_back(second);
        is_center[second] = true;
        absorb(second);
        while (true) {
            auto [cand, d] = farthest();
            if (cand == n || !(d > params.theta)) break;
            out.centers.push_back(cand);
            is_center[cand] = true;
            absorb(cand);
            ++out.iterations;
        }
    }

    out.k = out.centers.size();
    out.assignments.assign(n, 0);
    for (auto i : nonzero) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < out.centers.size(); ++c) {
            const double d = out.centers[c] == i ? -1.0 : dist(i, out.centers[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        out.assignments[i] = best;
    }
    if (nonzero.size() < n) {
        out.warnings.push_back(std::to_string(n - nonzero.size()) + " zero vectors assigned to cluster 0");
    }
    out.centroids = cluster_means(points, out.assignments, out.k);
    return out;
}

Clustering kmeans_pp(const Eigen::MatrixXd& points, const KmeansParams& params) {
    params.validate();
    if (points.rows() == 0) throw DataError("k-means needs at least one point");
    const std::size_t distinct = count_distinct_rows(points);
    if (params.k > distinct) {
        throw DataError("k=" + std::to_string(params.k) + " exceeds the " + std::to_string(distinct) +
                        " distinct vectors");
    }

    std::vector<Clustering> runs(params.restarts);
    const std::size_t workers = std::max<std::size_t>(1, std::min(params.workers, params.restarts));
    if (workers == 1) {
        for (std::size_t r = 0; r < params.restarts; ++r) runs[r] = lloyd_run(points, params, params.seed + r);
    } else {
        for (std::size_t start = 0; start < params.restarts; start += workers) {
            std::vector<std::future<Clustering>> batch;
            for (std::size_t r = start; r < std::min(params.restarts, start + workers); ++r) {
                batch.push_back(std::async(std::launch::async,
                                           [&, r] { return lloyd_run(points, params, params.seed + r); }));
            }
            for (std::size_t b = 0; b < batch.size(); ++b) runs[start + b] = batch[b].get();
        }
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (*runs[r].objective < *runs[best].objective) best = r;
    }
    Clustering out = std::move(runs[best]);
    out.params = params;
    return out;
}

}  // namespace scattermesh

#include "oracles.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace oracle {

std::vector<double> jacobi_singular_values(const Eigen::MatrixXd& input) {
    Eigen::MatrixXd a = input.rows() >= input.cols() ? input : Eigen::MatrixXd(input.transpose());
    const Eigen::Index n = a.cols();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = a.col(p).squaredNorm();
                const double beta = a.col(q).squaredNorm();
                const double gamma = a.col(p).dot(a.col(q));
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const Eigen::VectorXd ap = a.col(p);
                a.col(p) = c * ap - s * a.col(q);
                a.col(q) = s * ap + c * a.col(q);
            }
        }
        if (off < 1e-15) break;
    }
    std::vector<double> sv(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) sv[static_cast<std::size_t>(j)] = a.col(j).norm();
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

double mutual_information(const Table& t) {
    std::size_t n = 0;
    std::vector<std::size_t> rows(t.size(), 0), cols(t.empty() ? 0 : t[0].size(), 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < t[i].size(); ++j) {
            rows[i] += t[i][j];
            cols[j] += t[i][j];
            n += t[i][j];
        }
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < t[i].size(); ++j) {
            if (t[i][j] == 0) continue;
            const double p = double(t[i][j]) / double(n);
            mi += p * std::log(p / ((double(rows[i]) / double(n)) * (double(cols[j]) / double(n))));
        }
    }
    return mi;
}

namespace {

double log_factorial(std::size_t k) { return std::lgamma(double(k) + 1.0); }

double entropy(const std::vector<std::size_t>& m) {
    std::size_t n = 0;
    for (auto v : m) n += v;
    double h = 0.0;
    for (auto v : m) {
        if (v) h -= double(v) / double(n) * std::log(double(v) / double(n));
    }
    return h;
}

}  // namespace

double expected_mi_enumerated(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    std::size_t n = 0;
    for (auto v : rows) n += v;
    const std::size_t r = rows.size();
    const std::size_t c = cols.size();
    double log_const = -log_factorial(n);
    for (auto v : rows) log_const += log_factorial(v);
    for (auto v : cols) log_const += log_factorial(v);

    Table t(r, std::vector<std::size_t>(c, 0));
    std::vector<std::size_t> col_left = cols;
    double total = 0.0;
    double mass = 0.0;

    // Fill row by row; within a row, cell by cell, the last cell forced.
    std::function<void(std::size_t, std::size_t, std::size_t)> fill = [&](std::size_t i, std::size_t j,
                                                                       std::size_t row_left) {
        if (i == r) {
            double log_p = log_const;
            for (const auto& row : t) {
                for (auto v : row) log_p -= log_factorial(v);
            }
            const double p = std::exp(log_p);
            mass += p;
            total += p * mutual_information(t);
            return;
        }
        if (j == c - 1) {
            if (row_left > col_left[j]) return;
            if (i == r - 1) {
                // last row must exhaust every column
                for (std::size_t q = 0; q + 1 < c; ++q) {
                    if (col_left[q] != 0) return;
                }
            }
            t[i][j] = row_left;
            col_left[j] -= row_left;
            fill(i + 1, 0, i + 1 < r ? rows[i + 1] : 0);
            col_left[j] += row_left;
            t[i][j] = 0;
            return;
        }
        const std::size_t hi = std::min(row_left, col_left[j]);
        const std::size_t lo = i == r - 1 ? col_left[j] : 0;  // last row takes what is left
        for (std::size_t v = lo; v <= hi; ++v) {
            t[i][j] = v;
            col_left[j] -= v;
            fill(i, j + 1, row_left - v);
            col_left[j] += v;
        }
        t[i][j] = 0;
    };
    fill(0, 0, rows.empty() ? 0 : rows[0]);
    if (std::abs(mass - 1.0) > 1e-9) throw std::logic_error("enumeration lost probability mass");
    return total;
}

double ami_enumerated(const Table& t, bool max_normalizer) {
    std::vector<std::size_t> rows(t.size(), 0), cols(t[0].size(), 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < t[i].size(); ++j) {
            rows[i] += t[i][j];
            cols[j] += t[i][j];
        }
    }
    const double hu = entropy(rows);
    const double hv = entropy(cols);
    const double mi = mutual_information(t);
    const double emi = expected_mi_enumerated(rows, cols);
    const double norm = max_normalizer ? std::max(hu, hv) : 0.5 * (hu + hv);
    if (std::abs(norm - emi) <= 1e-14 * std::max(norm, 1.0)) {
        // 0/0: only one table fits the marginals. Matching tables score 1.
        for (const auto& row : t) {
            if (std::count_if(row.begin(), row.end(), [](std::size_t v) { return v > 0; }) > 1) return 0.0;
        }
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::size_t nonzero = 0;
            for (const auto& row : t) nonzero += row[j] > 0 ? 1 : 0;
            if (nonzero > 1) return 0.0;
        }
        return 1.0;
    }
    return (mi - emi) / (norm - emi);
}

double silhouette_brute(const Eigen::MatrixXd& x, const std::vector<std::size_t>& a, bool nearest) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::size_t k = 0;
    for (auto v : a) k = std::max(k, v + 1);
    std::vector<std::size_t> size(k, 0);
    for (auto v : a) ++size[v];

    auto dist = [&](std::size_t i, std::size_t j) {
        double dot = 0.0, ni = 0.0, nj = 0.0;
        for (Eigen::Index d = 0; d < x.cols(); ++d) {
            dot += x(i, d) * x(j, d);
            ni += x(i, d) * x(i, d);
            nj += x(j, d) * x(j, d);
        }
        if (ni == 0.0 || nj == 0.0) return 1.0;
        return std::clamp(1.0 - dot / (std::sqrt(ni) * std::sqrt(nj)), 0.0, 2.0);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (size[a[i]] == 1) continue;
        std::vector<double> sum(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum[a[j]] += dist(i, j);
        }
        const double in = sum[a[i]] / double(size[a[i]] - 1);
        double out = 0.0;
        if (nearest) {
            out = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                if (c != a[i] && size[c] > 0) out = std::min(out, sum[c] / double(size[c]));
            }
        } else {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                if (c != a[i]) s += sum[c];
            }
            out = s / double(n - size[a[i]]);
        }
        const double m = std::max(in, out);
        if (m > 1e-12) total += (out - in) / m;
    }
    return total / double(n);
}

Partition best_two_partition(const Eigen::MatrixXd& x) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (n < 2 || n > 24) throw std::invalid_argument("exhaustive search needs 2..24 points");
    Partition best;
    best.objective = std::numeric_limits<double>::infinity();
    // point 0 always in part 0; skip the mask that leaves part 1 empty
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        std::vector<std::size_t> assign(n, 0);
        for (std::size_t i = 1; i < n; ++i) assign[i] = (mask >> (i - 1)) & 1U;
        double obj = 0.0;
        for (std::size_t part = 0; part < 2; ++part) {
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] == part) {
                    mean += x.row(i);
                    ++count;
                }
            }
            mean /= double(count);
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] == part) obj += (x.row(i) - mean).squaredNorm();
            }
        }
        if (obj < best.objective) best = {assign, obj};
    }
    return best;
}

}  // namespace oracle

#include "scattermesh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "csv.hpp"
#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

std::vector<double> log_factorials(std::size_t n) {
    std::vector<double> out(n + 1, 0.0);
    for (std::size_t i = 2; i <= n; ++i) out[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return out;
}

std::size_t class_index(std::vector<std::string>& labels, const std::string& label, bool fixed) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it != labels.end()) return static_cast<std::size_t>(it - labels.begin());
    if (fixed) throw DataError("truth class '" + label + "' is not in the class list");
    labels.push_back(label);
    return labels.size() - 1;
}

}  // namespace

ContingencyTable::ContingencyTable(std::vector<std::string> class_labels,
                                   std::vector<std::vector<std::size_t>> counts)
    : class_labels_(std::move(class_labels)), counts_(std::move(counts)) {
    if (class_labels_.size() != counts_.size()) throw DataError("contingency row/label count mismatch");
    const std::size_t width = counts_.empty() ? 0 : counts_[0].size();
    class_totals_.assign(counts_.size(), 0);
    cluster_totals_.assign(width, 0);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i].size() != width) throw DataError("contingency rows differ in length");
        for (std::size_t j = 0; j < width; ++j) {
            class_totals_[i] += counts_[i][j];
            cluster_totals_[j] += counts_[i][j];
            total_ += counts_[i][j];
        }
    }
}

bool ContingencyTable::is_matching() const {
    for (const auto& row : counts_) {
        if (std::count_if(row.begin(), row.end(), [](std::size_t c) { return c > 0; }) > 1) return false;
    }
    for (std::size_t j = 0; j < clusters(); ++j) {
        std::size_t nonzero = 0;
        for (const auto& row : counts_) nonzero += row[j] > 0;
        if (nonzero > 1) return false;
    }
    return true;
}

ContingencyTable ContingencyTable::transposed() const {
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> t(clusters(), std::vector<std::size_t>(classes(), 0));
    for (std::size_t j = 0; j < clusters(); ++j) {
        labels.push_back(std::to_string(j));
        for (std::size_t i = 0; i < classes(); ++i) t[j][i] = counts_[i][j];
    }
    return ContingencyTable(std::move(labels), std::move(t));
}

ContingencyTable contingency(const std::vector<std::size_t>& predicted, const std::vector<std::string>& truth,
                             const std::vector<std::string>& class_order) {
    if (predicted.size() != truth.size()) throw DataError("predicted and truth lengths differ");
    std::vector<std::string> labels = class_order;
    const bool fixed = !class_order.empty();
    std::vector<std::size_t> rows;
    rows.reserve(truth.size());
    for (const auto& t : truth) rows.push_back(class_index(labels, t, fixed));

    const std::size_t k = predicted.empty() ? 0 : *std::max_element(predicted.begin(), predicted.end()) + 1;
    std::vector<std::vector<std::size_t>> counts(labels.size(), std::vector<std::size_t>(k, 0));
    for (std::size_t d = 0; d < predicted.size(); ++d) ++counts[rows[d]][predicted[d]];
    return ContingencyTable(std::move(labels), std::move(counts));
}

ContingencyTable contingency(const std::map<std::string, std::size_t>& predicted,
                             const std::map<std::string, std::string>& truth,
                             const std::vector<std::string>& class_order) {
    std::vector<std::string> offenders;
    for (const auto& [id, c] : predicted) {
        if (!truth.count(id)) offenders.push_back(id + " (no truth)");
    }
    for (const auto& [id, c] : truth) {
        if (!predicted.count(id)) offenders.push_back(id + " (no prediction)");
    }
    if (!offenders.empty()) {
        std::string msg = "id sets differ: ";
        for (std::size_t i = 0; i < offenders.size() && i < 20; ++i) msg += (i ? ", " : "") + offenders[i];
        if (offenders.size() > 20) msg += ", ... (" + std::to_string(offenders.size()) + " total)";
        throw DataError(msg);
    }
    std::vector<std::size_t> p;
    std::vector<std::string> t;
    for (const auto& [id, c] : predicted) {
        p.push_back(c);
        t.push_back(truth.at(id));
    }
    return contingency(p, t, class_order);
}

ContingencyTable read_contingency_csv(std::istream& in) {
    csv::Reader reader(in);
    csv::Row row;
    if (!reader.next(row) || row.fields.size() < 2) throw DataError("contingency CSV needs a header row");
    const std::size_t width = row.fields.size() - 1;
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> counts;
    while (reader.next(row)) {
        if (row.fields.size() != width + 1) {
            throw DataError("line " + std::to_string(row.line) + ": expected " + std::to_string(width + 1) +
                            " fields");
        }
        labels.push_back(row.fields[0]);
        std::vector<std::size_t> r;
        for (std::size_t j = 1; j <= width; ++j) {
            std::string cell = row.fields[j];
            cell.erase(std::remove(cell.begin(), cell.end(), '_'), cell.end());
            try {
                std::size_t used = 0;
                const long long v = std::stoll(cell, &used);
                if (used != cell.size() || v < 0) throw std::invalid_argument(cell);
                r.push_back(static_cast<std::size_t>(v));
            } catch (const std::exception&) {
                throw DataError("line " + std::to_string(row.line) + ": bad count '" + row.fields[j] + "'");
            }
        }
        counts.push_back(std::move(r));
    }
    return ContingencyTable(std::move(labels), std::move(counts));
}

void write_contingency_csv(const ContingencyTable& table, std::ostream& out) {
    std::vector<std::string> header{"class"};
    for (std::size_t j = 0; j < table.clusters(); ++j) header.push_back(std::to_string(j));
    csv::write_row(out, header);
    for (std::size_t i = 0; i < table.classes(); ++i) {
        std::vector<std::string> row{table.class_labels()[i]};
        for (std::size_t j = 0; j < table.clusters(); ++j) row.push_back(std::to_string(table.at(i, j)));
        csv::write_row(out, row);
    }
}

double purity(const ContingencyTable& table) {
    if (table.total() == 0) throw DataError("purity of an empty table");
    std::size_t sum = 0;
    for (std::size_t j = 0; j < table.clusters(); ++j) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < table.classes(); ++i) best = std::max(best, table.at(i, j));
        sum += best;
    }
    return static_cast<double>(sum) / static_cast<double>(table.total());
}

std::vector<double> homogeneity(const ContingencyTable& table) {
    std::vector<double> out;
    for (std::size_t j = 0; j < table.clusters(); ++j) {
        const auto size = table.cluster_totals()[j];
        if (size == 0) throw DataError("homogeneity of empty cluster " + std::to_string(j));
        std::size_t best = 0;
        for (std::size_t i = 0; i < table.classes(); ++i) best = std::max(best, table.at(i, j));
        out.push_back(static_cast<double>(best) / static_cast<double>(size));
    }
    return out;
}

double entropy(const std::vector<std::size_t>& marginals, std::size_t n) {
    if (n == 0) throw DataError("entropy needs N >= 1");
    double h = 0.0;
    const double total = static_cast<double>(n);
    for (auto m : marginals) {
        if (m == 0) continue;
        const double p = static_cast<double>(m) / total;
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const ContingencyTable& table) {
    if (table.total() == 0) throw DataError("mutual information needs N >= 1");
    const double n = static_cast<double>(table.total());
    double mi = 0.0;
    for (std::size_t i = 0; i < table.classes(); ++i) {
        for (std::size_t j = 0; j < table.clusters(); ++j) {
            const auto c = table.at(i, j);
            if (c == 0) continue;
            const double nij = static_cast<double>(c);
            mi += nij / n *
                  std::log(n * nij / (static_cast<double>(table.class_totals()[i]) *
                                      static_cast<double>(table.cluster_totals()[j])));
        }
    }
    return std::max(mi, 0.0);
}

double expected_mi(const ContingencyTable& table) {
    const std::size_t n = table.total();
    if (n == 0) throw DataError("expected MI needs N >= 1");
    const auto lf = log_factorials(n);
    const double nd = static_cast<double>(n);
    double emi = 0.0;
    for (auto a : table.class_totals()) {
        if (a == 0) continue;
        for (auto b : table.cluster_totals()) {
            if (b == 0) continue;
            const double fixed = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
            const std::size_t lo = std::max<std::size_t>(1, a + b > n ? a + b - n : 0);
            const std::size_t hi = std::min(a, b);
            for (std::size_t m = lo; m <= hi; ++m) {
                const double log_p = fixed - lf[m] - lf[a - m] - lf[b - m] - lf[n - a - b + m];
                const double md = static_cast<double>(m);
                emi += md / nd * std::log(nd * md / (static_cast<double>(a) * static_cast<double>(b))) *
                       std::exp(log_p);
            }
        }
    }
    return emi;
}

std::string_view to_string(AmiNormalizer normalizer) {
    return normalizer == AmiNormalizer::max ? "max" : "arithmetic";
}

AmiNormalizer parse_ami_normalizer(std::string_view name) {
    if (name == "arithmetic") return AmiNormalizer::arithmetic;
    if (name == "max") return AmiNormalizer::max;
    throw DataError("unknown AMI normalizer '" + std::string(name) + "'");
}

double ami(const ContingencyTable& table, AmiNormalizer normalizer) {
    if (table.total() == 0) throw DataError("AMI needs N >= 1");
    if (table.is_matching()) return 1.0;

    const double hu = entropy(table.class_totals(), table.total());
    const double hv = entropy(table.cluster_totals(), table.total());
    const double norm = normalizer == AmiNormalizer::max ? std::max(hu, hv) : 0.5 * (hu + hv);
    const double emi = expected_mi(table);
    const double denom = norm - emi;
    if (std::abs(denom) <= 1e-15 * std::max(1.0, norm)) return 0.0;
    return (mutual_information(table) - emi) / denom;
}

std::string_view to_string(SilhouetteVariant variant) {
    return variant == SilhouetteVariant::nearest ? "nearest" : "pooled";
}

SilhouetteVariant parse_silhouette_variant(std::string_view name) {
    if (name == "pooled") return SilhouetteVariant::pooled;
    if (name == "nearest") return SilhouetteVariant::nearest;
    throw DataError("unknown silhouette variant '" + std::string(name) + "'");
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                  SilhouetteVariant variant) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (assignments.size() != n) throw DataError("silhouette: assignment count mismatch");
    if (n == 0) throw DataError("silhouette of an empty set");
    const std::size_t k = *std::max_element(assignments.begin(), assignments.end()) + 1;
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    if (k < 2) throw DataError("silhouette needs at least two clusters");
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) throw DataError("silhouette: cluster " + std::to_string(c) + " is empty");
    }

    // Unit rows; zero rows stay zero and so sit at distance 1 from everything.
    Eigen::MatrixXd unit_rows = points;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double norm = points.row(i).norm();
        if (norm > 0.0) unit_rows.row(i) /= norm;
    }

    constexpr Eigen::Index kBlock = 256;
    double total = 0.0;
    std::vector<double> sums(k);
    for (Eigen::Index start = 0; start < points.rows(); start += kBlock) {
        const Eigen::Index len = std::min(kBlock, points.rows() - start);
        const Eigen::MatrixXd dots = unit_rows.middleRows(start, len) * unit_rows.transpose();
        for (Eigen::Index r = 0; r < len; ++r) {
            const auto i = static_cast<std::size_t>(start + r);
            const std::size_t own = assignments[i];
            if (sizes[own] == 1) continue;
            std::fill(sums.begin(), sums.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                sums[assignments[j]] += std::clamp(1.0 - dots(r, static_cast<Eigen::Index>(j)), 0.0, 2.0);
            }
            const double a = sums[own] / static_cast<double>(sizes[own] - 1);
            double b = 0.0;
            if (variant == SilhouetteVariant::pooled) {
                double other = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    if (c != own) other += sums[c];
                }
                b = other / static_cast<double>(n - sizes[own]);
            } else {
                b = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
                }
            }
            const double m = std::max(a, b);
            // Coincident points: both means vanish up to rounding.
            if (m > 1e-12) total += (b - a) / m;
        }
    }
    return total / static_cast<double>(n);
}

MetricReport evaluate(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                      const ContingencyTable& table, const MetricOptions& options) {
    MetricReport r;
    r.options = options;
    r.k = table.clusters();
    r.prt = purity(table);
    r.ami = ami(table, options.normalizer);
    r.homogeneity = homogeneity(table);
    if (r.k >= 2) r.sc = silhouette(points, assignments, options.silhouette);
    return r;
}

nlohmann::json to_json(const MetricReport& report) {
    nlohmann::json j;
    j["sc"] = report.sc ? nlohmann::json(*report.sc) : nlohmann::json(nullptr);
    j["prt"] = report.prt;
    j["ami"] = report.ami;
    j["homogeneity"] = report.homogeneity;
    j["k"] = report.k;
    j["ami_normalizer"] = std::string(to_string(report.options.normalizer));
    j["sc_variant"] = std::string(to_string(report.options.silhouette));
    return j;
}

}  // namespace scattermesh

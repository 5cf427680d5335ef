#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace scattermesh {

// Class x cluster co-occurrence counts ("matching matrix").
class ContingencyTable {
public:
    ContingencyTable() = default;
    // counts[i][j]: documents of class i placed in cluster j.
    ContingencyTable(std::vector<std::string> class_labels, std::vector<std::vector<std::size_t>> counts);

    std::size_t classes() const noexcept { return class_labels_.size(); }
    std::size_t clusters() const noexcept { return cluster_totals_.size(); }
    std::size_t total() const noexcept { return total_; }

    std::size_t at(std::size_t cls, std::size_t cluster) const { return counts_[cls][cluster]; }
    const std::vector<std::vector<std::size_t>>& counts() const noexcept { return counts_; }
    const std::vector<std::size_t>& class_totals() const noexcept { return class_totals_; }
    const std::vector<std::size_t>& cluster_totals() const noexcept { return cluster_totals_; }
    const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }

    // Same partition pair: every nonempty row and column holds one nonzero cell.
    bool is_matching() const;

    ContingencyTable transposed() const;

private:
    std::vector<std::string> class_labels_;
    std::vector<std::vector<std::size_t>> counts_;
    std::vector<std::size_t> class_totals_;
    std::vector<std::size_t> cluster_totals_;
    std::size_t total_ = 0;
};

// Cluster count is max(predicted) + 1. Classes follow `class_order` when
// given, else first appearance.
ContingencyTable contingency(const std::vector<std::size_t>& predicted,
                             const std::vector<std::string>& truth,
                             const std::vector<std::string>& class_order = {});

// Keyed by document id; both maps must cover the same ids.
ContingencyTable contingency(const std::map<std::string, std::size_t>& predicted,
                             const std::map<std::string, std::string>& truth,
                             const std::vector<std::string>& class_order = {});

// Header row: "class" then cluster ids; first column: class labels.
ContingencyTable read_contingency_csv(std::istream& in);
void write_contingency_csv(const ContingencyTable& table, std::ostream& out);

double purity(const ContingencyTable& table);
std::vector<double> homogeneity(const ContingencyTable& table);

// All information quantities are in nats.
double entropy(const std::vector<std::size_t>& marginals, std::size_t n);
double mutual_information(const ContingencyTable& table);
// Exact expectation of MI under the hypergeometric model of fixed marginals.
double expected_mi(const ContingencyTable& table);

enum class AmiNormalizer { arithmetic, max };
std::string_view to_string(AmiNormalizer normalizer);
AmiNormalizer parse_ami_normalizer(std::string_view name);

double ami(const ContingencyTable& table, AmiNormalizer normalizer = AmiNormalizer::arithmetic);

// pooled: b_i is the mean distance to every document outside the cluster.
// nearest: b_i is the smallest mean distance to another single cluster.
enum class SilhouetteVariant { pooled, nearest };
std::string_view to_string(SilhouetteVariant variant);
SilhouetteVariant parse_silhouette_variant(std::string_view name);

// Mean silhouette under cosine distance. Zero rows sit at distance 1 from
// everything. Singleton clusters score 0.
double silhouette(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                  SilhouetteVariant variant = SilhouetteVariant::pooled);

struct MetricOptions {
    AmiNormalizer normalizer = AmiNormalizer::arithmetic;
    SilhouetteVariant silhouette = SilhouetteVariant::pooled;
};

struct MetricReport {
    std::optional<double> sc;
    double prt = 0.0;
    double ami = 0.0;
    std::vector<double> homogeneity;
    std::size_t k = 0;
    MetricOptions options;
};

// SC is left empty when there are fewer than two clusters.
MetricReport evaluate(const Eigen::MatrixXd& points, const std::vector<std::size_t>& assignments,
                      const ContingencyTable& table, const MetricOptions& options = {});

nlohmann::json to_json(const MetricReport& report);

}  // namespace scattermesh

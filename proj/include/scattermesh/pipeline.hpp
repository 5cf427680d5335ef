#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scattermesh/cluster.hpp"
#include "scattermesh/corpus.hpp"
#include "scattermesh/featselect.hpp"
#include "scattermesh/lsa.hpp"
#include "scattermesh/metrics.hpp"
#include "scattermesh/vectorizer.hpp"

namespace scattermesh {

struct SelectorConfig {
    enum class Kind { vcgs, df };
    Kind kind = Kind::vcgs;
    VcgsParams vcgs;
    DfParams df;
};

struct AlgorithmConfig {
    Algorithm kind = Algorithm::kmeans_pp;
    KmeansParams kmeans;    // seed is taken from PipelineConfig::seed
    MaximinParams maximin;  // likewise
};

struct PipelineConfig {
    FieldSubset subset = FieldSubset::TitleAbstract;
    WeightScheme scheme = WeightScheme::PaperLiteral;
    SelectorConfig selector;
    std::optional<std::size_t> lsa_n = 4;
    AlgorithmConfig algorithm;
    std::uint64_t seed = 42;
    MetricOptions metrics;

    void validate() const;
};

// JSON keys: "subset","scheme","selector","lsa_n","algorithm","seed","metrics".
// Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);

// Sorted key=value pairs joined by ';'. The seed is left out when
// `with_seed` is false so it can be derived from the rest.
std::string canonical(const PipelineConfig& config, bool with_seed = true);

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t base_seed, const PipelineConfig& config);

// tf-idf matrix over the whole corpus for one text subset and scheme.
TermDocMatrix vectorize(const Corpus& corpus, FieldSubset subset, WeightScheme scheme,
                        const StopwordSet& stopwords = default_stopwords());

struct PipelineOutput {
    TermDocMatrix matrix;                 // restricted matrix M'
    std::size_t zero_rows = 0;            // documents left without weights by selection
    std::optional<SvdFactors> factors;    // set when LSA ran
    Eigen::MatrixXd points;               // clustering space: embeddings or dense M'
    Clustering clustering;
};

// Selection, optional LSA and clustering over a prepared matrix. Failures are
// reported as StageError naming the stage.
PipelineOutput cluster_matrix(const TermDocMatrix& full, const PipelineConfig& config);

PipelineOutput run_pipeline(const Corpus& corpus, const PipelineConfig& config,
                            const StopwordSet& stopwords = default_stopwords());

}  // namespace scattermesh

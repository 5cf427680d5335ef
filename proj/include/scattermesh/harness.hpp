#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scattermesh/corpus.hpp"
#include "scattermesh/metrics.hpp"
#include "scattermesh/pipeline.hpp"

namespace scattermesh {

struct ExperimentResult {
    PipelineConfig config;
    std::string canonical;       // canonical(config), seed included
    MetricReport report;
    ContingencyTable table;
    std::size_t k_found = 0;
    std::size_t zero_rows = 0;
    double wall_time = 0.0;      // seconds
    bool comparable = true;      // false: maximin found k != class count
    std::optional<std::string> error;

    bool ok() const { return !error.has_value(); }
};

// Stage failures are rethrown as StageError.
ExperimentResult run_experiment(const LabeledDataset& dataset, const PipelineConfig& config);

// Value lists per parameter; the sweep runs their Cartesian product.
struct SweepGrid {
    std::vector<FieldSubset> subsets{FieldSubset::TitleAbstract};
    std::vector<WeightScheme> schemes{WeightScheme::PaperLiteral};
    std::vector<std::size_t> vcgs_r;
    std::vector<double> vcgs_p;
    std::vector<std::size_t> tau_df;
    std::vector<std::optional<std::size_t>> lsa_n{std::nullopt};
    std::vector<std::size_t> kmeans_k;
    std::vector<double> maximin_theta;
    KmeansParams kmeans_defaults;
    MetricOptions metrics;
    std::uint64_t seed = 42;

    // Configs in a fixed order with per-config seeds already derived.
    std::vector<PipelineConfig> expand() const;
    std::size_t size() const;
};

SweepGrid grid_from_json(const nlohmann::json& j);

// Failed configs are kept with `error` set. Results come back ranked: AMI
// descending, non-comparable rows then failures last, ties by canonical form.
std::vector<ExperimentResult> grid_sweep(const LabeledDataset& dataset, const SweepGrid& grid,
                                         std::size_t workers);

void rank_results(std::vector<ExperimentResult>& results);

// SCATTERMESH_WORKERS when set and positive, otherwise `fallback`.
std::size_t worker_count(std::size_t fallback);

nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);

enum class ReportStyle { summary, table4, table3 };
enum class ReportFormat { csv, markdown };

ReportStyle parse_report_style(std::string_view name);
ReportFormat parse_report_format(std::string_view name);

void emit_report(const std::vector<ExperimentResult>& results, ReportStyle style, ReportFormat format,
                 std::ostream& out);

// Matching matrix with a homogeneity row.
void emit_table4(const ContingencyTable& table, ReportFormat format, std::ostream& out);

// One line per ranked result; no timings, so reruns are byte-identical.
void write_results_csv(const std::vector<ExperimentResult>& results, std::ostream& out);

}  // namespace scattermesh

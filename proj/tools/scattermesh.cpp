#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scattermesh/corpus.hpp"
#include "scattermesh/descriptors.hpp"
#include "scattermesh/error.hpp"
#include "scattermesh/harness.hpp"
#include "scattermesh/pipeline.hpp"
#include "scattermesh/server.hpp"
#include "scattermesh/session.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace scattermesh;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kInternal = 3;

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<std::string> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read label list '" + path.string() + "'");
    std::vector<std::string> labels;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        labels.push_back(line);
    }
    return labels;
}

LabeledDataset load_dataset(const fs::path& corpus_path, const fs::path& truth_path) {
    const auto loaded = load_corpus(corpus_path);
    if (loaded.skipped) std::cerr << "skipped " << loaded.skipped << " records with an empty id or title\n";
    auto dataset = attach_truth(loaded.corpus, load_truth_csv(truth_path));
    if (dataset.dropped) std::cerr << "dropped " << dataset.dropped << " records without a truth label\n";
    return dataset;
}

PipelineConfig load_config(const std::string& path) {
    return path.empty() ? PipelineConfig{} : config_from_json(read_json(path));
}

std::atomic<httplib::Server*> running_server{nullptr};

extern "C" void stop_server(int) {
    if (auto* s = running_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scattermesh: document clustering with subject-heading evaluation"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a JSONL/CSV corpus and rewrite it as JSONL");
    std::string ingest_in, ingest_out, ingest_format;
    ingest->add_option("--input", ingest_in, "Corpus file")->required();
    ingest->add_option("--format", ingest_format, "jsonl or csv (default: from extension)");
    ingest->add_option("--out", ingest_out, "Output JSONL path")->required();

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Select classes and write a label-free corpus plus truth");
    std::string build_corpus, build_labels, build_out_corpus, build_out_truth;
    std::size_t build_k = 4, build_min = 0;
    build->add_option("--corpus", build_corpus, "Labeled corpus")->required();
    build->add_option("--labels", build_labels, "Candidate labels, one per line")->required();
    build->add_option("--k", build_k, "Number of classes")->capture_default_str();
    build->add_option("--min-class-size", build_min, "Minimum members per class")->capture_default_str();
    build->add_option("--out-corpus", build_out_corpus, "Output JSONL corpus")->required();
    build->add_option("--out-truth", build_out_truth, "Output truth CSV")->required();

    // run
    auto* run = app.add_subcommand("run", "Run one pipeline configuration");
    std::string run_corpus, run_truth, run_config, run_out;
    run->add_option("--corpus", run_corpus, "Label-free corpus")->required();
    run->add_option("--truth", run_truth, "Truth CSV (id,class)")->required();
    run->add_option("--config", run_config, "Pipeline config JSON");
    run->add_option("--out", run_out, "Directory for metrics, clustering and contingency files");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
    std::string sweep_corpus, sweep_truth, sweep_config, sweep_out;
    std::size_t sweep_workers = 0;
    sweep->add_option("--corpus", sweep_corpus, "Label-free corpus")->required();
    sweep->add_option("--truth", sweep_truth, "Truth CSV (id,class)")->required();
    sweep->add_option("--config", sweep_config, "Grid JSON")->required();
    sweep->add_option("--out", sweep_out, "Output directory")->required();
    sweep->add_option("--workers", sweep_workers, "Parallel configs (SCATTERMESH_WORKERS overrides)");

    // report
    auto* report = app.add_subcommand("report", "Render sweep results or a contingency table");
    std::string report_results, report_contingency, report_style = "summary", report_format = "markdown";
    auto* results_opt = report->add_option("--results", report_results, "results.json from a sweep");
    auto* table_opt = report->add_option("--contingency", report_contingency, "Contingency CSV");
    results_opt->excludes(table_opt);
    report->add_option("--style", report_style, "summary, table4 or table3")->capture_default_str();
    report->add_option("--format", report_format, "csv or markdown")->capture_default_str();

    // plot
    auto* plot = app.add_subcommand("plot", "Two-dimensional projection of a clustered corpus");
    std::string plot_corpus, plot_truth, plot_config, plot_csv, plot_svg;
    plot->add_option("--corpus", plot_corpus, "Corpus")->required();
    plot->add_option("--truth", plot_truth, "Truth CSV (id,class)");
    plot->add_option("--config", plot_config, "Pipeline config JSON");
    plot->add_option("--out-csv", plot_csv, "Projection CSV");
    plot->add_option("--out-svg", plot_svg, "Projection SVG");

    // serve
    auto* serve = app.add_subcommand("serve", "Scatter/gather HTTP service");
    int serve_port = 8080;
    std::string serve_host = "127.0.0.1", serve_corpus_dir, serve_state_dir, serve_ui_dir;
    serve->add_option("--port", serve_port, "Port")->capture_default_str();
    serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
    serve->add_option("--corpus-dir", serve_corpus_dir, "Directory corpora may be loaded from")->required();
    serve->add_option("--state-dir", serve_state_dir, "Directory for session snapshots");
    serve->add_option("--ui-dir", serve_ui_dir, "Static assets served under /ui");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest) {
            const auto loaded = ingest_format.empty() ? load_corpus(ingest_in)
                                                      : load_corpus(ingest_in, parse_corpus_format(ingest_format));
            save_corpus_jsonl(loaded.corpus, ingest_out);
            std::cout << "records " << loaded.corpus.size() << "\nskipped " << loaded.skipped << '\n';
        } else if (*build) {
            const auto loaded = load_corpus(build_corpus);
            const auto dataset = build_labeled_dataset(loaded.corpus, read_labels(build_labels), build_k, build_min);
            save_corpus_jsonl(dataset.corpus, build_out_corpus);
            save_truth_csv(dataset, build_out_truth);
            std::map<std::string, std::size_t> sizes;
            for (const auto& [id, cls] : dataset.truth) ++sizes[cls];
            for (const auto& cls : dataset.classes) std::cout << cls << '\t' << sizes[cls] << '\n';
            std::cout << "records " << dataset.corpus.size() << "\ndropped " << dataset.dropped << '\n';
        } else if (*run) {
            const auto dataset = load_dataset(run_corpus, run_truth);
            const auto result = run_experiment(dataset, load_config(run_config));
            json out = to_json(result.report);
            out["canonical"] = result.canonical;
            out["zero_rows"] = result.zero_rows;
            std::cout << out.dump(2) << '\n';
            if (!run_out.empty()) {
                fs::create_directories(run_out);
                open_out(fs::path(run_out) / "metrics.json") << out.dump(2) << '\n';
                auto table = open_out(fs::path(run_out) / "contingency.csv");
                write_contingency_csv(result.table, table);
                const auto output = run_pipeline(dataset.corpus, result.config);
                auto clusters = open_out(fs::path(run_out) / "clustering.csv");
                clusters << "id,cluster\n";
                for (std::size_t i = 0; i < dataset.corpus.size(); ++i) {
                    clusters << dataset.corpus.records()[i].id << ',' << output.clustering.assignments[i] << '\n';
                }
            }
        } else if (*sweep) {
            const auto grid = grid_from_json(read_json(sweep_config));
            std::cout << "configs " << grid.size() << std::endl;
            const auto dataset = load_dataset(sweep_corpus, sweep_truth);
            const auto results = grid_sweep(dataset, grid, worker_count(sweep_workers ? sweep_workers : 1));
            fs::create_directories(sweep_out);
            {
                auto out = open_out(fs::path(sweep_out) / "results.csv");
                write_results_csv(results, out);
            }
            {
                auto out = open_out(fs::path(sweep_out) / "summary.csv");
                emit_report(results, ReportStyle::summary, ReportFormat::csv, out);
            }
            json all = json::array();
            for (const auto& r : results) all.push_back(to_json(r));
            open_out(fs::path(sweep_out) / "results.json") << all.dump(1) << '\n';
            std::size_t failed = 0;
            for (const auto& r : results) failed += r.ok() ? 0 : 1;
            std::cout << "failed " << failed << '\n';
            emit_report(results, ReportStyle::summary, ReportFormat::markdown, std::cout);
        } else if (*report) {
            const auto style = parse_report_style(report_style);
            const auto format = parse_report_format(report_format);
            if (!report_contingency.empty()) {
                if (style != ReportStyle::table4) throw DataError("--contingency only supports --style table4");
                std::ifstream in(report_contingency);
                if (!in) throw DataError("cannot read '" + report_contingency + "'");
                emit_table4(read_contingency_csv(in), format, std::cout);
            } else if (!report_results.empty()) {
                std::vector<ExperimentResult> results;
                for (const auto& r : read_json(report_results)) results.push_back(result_from_json(r));
                emit_report(results, style, format, std::cout);
            } else {
                std::cerr << "report needs --results or --contingency\n";
                return kUsage;
            }
        } else if (*plot) {
            if (plot_csv.empty() && plot_svg.empty()) {
                std::cerr << "plot needs --out-csv and/or --out-svg\n";
                return kUsage;
            }
            auto corpus = load_corpus(plot_corpus).corpus;
            std::optional<std::vector<std::string>> truth;
            if (!plot_truth.empty()) {
                auto dataset = attach_truth(corpus, load_truth_csv(plot_truth));
                corpus = dataset.corpus;
                truth = dataset.truth_in_order();
            }
            const auto output = run_pipeline(corpus, load_config(plot_config));
            const auto points = plot_projection(output.matrix, output.clustering, truth ? &*truth : nullptr);
            if (!plot_csv.empty()) {
                auto out = open_out(plot_csv);
                write_projection_csv(points, out);
            }
            if (!plot_svg.empty()) {
                auto out = open_out(plot_svg);
                write_projection_svg(points, out);
            }
        } else if (*serve) {
            ServiceOptions options;
            options.corpus_dir = serve_corpus_dir;
            if (!fs::is_directory(options.corpus_dir)) throw DataError("corpus dir '" + serve_corpus_dir + "' missing");
            if (!serve_state_dir.empty()) options.state_dir = serve_state_dir;
            ScatterService service(options);
            httplib::Server server;
            mount_routes(server, service,
                         serve_ui_dir.empty() ? std::nullopt : std::optional<fs::path>(serve_ui_dir));
            running_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            std::cout << "listening on http://" << serve_host << ':' << serve_port << std::endl;
            if (!server.listen(serve_host, serve_port)) {
                std::cerr << "cannot listen on " << serve_host << ':' << serve_port << '\n';
                return kInternal;
            }
            running_server = nullptr;
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}

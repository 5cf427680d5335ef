#include "scattermesh/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include "csv.hpp"
#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

using json = nlohmann::json;

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
std::vector<T> list_or(const json& j, const char* key, std::vector<T> fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_array()) throw DataError(std::string("grid key '") + key + "' must be a list");
    try {
        return it->get<std::vector<T>>();
    } catch (const json::exception&) {
        throw DataError(std::string("grid key '") + key + "' has the wrong element type");
    }
}

void finish(ExperimentResult& result, const LabeledDataset& dataset, const PipelineOutput& output) {
    const auto truth = dataset.truth_in_order();
    result.table = contingency(output.clustering.assignments, truth, dataset.classes);
    result.report = evaluate(output.points, output.clustering.assignments, result.table, result.config.metrics);
    result.k_found = output.clustering.k;
    result.zero_rows = output.zero_rows;
    result.comparable = result.config.algorithm.kind == Algorithm::kmeans_pp ||
                        result.k_found == dataset.classes.size();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int status_rank(const ExperimentResult& r) {
    if (!r.ok()) return 2;
    return r.comparable ? 0 : 1;
}

std::string algorithm_label(const PipelineConfig& c) {
    return c.algorithm.kind == Algorithm::kmeans_pp ? "k-means" : "maximin";
}

std::string selector_label(const PipelineConfig& c) {
    return c.selector.kind == SelectorConfig::Kind::vcgs ? "VCGS" : "df";
}

std::string lsa_label(const PipelineConfig& c) { return c.lsa_n ? "Yes" : "No"; }

std::string subset_label(FieldSubset s) {
    switch (s) {
        case FieldSubset::TitleOnly: return "(a)";
        case FieldSubset::TitleAbstract: return "(b)";
        case FieldSubset::TitleAbstractBody: return "(c)";
    }
    return "";
}

class TableWriter {
public:
    TableWriter(ReportFormat format, std::ostream& out) : format_(format), out_(out) {}

    void header(const std::vector<std::string>& cells) {
        row(cells);
        if (format_ == ReportFormat::markdown) {
            out_ << '|';
            for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i == 0 ? " --- |" : " ---: |");
            out_ << '\n';
        }
    }

    void row(const std::vector<std::string>& cells) {
        if (format_ == ReportFormat::csv) {
            csv::write_row(out_, cells);
            return;
        }
        out_ << '|';
        for (const auto& c : cells) out_ << ' ' << c << " |";
        out_ << '\n';
    }

private:
    ReportFormat format_;
    std::ostream& out_;
};

std::vector<std::string> metric_cells(const ExperimentResult* r) {
    if (!r) return {"-", "-", "-"};
    return {r->report.sc ? fixed(*r->report.sc, 3) : "-", fixed(r->report.prt, 3), fixed(r->report.ami, 3)};
}

// Best comparable, successful result among `results` matching `pred`.
template <class Pred>
const ExperimentResult* best_where(const std::vector<ExperimentResult>& results, Pred pred) {
    const ExperimentResult* best = nullptr;
    for (const auto& r : results) {
        if (!r.ok() || !r.comparable || !pred(r)) continue;
        if (!best || r.report.ami > best->report.ami ||
            (r.report.ami == best->report.ami && r.canonical < best->canonical)) {
            best = &r;
        }
    }
    return best;
}

}  // namespace

ExperimentResult run_experiment(const LabeledDataset& dataset, const PipelineConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.config = config;
    result.canonical = canonical(config);
    const auto output = run_pipeline(dataset.corpus, config);
    try {
        finish(result, dataset, output);
    } catch (const std::exception& e) {
        throw StageError("metrics", e.what());
    }
    result.wall_time = seconds_since(start);
    return result;
}

std::vector<PipelineConfig> SweepGrid::expand() const {
    std::vector<SelectorConfig> selectors;
    for (auto r : vcgs_r) {
        for (auto p : vcgs_p) {
            SelectorConfig s;
            s.kind = SelectorConfig::Kind::vcgs;
            s.vcgs = {r, p};
            selectors.push_back(s);
        }
    }
    for (auto t : tau_df) {
        SelectorConfig s;
        s.kind = SelectorConfig::Kind::df;
        s.df.tau_df = t;
        selectors.push_back(s);
    }
    std::vector<AlgorithmConfig> algorithms;
    for (auto k : kmeans_k) {
        AlgorithmConfig a;
        a.kind = Algorithm::kmeans_pp;
        a.kmeans = kmeans_defaults;
        a.kmeans.k = k;
        algorithms.push_back(a);
    }
    for (auto theta : maximin_theta) {
        AlgorithmConfig a;
        a.kind = Algorithm::maximin;
        a.maximin.theta = theta;
        algorithms.push_back(a);
    }

    std::vector<PipelineConfig> out;
    for (auto subset : subsets) {
        for (auto scheme : schemes) {
            for (const auto& sel : selectors) {
                for (const auto& lsa : lsa_n) {
                    for (const auto& alg : algorithms) {
                        PipelineConfig c;
                        c.subset = subset;
                        c.scheme = scheme;
                        c.selector = sel;
                        c.lsa_n = lsa;
                        c.algorithm = alg;
                        c.metrics = metrics;
                        c.seed = derive_seed(seed, c);
                        out.push_back(c);
                    }
                }
            }
        }
    }
    return out;
}

std::size_t SweepGrid::size() const {
    return subsets.size() * schemes.size() * (vcgs_r.size() * vcgs_p.size() + tau_df.size()) * lsa_n.size() *
           (kmeans_k.size() + maximin_theta.size());
}

SweepGrid grid_from_json(const json& j) {
    if (!j.is_object()) throw DataError("sweep grid must be a JSON object");
    SweepGrid g;
    g.subsets.clear();
    for (const auto& s : list_or<std::string>(j, "subset", {"title_abstract"})) {
        g.subsets.push_back(parse_field_subset(s));
    }
    g.schemes.clear();
    for (const auto& s : list_or<std::string>(j, "scheme", {"paper_literal"})) {
        g.schemes.push_back(parse_weight_scheme(s));
    }
    if (auto it = j.find("vcgs"); it != j.end()) {
        g.vcgs_r = list_or<std::size_t>(*it, "R", {});
        g.vcgs_p = list_or<double>(*it, "P", {});
    }
    if (auto it = j.find("df"); it != j.end()) g.tau_df = list_or<std::size_t>(*it, "tau_df", {});
    if (auto it = j.find("lsa_n"); it != j.end()) {
        if (!it->is_array()) throw DataError("grid key 'lsa_n' must be a list");
        g.lsa_n.clear();
        for (const auto& v : *it) {
            if (v.is_null()) {
                g.lsa_n.emplace_back(std::nullopt);
            } else if (v.is_number_unsigned()) {
                g.lsa_n.emplace_back(v.get<std::size_t>());
            } else {
                throw DataError("grid key 'lsa_n' holds positive integers or null");
            }
        }
    }
    if (auto it = j.find("kmeans"); it != j.end()) {
        g.kmeans_k = list_or<std::size_t>(*it, "k", {});
        auto& d = g.kmeans_defaults;
        d.restarts = it->value("restarts", d.restarts);
        d.max_iterations = it->value("max_iterations", d.max_iterations);
        d.tolerance = it->value("tolerance", d.tolerance);
    }
    if (auto it = j.find("maximin"); it != j.end()) g.maximin_theta = list_or<double>(*it, "theta", {});
    g.seed = j.value("seed", g.seed);
    if (auto it = j.find("metrics"); it != j.end()) {
        g.metrics.normalizer = parse_ami_normalizer(it->value("ami_normalizer", "arithmetic"));
        g.metrics.silhouette = parse_silhouette_variant(it->value("silhouette", "pooled"));
    }
    if (g.size() == 0) throw DataError("sweep grid is empty: it needs a selector and an algorithm");
    return g;
}

void rank_results(std::vector<ExperimentResult>& results) {
    std::sort(results.begin(), results.end(), [](const ExperimentResult& a, const ExperimentResult& b) {
        const int sa = status_rank(a), sb = status_rank(b);
        if (sa != sb) return sa < sb;
        if (sa < 2 && a.report.ami != b.report.ami) return a.report.ami > b.report.ami;
        return a.canonical < b.canonical;
    });
}

std::vector<ExperimentResult> grid_sweep(const LabeledDataset& dataset, const SweepGrid& grid,
                                         std::size_t workers) {
    const auto configs = grid.expand();
    if (configs.empty()) throw DataError("sweep grid is empty");

    // One tf-idf matrix per (subset, scheme); configs only read it.
    std::map<std::pair<FieldSubset, WeightScheme>, TermDocMatrix> matrices;
    std::map<std::pair<FieldSubset, WeightScheme>, std::string> failures;
    for (auto subset : grid.subsets) {
        for (auto scheme : grid.schemes) {
            try {
                matrices.emplace(std::make_pair(subset, scheme), vectorize(dataset.corpus, subset, scheme));
            } catch (const std::exception& e) {
                failures.emplace(std::make_pair(subset, scheme), e.what());
            }
        }
    }

    std::vector<ExperimentResult> results(configs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            const auto start = std::chrono::steady_clock::now();
            auto& r = results[i];
            r.config = configs[i];
            r.canonical = canonical(configs[i]);
            const auto key = std::make_pair(configs[i].subset, configs[i].scheme);
            try {
                if (auto f = failures.find(key); f != failures.end()) throw DataError(f->second);
                const auto output = cluster_matrix(matrices.at(key), configs[i]);
                try {
                    finish(r, dataset, output);
                } catch (const std::exception& e) {
                    throw StageError("metrics", e.what());
                }
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            r.wall_time = seconds_since(start);
        }
    };

    workers = std::max<std::size_t>(1, std::min(workers, configs.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    rank_results(results);
    return results;
}

std::size_t worker_count(std::size_t fallback) {
    if (const char* env = std::getenv("SCATTERMESH_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, fallback);
}

json to_json(const ExperimentResult& r) {
    json j;
    j["config"] = to_json(r.config);
    j["canonical"] = r.canonical;
    j["k_found"] = r.k_found;
    j["zero_rows"] = r.zero_rows;
    j["comparable"] = r.comparable;
    j["wall_time"] = r.wall_time;
    if (r.error) {
        j["error"] = *r.error;
        j["metrics"] = nullptr;
        j["contingency"] = nullptr;
    } else {
        j["error"] = nullptr;
        j["metrics"] = to_json(r.report);
        j["contingency"] = {{"classes", r.table.class_labels()}, {"counts", r.table.counts()}};
    }
    return j;
}

ExperimentResult result_from_json(const json& j) {
    try {
        ExperimentResult r;
        r.config = config_from_json(j.at("config"));
        r.canonical = j.value("canonical", canonical(r.config));
        r.k_found = j.value("k_found", std::size_t{0});
        r.zero_rows = j.value("zero_rows", std::size_t{0});
        r.comparable = j.value("comparable", true);
        r.wall_time = j.value("wall_time", 0.0);
        if (j.contains("error") && !j["error"].is_null()) {
            r.error = j["error"].get<std::string>();
            return r;
        }
        const auto& m = j.at("metrics");
        if (!m.at("sc").is_null()) r.report.sc = m["sc"].get<double>();
        r.report.prt = m.at("prt").get<double>();
        r.report.ami = m.at("ami").get<double>();
        r.report.homogeneity = m.at("homogeneity").get<std::vector<double>>();
        r.report.k = m.at("k").get<std::size_t>();
        r.report.options = r.config.metrics;
        const auto& t = j.at("contingency");
        r.table = ContingencyTable(t.at("classes").get<std::vector<std::string>>(),
                                   t.at("counts").get<std::vector<std::vector<std::size_t>>>());
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed result record: ") + e.what());
    }
}

ReportStyle parse_report_style(std::string_view name) {
    if (name == "summary") return ReportStyle::summary;
    if (name == "table4") return ReportStyle::table4;
    if (name == "table3") return ReportStyle::table3;
    throw DataError("unknown report style '" + std::string(name) + "'");
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw DataError("unknown report format '" + std::string(name) + "'");
}

void emit_table4(const ContingencyTable& table, ReportFormat format, std::ostream& out) {
    TableWriter w(format, out);
    std::vector<std::string> header{"MeSH term"};
    for (std::size_t j = 0; j < table.clusters(); ++j) header.push_back("C_" + std::to_string(j + 1));
    w.header(header);
    for (std::size_t i = 0; i < table.classes(); ++i) {
        std::vector<std::string> row{table.class_labels()[i]};
        for (std::size_t j = 0; j < table.clusters(); ++j) row.push_back(std::to_string(table.at(i, j)));
        w.row(row);
    }
    std::vector<std::string> row{"Homogeneity"};
    for (double h : homogeneity(table)) row.push_back(fixed(h, 3));
    w.row(row);
}

void emit_report(const std::vector<ExperimentResult>& results, ReportStyle style, ReportFormat format,
                 std::ostream& out) {
    if (results.empty()) throw DataError("no results to report");
    TableWriter w(format, out);

    if (style == ReportStyle::table4) {
        const ExperimentResult* best = nullptr;
        for (const auto& r : results) {
            if (r.ok() && (!best || status_rank(r) < status_rank(*best) ||
                           (status_rank(r) == status_rank(*best) && r.report.ami > best->report.ami))) {
                best = &r;
            }
        }
        if (!best) throw DataError("no successful result to build a matching matrix from");
        emit_table4(best->table, format, out);
        return;
    }

    if (style == ReportStyle::summary) {
        w.header({"Clustering", "Feat. selection", "LSA", "SC", "PRT", "AMI"});
        for (auto alg : {Algorithm::kmeans_pp, Algorithm::maximin}) {
            for (auto sel : {SelectorConfig::Kind::vcgs, SelectorConfig::Kind::df}) {
                for (bool lsa : {true, false}) {
                    auto in_group = [&](const ExperimentResult& r) {
                        return r.config.algorithm.kind == alg && r.config.selector.kind == sel &&
                               r.config.lsa_n.has_value() == lsa;
                    };
                    const auto present = std::find_if(results.begin(), results.end(), in_group);
                    if (present == results.end()) continue;
                    auto cells = std::vector<std::string>{algorithm_label(present->config),
                                                          selector_label(present->config),
                                                          lsa_label(present->config)};
                    for (auto& c : metric_cells(best_where(results, in_group))) cells.push_back(std::move(c));
                    w.row(cells);
                }
            }
        }
        return;
    }

    w.header({"Data", "Clustering", "Feat. selection", "LSA", "SC", "PRT", "AMI"});
    for (auto subset : {FieldSubset::TitleOnly, FieldSubset::TitleAbstract, FieldSubset::TitleAbstractBody}) {
        auto in_subset = [&](const ExperimentResult& r) { return r.config.subset == subset; };
        if (std::none_of(results.begin(), results.end(), in_subset)) continue;
        const auto* best = best_where(results, in_subset);
        std::vector<std::string> cells{subset_label(subset)};
        if (best) {
            cells.push_back(algorithm_label(best->config));
            cells.push_back(selector_label(best->config));
            cells.push_back(lsa_label(best->config));
        } else {
            cells.insert(cells.end(), {"-", "-", "-"});
        }
        for (auto& c : metric_cells(best)) cells.push_back(std::move(c));
        w.row(cells);
    }
}

void write_results_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
    csv::write_row(out, {"rank", "subset", "scheme", "selector", "R", "P", "tau_df", "lsa_n", "algorithm", "k",
                         "theta", "seed", "k_found", "comparable", "zero_rows", "sc", "prt", "ami", "error"});
    std::size_t rank = 0;
    for (const auto& r : results) {
        const auto& c = r.config;
        const bool vcgs = c.selector.kind == SelectorConfig::Kind::vcgs;
        const bool km = c.algorithm.kind == Algorithm::kmeans_pp;
        csv::write_row(out, {std::to_string(++rank),
                             std::string(to_string(c.subset)),
                             std::string(to_string(c.scheme)),
                             vcgs ? "vcgs" : "df",
                             vcgs ? std::to_string(c.selector.vcgs.rank_threshold) : "",
                             vcgs ? shortest(c.selector.vcgs.percent_threshold) : "",
                             vcgs ? "" : std::to_string(c.selector.df.tau_df),
                             c.lsa_n ? std::to_string(*c.lsa_n) : "",
                             std::string(to_string(c.algorithm.kind)),
                             km ? std::to_string(c.algorithm.kmeans.k) : "",
                             km ? "" : shortest(c.algorithm.maximin.theta),
                             std::to_string(c.seed),
                             r.ok() ? std::to_string(r.k_found) : "",
                             r.ok() ? (r.comparable ? "true" : "false") : "",
                             r.ok() ? std::to_string(r.zero_rows) : "",
                             r.ok() && r.report.sc ? fixed(*r.report.sc, 6) : "",
                             r.ok() ? fixed(r.report.prt, 6) : "",
                             r.ok() ? fixed(r.report.ami, 6) : "",
                             r.error.value_or("")});
    }
}

}  // namespace scattermesh

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "planted.hpp"
#include "scattermesh/error.hpp"
#include "scattermesh/harness.hpp"

using namespace scattermesh;
using json = nlohmann::json;

namespace {

const LabeledDataset& dataset() {
    static const LabeledDataset ds = planted::make({.docs = 120});
    return ds;
}

PipelineConfig planted_config() {
    PipelineConfig c;
    c.selector.vcgs = {10, 1.0};
    c.lsa_n = 4;
    c.algorithm.kmeans.k = 4;
    return c;
}

SweepGrid small_grid() {
    SweepGrid g;
    g.vcgs_r = {10};
    g.vcgs_p = {1.0, 5.0};
    g.tau_df = {5, 100000};
    g.lsa_n = {4, std::nullopt};
    g.kmeans_k = {4};
    g.kmeans_defaults.restarts = 2;
    g.maximin_theta = {0.9};
    g.seed = 11;
    return g;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("full grid size") {
    std::ifstream in(std::string(SCATTERMESH_FIXTURES) + "/full_grid.json");
    const auto grid = grid_from_json(json::parse(in));
    CHECK(grid.vcgs_p.size() == 18);
    CHECK(grid.size() == (6 * 18 + 5) * 6 * 4);
    CHECK(grid.size() == 2712);
    CHECK(grid.expand().size() == 2712);
}

TEST_CASE("canonical form and seed derivation") {
    auto c = planted_config();
    const auto text = canonical(c);
    CHECK(text.find("seed=42") != std::string::npos);
    CHECK(text.find("selector.P=1;") != std::string::npos);
    CHECK(canonical(c, false).find("seed") == std::string::npos);
    // keys are sorted
    std::vector<std::string> keys;
    std::string rest = text;
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto pair = rest.substr(0, semi);
        keys.push_back(pair.substr(0, pair.find('=')));
        rest = semi == std::string::npos ? "" : rest.substr(semi + 1);
    }
    CHECK(std::is_sorted(keys.begin(), keys.end()));

    auto other = c;
    other.seed = 99;
    CHECK(derive_seed(5, c) == derive_seed(5, other));
    CHECK(derive_seed(5, c) != derive_seed(6, c));
    other.lsa_n = 8;
    CHECK(derive_seed(5, c) != derive_seed(5, other));
    CHECK(derive_seed(5, c) < (std::uint64_t{1} << 63));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config JSON round trip and validation") {
    auto c = planted_config();
    c.algorithm.kind = Algorithm::maximin;
    c.algorithm.maximin.theta = 0.8;
    c.lsa_n.reset();
    c.metrics.normalizer = AmiNormalizer::max;
    const auto back = config_from_json(to_json(c));
    CHECK(canonical(back) == canonical(c));

    std::ifstream in(std::string(SCATTERMESH_FIXTURES) + "/sample_config.json");
    const auto sample = config_from_json(json::parse(in));
    CHECK(sample.selector.vcgs.percent_threshold == 1.0);
    CHECK(sample.lsa_n == std::optional<std::size_t>(4));

    CHECK_THROWS_AS(config_from_json(json::parse(R"({"selector":{"kind":"chi2"}})")), DataError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"algorithm":{"kind":"maximin","theta":3}})")), DataError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"lsa_n":0})")), DataError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"seed":"x"})")), DataError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"([1])")), DataError);
}

TEST_CASE("planted corpus end to end") {
    const auto r = run_experiment(dataset(), planted_config());
    CHECK(r.ok());
    CHECK(r.report.ami >= 0.9);
    CHECK(r.k_found == 4);
    CHECK(r.comparable);

    auto again = run_experiment(dataset(), planted_config());
    auto a = to_json(r), b = to_json(again);
    a.erase("wall_time");
    b.erase("wall_time");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("stage errors name the stage") {
    auto c = planted_config();
    c.selector.kind = SelectorConfig::Kind::df;
    c.selector.df.tau_df = 100000;
    try {
        run_experiment(dataset(), c);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "select");
        CHECK(std::string(e.what()).rfind("select: ", 0) == 0);
    }
}

TEST_CASE("sweep records failures, ranks, and is repeatable") {
    const auto grid = small_grid();
    CHECK(grid.size() == 16);
    const auto results = grid_sweep(dataset(), grid, 1);
    REQUIRE(results.size() == 16);
    std::size_t failures = 0;
    for (const auto& r : results) failures += r.ok() ? 0 : 1;
    CHECK(failures == 4);
    // failures last; comparable successes ordered by AMI
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i - 1].ok() && results[i].ok() && results[i - 1].comparable == results[i].comparable) {
            CHECK(results[i - 1].report.ami >= results[i].report.ami);
        }
        if (!results[i - 1].ok()) CHECK_FALSE(results[i].ok());
    }

    std::ostringstream one, many;
    write_results_csv(results, one);
    write_results_csv(grid_sweep(dataset(), grid, 3), many);
    CHECK(one.str() == many.str());
    CHECK(lines(one.str()).size() == 17);
}

TEST_CASE("adding configs leaves other results untouched") {
    auto grid = small_grid();
    grid.tau_df = {5};
    grid.maximin_theta.clear();
    const auto base = grid_sweep(dataset(), grid, 1);
    grid.maximin_theta = {0.9, 0.8};
    grid.tau_df = {5, 10};
    const auto wider = grid_sweep(dataset(), grid, 2);
    for (const auto& r : base) {
        const auto it = std::find_if(wider.begin(), wider.end(),
                                     [&](const ExperimentResult& w) { return w.canonical == r.canonical; });
        REQUIRE(it != wider.end());
        CHECK(it->report.ami == r.report.ami);
        CHECK(it->table.counts() == r.table.counts());
    }
}

TEST_CASE("ranking is a permutation and ignores input order") {
    const auto results = grid_sweep(dataset(), small_grid(), 1);
    std::mt19937 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = results;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        rank_results(shuffled);
        REQUIRE(shuffled.size() == results.size());
        for (std::size_t i = 0; i < results.size(); ++i) CHECK(shuffled[i].canonical == results[i].canonical);
    }
}

TEST_CASE("summary report layout") {
    auto results = grid_sweep(dataset(), small_grid(), 1);
    // force a non-comparable maximin group
    for (auto& r : results) {
        if (r.ok() && r.config.algorithm.kind == Algorithm::maximin && r.config.selector.kind == SelectorConfig::Kind::vcgs &&
            r.config.lsa_n) {
            r.comparable = false;
        }
    }
    std::ostringstream csv;
    emit_report(results, ReportStyle::summary, ReportFormat::csv, csv);
    const auto rows = lines(csv.str());
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == "Clustering,Feat. selection,LSA,SC,PRT,AMI");
    bool dashed = false;
    for (const auto& row : rows) {
        CHECK(std::count(row.begin(), row.end(), ',') == 5);
        if (row == "maximin,VCGS,Yes,-,-,-") dashed = true;
    }
    CHECK(dashed);
    CHECK(rows.size() == 1 + 8);

    std::ostringstream md;
    emit_report(results, ReportStyle::summary, ReportFormat::markdown, md);
    CHECK(lines(md.str())[1] == "| --- | ---: | ---: | ---: | ---: | ---: |");
}

TEST_CASE("single-result summary has one row") {
    const auto r = run_experiment(dataset(), planted_config());
    std::ostringstream out;
    emit_report({r}, ReportStyle::summary, ReportFormat::csv, out);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("k-means,VCGS,Yes,", 0) == 0);
}

TEST_CASE("table4 report from the printed matching matrix") {
    std::ifstream in(std::string(SCATTERMESH_FIXTURES) + "/table4_contingency.csv");
    const auto table = read_contingency_csv(in);
    std::ostringstream md;
    emit_table4(table, ReportFormat::markdown, md);
    const auto rows = lines(md.str());
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "| MeSH term | C_1 | C_2 | C_3 | C_4 |");
    CHECK(rows[2] == "| Triple Negative Breast Neoplasms | 1597 | 0 | 822 | 12 |");
    CHECK(rows[6] == "| Homogeneity | 0.978 | 0.978 | 0.757 | 0.712 |");

    std::ostringstream csv;
    emit_table4(table, ReportFormat::csv, csv);
    CHECK(lines(csv.str()).back() == "Homogeneity,0.978,0.978,0.757,0.712");
}

TEST_CASE("table3 report has one row per field subset") {
    auto grid = small_grid();
    grid.subsets = {FieldSubset::TitleOnly, FieldSubset::TitleAbstract, FieldSubset::TitleAbstractBody};
    grid.tau_df.clear();
    grid.maximin_theta.clear();
    grid.lsa_n = {4};
    const auto results = grid_sweep(dataset(), grid, 2);
    std::ostringstream out;
    emit_report(results, ReportStyle::table3, ReportFormat::csv, out);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "Data,Clustering,Feat. selection,LSA,SC,PRT,AMI");
    CHECK(rows[1].rfind("(a),", 0) == 0);
    CHECK(rows[3].rfind("(c),", 0) == 0);
}

TEST_CASE("result JSON round trip") {
    const auto results = grid_sweep(dataset(), small_grid(), 1);
    for (const auto& r : results) {
        const auto back = result_from_json(to_json(r));
        CHECK(back.canonical == r.canonical);
        CHECK(back.ok() == r.ok());
        if (r.ok()) {
            CHECK(back.report.ami == r.report.ami);
            CHECK(back.table.counts() == r.table.counts());
        }
    }
    std::ostringstream a, b;
    emit_report(results, ReportStyle::summary, ReportFormat::csv, a);
    std::vector<ExperimentResult> parsed;
    for (const auto& r : results) parsed.push_back(result_from_json(to_json(r)));
    emit_report(parsed, ReportStyle::summary, ReportFormat::csv, b);
    CHECK(a.str() == b.str());
}

TEST_CASE("grid parsing errors") {
    CHECK_THROWS_AS(grid_from_json(json::parse(R"({"kmeans":{"k":[4]}})")), DataError);
    CHECK_THROWS_AS(grid_from_json(json::parse(R"({"vcgs":{"R":[5],"P":[1]}})")), DataError);
    CHECK_THROWS_AS(grid_from_json(json::parse(R"({"vcgs":{"R":5,"P":[1]},"kmeans":{"k":[4]}})")), DataError);
    CHECK_THROWS_AS(grid_from_json(json::parse(R"({"lsa_n":["x"],"df":{"tau_df":[5]},"kmeans":{"k":[4]}})")),
                    DataError);
    CHECK_THROWS_AS(parse_report_style("table9"), DataError);
    CHECK_THROWS_AS(parse_report_format("html"), DataError);
}

TEST_CASE("worker count from the environment") {
    ::setenv("SCATTERMESH_WORKERS", "3", 1);
    CHECK(worker_count(1) == 3);
    ::setenv("SCATTERMESH_WORKERS", "zero", 1);
    CHECK(worker_count(2) == 2);
    ::unsetenv("SCATTERMESH_WORKERS");
    CHECK(worker_count(0) == 1);
}

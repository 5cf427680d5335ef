#include "scattermesh/pipeline.hpp"

#include <charconv>
#include <map>

#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

using json = nlohmann::json;

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw DataError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (selector.kind == SelectorConfig::Kind::vcgs) {
        selector.vcgs.validate();
    } else {
        selector.df.validate();
    }
    if (lsa_n && *lsa_n == 0) throw DataError("lsa_n must be positive");
    if (algorithm.kind == Algorithm::kmeans_pp) {
        algorithm.kmeans.validate();
    } else {
        algorithm.maximin.validate();
    }
}

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw DataError("pipeline config must be a JSON object");
    PipelineConfig c;
    c.subset = parse_field_subset(get_or<std::string>(j, "subset", std::string(to_string(c.subset))));
    c.scheme = parse_weight_scheme(get_or<std::string>(j, "scheme", std::string(to_string(c.scheme))));

    if (auto it = j.find("selector"); it != j.end()) {
        const auto kind = get_or<std::string>(*it, "kind", "vcgs");
        if (kind == "vcgs") {
            c.selector.kind = SelectorConfig::Kind::vcgs;
            c.selector.vcgs.rank_threshold = get_or<std::size_t>(*it, "R", c.selector.vcgs.rank_threshold);
            c.selector.vcgs.percent_threshold = get_or<double>(*it, "P", c.selector.vcgs.percent_threshold);
        } else if (kind == "df") {
            c.selector.kind = SelectorConfig::Kind::df;
            c.selector.df.tau_df = get_or<std::size_t>(*it, "tau_df", c.selector.df.tau_df);
        } else {
            throw DataError("unknown selector kind '" + kind + "'");
        }
    }

    if (auto it = j.find("lsa_n"); it != j.end()) {
        if (it->is_null()) {
            c.lsa_n.reset();
        } else {
            c.lsa_n = get_or<std::size_t>(j, "lsa_n", 0);
        }
    }

    if (auto it = j.find("algorithm"); it != j.end()) {
        const auto kind = get_or<std::string>(*it, "kind", "kmeans");
        if (kind == "kmeans" || kind == "kmeans_pp") {
            c.algorithm.kind = Algorithm::kmeans_pp;
            auto& k = c.algorithm.kmeans;
            k.k = get_or<std::size_t>(*it, "k", k.k);
            k.max_iterations = get_or<std::size_t>(*it, "max_iterations", k.max_iterations);
            k.tolerance = get_or<double>(*it, "tolerance", k.tolerance);
            k.restarts = get_or<std::size_t>(*it, "restarts", k.restarts);
        } else if (kind == "maximin") {
            c.algorithm.kind = Algorithm::maximin;
            c.algorithm.maximin.theta = get_or<double>(*it, "theta", c.algorithm.maximin.theta);
        } else {
            throw DataError("unknown algorithm kind '" + kind + "'");
        }
    }

    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (auto it = j.find("metrics"); it != j.end()) {
        c.metrics.normalizer = parse_ami_normalizer(get_or<std::string>(*it, "ami_normalizer", "arithmetic"));
        c.metrics.silhouette = parse_silhouette_variant(get_or<std::string>(*it, "silhouette", "pooled"));
    }
    c.validate();
    return c;
}

json to_json(const PipelineConfig& c) {
    json j;
    j["subset"] = std::string(to_string(c.subset));
    j["scheme"] = std::string(to_string(c.scheme));
    if (c.selector.kind == SelectorConfig::Kind::vcgs) {
        j["selector"] = {{"kind", "vcgs"},
                         {"R", c.selector.vcgs.rank_threshold},
                         {"P", c.selector.vcgs.percent_threshold}};
    } else {
        j["selector"] = {{"kind", "df"}, {"tau_df", c.selector.df.tau_df}};
    }
    j["lsa_n"] = c.lsa_n ? json(*c.lsa_n) : json(nullptr);
    if (c.algorithm.kind == Algorithm::kmeans_pp) {
        const auto& k = c.algorithm.kmeans;
        j["algorithm"] = {{"kind", "kmeans"},
                          {"k", k.k},
                          {"max_iterations", k.max_iterations},
                          {"tolerance", k.tolerance},
                          {"restarts", k.restarts}};
    } else {
        j["algorithm"] = {{"kind", "maximin"}, {"theta", c.algorithm.maximin.theta}};
    }
    j["seed"] = c.seed;
    j["metrics"] = {{"ami_normalizer", std::string(to_string(c.metrics.normalizer))},
                    {"silhouette", std::string(to_string(c.metrics.silhouette))}};
    return j;
}

std::string canonical(const PipelineConfig& c, bool with_seed) {
    std::map<std::string, std::string> kv;
    kv["subset"] = to_string(c.subset);
    kv["scheme"] = to_string(c.scheme);
    if (c.selector.kind == SelectorConfig::Kind::vcgs) {
        kv["selector"] = "vcgs";
        kv["selector.R"] = std::to_string(c.selector.vcgs.rank_threshold);
        kv["selector.P"] = shortest(c.selector.vcgs.percent_threshold);
    } else {
        kv["selector"] = "df";
        kv["selector.tau_df"] = std::to_string(c.selector.df.tau_df);
    }
    kv["lsa_n"] = c.lsa_n ? std::to_string(*c.lsa_n) : "none";
    if (c.algorithm.kind == Algorithm::kmeans_pp) {
        const auto& k = c.algorithm.kmeans;
        kv["algorithm"] = "kmeans";
        kv["algorithm.k"] = std::to_string(k.k);
        kv["algorithm.max_iterations"] = std::to_string(k.max_iterations);
        kv["algorithm.tolerance"] = shortest(k.tolerance);
        kv["algorithm.restarts"] = std::to_string(k.restarts);
    } else {
        kv["algorithm"] = "maximin";
        kv["algorithm.theta"] = shortest(c.algorithm.maximin.theta);
    }
    kv["metrics.ami_normalizer"] = to_string(c.metrics.normalizer);
    kv["metrics.silhouette"] = to_string(c.metrics.silhouette);
    if (with_seed) kv["seed"] = std::to_string(c.seed);

    std::string out;
    for (const auto& [k, v] : kv) {
        if (!out.empty()) out.push_back(';');
        out += k + "=" + v;
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base_seed, const PipelineConfig& config) {
    // splitmix64 finaliser over the combined value
    std::uint64_t z = base_seed ^ fnv1a64(canonical(config, false));
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return (z ^ (z >> 31)) >> 1;  // keep it representable as a signed JSON integer
}

TermDocMatrix vectorize(const Corpus& corpus, FieldSubset subset, WeightScheme scheme,
                        const StopwordSet& stopwords) {
    std::vector<Tokens> tokens;
    std::vector<std::string> ids;
    stage("tokenize", [&] {
        tokens.reserve(corpus.size());
        for (const auto& r : corpus.records()) {
            tokens.push_back(tokenize(compose_text(r, subset), stopwords));
            ids.push_back(r.id);
        }
        return 0;
    });
    auto vocab = stage("vocabulary", [&] { return std::make_shared<const Vocabulary>(build_vocabulary(tokens)); });
    return stage("weight", [&] { return weight_matrix(tokens, vocab, scheme, std::move(ids)); });
}

PipelineOutput cluster_matrix(const TermDocMatrix& full, const PipelineConfig& config) {
    stage("config", [&] {
        config.validate();
        return 0;
    });

    PipelineOutput out;
    const auto subset = stage("select", [&] {
        return config.selector.kind == SelectorConfig::Kind::vcgs ? vcgs_select(full, config.selector.vcgs)
                                                                  : df_select(*full.vocab, config.selector.df);
    });
    out.matrix = stage("restrict", [&] { return restrict(full, subset); });
    out.zero_rows = zero_rows(out.matrix).size();

    if (config.lsa_n) {
        out.factors = stage("lsa", [&] {
            SvdOptions options;
            options.seed = config.seed;
            return truncated_svd(out.matrix, *config.lsa_n, options);
        });
        out.points = project_documents(*out.factors).values;
    } else {
        out.points = Eigen::MatrixXd(out.matrix.weights);
    }

    out.clustering = stage("cluster", [&] {
        if (config.algorithm.kind == Algorithm::kmeans_pp) {
            KmeansParams p = config.algorithm.kmeans;
            p.seed = config.seed;
            return kmeans_pp(out.points, p);
        }
        MaximinParams p = config.algorithm.maximin;
        p.seed = config.seed;
        return maximin(out.points, p);
    });
    return out;
}

PipelineOutput run_pipeline(const Corpus& corpus, const PipelineConfig& config, const StopwordSet& stopwords) {
    return cluster_matrix(vectorize(corpus, config.subset, config.scheme, stopwords), config);
}

}  // namespace scattermesh

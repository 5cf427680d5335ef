#include "scattermesh/session.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "scattermesh/metrics.hpp"

namespace scattermesh {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct ScatterService::CorpusEntry {
    std::string id;
    std::optional<fs::path> path;
    std::optional<fs::path> truth_path;
    Corpus corpus;
    std::optional<std::map<std::string, std::string>> truth;
};

struct ScatterService::Session {
    struct View {
        std::shared_ptr<const ScatterState> current;
        std::vector<std::shared_ptr<const ScatterState>> history;
        std::uint64_t next_generation = 1;
        std::uint64_t scatters = 1;  // seeds used so far: config.seed + scatters is next
    };

    std::string id;
    std::string corpus_id;
    PipelineConfig config;
    std::mutex writer;  // one mutation at a time
    mutable std::mutex view_mutex;
    std::shared_ptr<const View> view;

    std::shared_ptr<const View> snapshot() const {
        std::lock_guard lock(view_mutex);
        return view;
    }
    void publish(std::shared_ptr<const View> next) {
        std::lock_guard lock(view_mutex);
        view = std::move(next);
    }
};

namespace {

std::string card_id(std::uint64_t generation, std::size_t index) {
    return "g" + std::to_string(generation) + "-c" + std::to_string(index);
}

// Parses "g<gen>-c<idx>"; false when malformed.
bool parse_card_id(const std::string& id, std::uint64_t& generation, std::size_t& index) {
    if (id.size() < 5 || id[0] != 'g') return false;
    const auto dash = id.find("-c");
    if (dash == std::string::npos || dash == 1 || dash + 2 >= id.size()) return false;
    try {
        std::size_t used = 0;
        generation = std::stoull(id.substr(1, dash - 1), &used);
        if (used != dash - 1) return false;
        index = std::stoull(id.substr(dash + 2), &used);
        return used == id.size() - dash - 2;
    } catch (const std::exception&) {
        return false;
    }
}

std::vector<Descriptor> single_document_descriptors(const DocumentRecord& record, FieldSubset subset,
                                                    std::size_t top_k) {
    const auto tokens = tokenize(compose_text(record, subset), default_stopwords());
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : tokens) {
        if (counts[t]++ == 0) order.push_back(t);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](const std::string& a, const std::string& b) { return counts[a] > counts[b]; });
    std::vector<Descriptor> out;
    for (std::size_t i = 0; i < order.size() && i < top_k; ++i) {
        out.push_back({order[i], static_cast<double>(counts[order[i]])});
    }
    return out;
}

void write_json_file(const fs::path& path, const json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write snapshot '" + tmp.string() + "'");
        out << j.dump(1) << '\n';
    }
    fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

}  // namespace

json to_json(const ScatterState& s) {
    json clusters = json::array();
    for (const auto& c : s.clusters) {
        json d = json::array();
        for (const auto& t : c.descriptors) d.push_back({{"term", t.term}, {"weight", t.weight}});
        clusters.push_back({{"id", c.id}, {"descriptors", d}, {"members", c.members}});
    }
    json projection = json::array();
    for (const auto& p : s.projection) {
        projection.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}, {"cluster", p.cluster}, {"class", p.truth}});
    }
    return {{"generation", s.generation},
            {"seed", s.seed},
            {"k", s.k},
            {"active", s.active},
            {"clusters", clusters},
            {"metrics", s.metrics ? *s.metrics : json(nullptr)},
            {"projection", projection}};
}

ScatterState scatter_state_from_json(const json& j) {
    ScatterState s;
    s.generation = j.at("generation").get<std::uint64_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.k = j.at("k").get<std::size_t>();
    s.active = j.at("active").get<std::vector<std::string>>();
    for (const auto& c : j.at("clusters")) {
        ClusterCard card;
        card.id = c.at("id").get<std::string>();
        card.members = c.at("members").get<std::vector<std::string>>();
        for (const auto& d : c.at("descriptors")) {
            card.descriptors.push_back({d.at("term").get<std::string>(), d.at("weight").get<double>()});
        }
        s.clusters.push_back(std::move(card));
    }
    if (!j.at("metrics").is_null()) s.metrics = j["metrics"];
    for (const auto& p : j.at("projection")) {
        s.projection.push_back({p.at("id").get<std::string>(), p.at("x").get<double>(), p.at("y").get<double>(),
                                p.at("cluster").get<std::size_t>(), p.at("class").get<std::string>()});
    }
    return s;
}

ScatterService::ScatterService(ServiceOptions options) : options_(std::move(options)) {
    if (options_.state_dir) {
        fs::create_directories(*options_.state_dir / "sessions");
        restore();
    }
}

ScatterService::~ScatterService() = default;

std::string ScatterService::register_corpus(const std::string& path, const std::optional<std::string>& truth_path) {
    auto resolve = [&](const std::string& p) {
        const fs::path root = fs::weakly_canonical(options_.corpus_dir);
        const fs::path full = fs::weakly_canonical(root / p);
        const auto rel = full.lexically_relative(root);
        if (rel.empty() || *rel.begin() == "..") {
            throw ServiceError(400, "path '" + p + "' is outside the corpus directory");
        }
        if (!fs::exists(full)) throw ServiceError(404, "no such corpus file '" + p + "'");
        return full;
    };

    const fs::path corpus_path = resolve(path);
    std::optional<fs::path> truth_file;
    if (truth_path) truth_file = resolve(*truth_path);

    {
        std::shared_lock lock(registry_mutex_);
        for (const auto& [id, entry] : corpora_) {
            if (entry->path == corpus_path && entry->truth_path == truth_file) return id;
        }
    }

    auto entry = std::make_shared<CorpusEntry>();
    try {
        entry->corpus = load_corpus(corpus_path).corpus;
        if (truth_file) entry->truth = load_truth_csv(*truth_file);
    } catch (const DataError& e) {
        throw ServiceError(422, e.what());
    }
    if (entry->corpus.empty()) throw ServiceError(422, "corpus '" + path + "' holds no records");
    entry->path = corpus_path;
    entry->truth_path = truth_file;

    std::unique_lock lock(registry_mutex_);
    entry->id = "c" + std::to_string(next_corpus_++);
    corpora_[entry->id] = entry;
    persist_corpora();
    return entry->id;
}

std::string ScatterService::register_corpus(Corpus corpus, std::optional<std::map<std::string, std::string>> truth) {
    if (corpus.empty()) throw ServiceError(422, "corpus holds no records");
    auto entry = std::make_shared<CorpusEntry>();
    entry->corpus = std::move(corpus);
    entry->truth = std::move(truth);
    std::unique_lock lock(registry_mutex_);
    entry->id = "c" + std::to_string(next_corpus_++);
    corpora_[entry->id] = entry;
    return entry->id;
}

std::shared_ptr<const ScatterService::CorpusEntry> ScatterService::corpus_entry(const std::string& corpus_id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = corpora_.find(corpus_id);
    if (it == corpora_.end()) throw ServiceError(404, "unknown corpus '" + corpus_id + "'");
    return it->second;
}

std::shared_ptr<ScatterService::Session> ScatterService::session(const std::string& session_id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + session_id + "'");
    return it->second;
}

ScatterState ScatterService::scatter(const CorpusEntry& entry, const PipelineConfig& base,
                                     std::vector<std::string> active, std::size_t k, std::uint64_t generation,
                                     std::uint64_t seed) const {
    ScatterState s;
    s.generation = generation;
    s.seed = seed;
    s.active = std::move(active);

    const Corpus subset = entry.corpus.subset(s.active);
    if (subset.size() == 1) {
        s.k = 1;
        ClusterCard card;
        card.id = card_id(generation, 0);
        card.members = s.active;
        card.descriptors = single_document_descriptors(subset.records()[0], base.subset, options_.descriptors);
        s.clusters.push_back(std::move(card));
        s.projection.push_back({s.active[0], 0.0, 0.0, 0, {}});
        return s;
    }

    PipelineConfig config = base;
    config.seed = seed;
    config.algorithm.kmeans.k = std::min(k, subset.size());
    PipelineOutput out;
    try {
        out = run_pipeline(subset, config);
    } catch (const DataError& e) {
        throw ServiceError(422, std::string("re-clustering failed: ") + e.what());
    }

    const auto& clustering = out.clustering;
    s.k = clustering.k;
    const auto descriptors = cluster_descriptors(clustering, out.factors ? &*out.factors : nullptr,
                                                 *out.matrix.vocab, options_.descriptors);
    const auto members = clustering.members();
    for (std::size_t c = 0; c < clustering.k; ++c) {
        ClusterCard card;
        card.id = card_id(generation, c);
        card.descriptors = descriptors[c].terms;
        for (auto i : members[c]) card.members.push_back(subset.records()[i].id);
        s.clusters.push_back(std::move(card));
    }

    std::optional<std::vector<std::string>> truth;
    if (entry.truth) {
        std::vector<std::string> labels;
        for (const auto& r : subset.records()) {
            auto it = entry.truth->find(r.id);
            if (it == entry.truth->end()) break;
            labels.push_back(it->second);
        }
        if (labels.size() == subset.size()) truth = std::move(labels);
    }
    if (truth) {
        const auto table = contingency(clustering.assignments, *truth);
        s.metrics = to_json(evaluate(out.points, clustering.assignments, table, config.metrics));
    }
    s.projection = plot_projection(out.matrix, clustering, truth ? &*truth : nullptr);
    return s;
}

json ScatterService::render(const Session& session) const {
    const auto view = session.snapshot();
    const auto entry = corpus_entry(session.corpus_id);
    const auto& s = *view->current;

    json clusters = json::array();
    for (const auto& c : s.clusters) {
        json descriptors = json::array();
        for (const auto& d : c.descriptors) descriptors.push_back({{"term", d.term}, {"weight", d.weight}});
        json samples = json::array();
        for (std::size_t i = 0; i < c.members.size() && i < options_.samples; ++i) {
            const auto* r = entry->corpus.find(c.members[i]);
            samples.push_back({{"id", c.members[i]}, {"title", r ? r->title : std::string{}}});
        }
        clusters.push_back({{"id", c.id}, {"size", c.members.size()}, {"descriptors", descriptors},
                            {"samples", samples}});
    }
    return {{"session_id", session.id},
            {"corpus_id", session.corpus_id},
            {"generation", s.generation},
            {"k", s.k},
            {"active_size", s.active.size()},
            {"clusters", clusters},
            {"metrics", s.metrics ? *s.metrics : json(nullptr)},
            {"history_depth", view->history.size()}};
}

json ScatterService::create_session(const std::string& corpus_id, const PipelineConfig& config) {
    const auto entry = corpus_entry(corpus_id);
    try {
        config.validate();
    } catch (const DataError& e) {
        throw ServiceError(400, e.what());
    }
    std::vector<std::string> ids;
    for (const auto& r : entry->corpus.records()) ids.push_back(r.id);

    auto session = std::make_shared<Session>();
    session->corpus_id = corpus_id;
    session->config = config;
    auto view = std::make_shared<Session::View>();
    view->current = std::make_shared<const ScatterState>(
        scatter(*entry, config, std::move(ids), config.algorithm.kmeans.k, 0, config.seed));
    session->view = std::move(view);

    {
        std::unique_lock lock(registry_mutex_);
        session->id = "s" + std::to_string(next_session_++);
        sessions_[session->id] = session;
    }
    persist(*session);
    return render(*session);
}

json ScatterService::state(const std::string& session_id) const { return render(*session(session_id)); }

std::shared_ptr<const ScatterState> ScatterService::current(const std::string& session_id) const {
    return session(session_id)->snapshot()->current;
}

json ScatterService::gather(const std::string& session_id, const std::vector<std::string>& cluster_ids,
                            std::optional<std::size_t> k) {
    auto s = session(session_id);
    std::lock_guard writer(s->writer);
    const auto view = s->snapshot();
    const auto& cur = *view->current;

    if (cluster_ids.empty()) throw ServiceError(400, "select at least one cluster");
    if (k && *k == 0) throw ServiceError(400, "k must be positive");
    std::unordered_set<std::size_t> chosen;
    for (const auto& id : cluster_ids) {
        std::uint64_t generation = 0;
        std::size_t index = 0;
        if (!parse_card_id(id, generation, index)) throw ServiceError(400, "malformed cluster id '" + id + "'");
        if (generation != cur.generation) {
            throw ServiceError(409, "cluster '" + id + "' is from generation " + std::to_string(generation) +
                                        "; the current generation is " + std::to_string(cur.generation));
        }
        if (index >= cur.clusters.size()) throw ServiceError(400, "no cluster '" + id + "' in this generation");
        chosen.insert(index);
    }

    std::unordered_set<std::string> members;
    for (auto c : chosen) members.insert(cur.clusters[c].members.begin(), cur.clusters[c].members.end());
    std::vector<std::string> active;
    for (const auto& id : cur.active) {
        if (members.count(id)) active.push_back(id);
    }

    const auto entry = corpus_entry(s->corpus_id);
    const std::size_t want = k.value_or(std::min<std::size_t>(4, active.size()));
    auto next = std::make_shared<Session::View>(*view);
    next->current = std::make_shared<const ScatterState>(
        scatter(*entry, s->config, std::move(active), want, view->next_generation, s->config.seed + view->scatters));
    next->history.push_back(view->current);
    ++next->next_generation;
    ++next->scatters;
    s->publish(std::move(next));
    persist(*s);
    return render(*s);
}

json ScatterService::back(const std::string& session_id) {
    auto s = session(session_id);
    std::lock_guard writer(s->writer);
    const auto view = s->snapshot();
    if (view->history.empty()) throw ServiceError(409, "no earlier scatter to go back to");
    auto next = std::make_shared<Session::View>(*view);
    next->current = next->history.back();
    next->history.pop_back();
    s->publish(std::move(next));
    persist(*s);
    return render(*s);
}

json ScatterService::document(const std::string& session_id, const std::string& doc_id) const {
    const auto s = session(session_id);
    const auto entry = corpus_entry(s->corpus_id);
    const auto* r = entry->corpus.find(doc_id);
    if (!r) throw ServiceError(404, "unknown document '" + doc_id + "'");

    json cluster = nullptr;
    for (const auto& c : s->snapshot()->current->clusters) {
        if (std::find(c.members.begin(), c.members.end(), doc_id) != c.members.end()) {
            cluster = c.id;
            break;
        }
    }
    json cls = nullptr;
    if (entry->truth) {
        if (auto it = entry->truth->find(doc_id); it != entry->truth->end()) cls = it->second;
    }
    return {{"id", r->id},
            {"title", r->title},
            {"abstract", r->abstract_text ? json(*r->abstract_text) : json(nullptr)},
            {"body", r->body ? json(*r->body) : json(nullptr)},
            {"class", cls},
            {"cluster", cluster}};
}

json ScatterService::projection(const std::string& session_id) const {
    const auto state = current(session_id);
    json points = json::array();
    for (const auto& p : state->projection) {
        points.push_back({{"id", p.id},
                          {"x", p.x},
                          {"y", p.y},
                          {"cluster", card_id(state->generation, p.cluster)},
                          {"class", p.truth.empty() ? json(nullptr) : json(p.truth)}});
    }
    return {{"generation", state->generation}, {"points", points}};
}

void ScatterService::persist_corpora() const {
    if (!options_.state_dir) return;
    json list = json::array();
    for (const auto& [id, entry] : corpora_) {
        if (!entry->path) continue;
        list.push_back({{"corpus_id", id},
                        {"path", entry->path->string()},
                        {"truth", entry->truth_path ? json(entry->truth_path->string()) : json(nullptr)}});
    }
    write_json_file(*options_.state_dir / "corpora.json", list);
}

void ScatterService::persist(const Session& s) const {
    if (!options_.state_dir) return;
    const auto view = s.snapshot();
    json history = json::array();
    for (const auto& h : view->history) history.push_back(to_json(*h));
    const json j = {{"session_id", s.id},
                    {"corpus_id", s.corpus_id},
                    {"config", to_json(s.config)},
                    {"next_generation", view->next_generation},
                    {"scatters", view->scatters},
                    {"current", to_json(*view->current)},
                    {"history", history}};
    write_json_file(*options_.state_dir / "sessions" / (s.id + ".json"), j);
}

void ScatterService::restore() {
    const fs::path registry = *options_.state_dir / "corpora.json";
    auto number = [](const std::string& id) -> std::uint64_t {
        try {
            return std::stoull(id.substr(1));
        } catch (const std::exception&) {
            return 0;
        }
    };
    if (fs::exists(registry)) {
        for (const auto& c : read_json_file(registry)) {
            auto entry = std::make_shared<CorpusEntry>();
            entry->id = c.at("corpus_id").get<std::string>();
            entry->path = fs::path(c.at("path").get<std::string>());
            entry->corpus = load_corpus(*entry->path).corpus;
            if (!c.at("truth").is_null()) {
                entry->truth_path = fs::path(c["truth"].get<std::string>());
                entry->truth = load_truth_csv(*entry->truth_path);
            }
            next_corpus_ = std::max(next_corpus_, number(entry->id) + 1);
            corpora_[entry->id] = std::move(entry);
        }
    }
    for (const auto& file : fs::directory_iterator(*options_.state_dir / "sessions")) {
        if (file.path().extension() != ".json") continue;
        const json j = read_json_file(file.path());
        auto s = std::make_shared<Session>();
        s->id = j.at("session_id").get<std::string>();
        s->corpus_id = j.at("corpus_id").get<std::string>();
        if (!corpora_.count(s->corpus_id)) continue;
        s->config = config_from_json(j.at("config"));
        auto view = std::make_shared<Session::View>();
        view->next_generation = j.at("next_generation").get<std::uint64_t>();
        view->scatters = j.at("scatters").get<std::uint64_t>();
        view->current = std::make_shared<const ScatterState>(scatter_state_from_json(j.at("current")));
        for (const auto& h : j.at("history")) {
            view->history.push_back(std::make_shared<const ScatterState>(scatter_state_from_json(h)));
        }
        s->view = std::move(view);
        next_session_ = std::max(next_session_, number(s->id) + 1);
        sessions_[s->id] = std::move(s);
    }
}

}  // namespace scattermesh

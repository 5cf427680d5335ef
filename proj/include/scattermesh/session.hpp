#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "scattermesh/corpus.hpp"
#include "scattermesh/descriptors.hpp"
#include "scattermesh/error.hpp"
#include "scattermesh/pipeline.hpp"

namespace scattermesh {

// Error with the HTTP status the service should answer with.
class ServiceError : public DataError {
public:
    ServiceError(int status, const std::string& what) : DataError(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct ClusterCard {
    std::string id;  // "g<generation>-c<index>"
    std::vector<Descriptor> descriptors;
    std::vector<std::string> members;  // corpus order
};

// One scatter: the active documents and how they were clustered.
struct ScatterState {
    std::uint64_t generation = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::vector<std::string> active;  // corpus order
    std::vector<ClusterCard> clusters;
    std::optional<nlohmann::json> metrics;
    std::vector<ProjectionPoint> projection;
};

struct ServiceOptions {
    std::filesystem::path corpus_dir;
    std::optional<std::filesystem::path> state_dir;  // JSON snapshots; none keeps state in memory only
    std::size_t descriptors = 10;
    std::size_t samples = 5;
};

class ScatterService {
public:
    explicit ScatterService(ServiceOptions options);
    ~ScatterService();

    ScatterService(const ScatterService&) = delete;
    ScatterService& operator=(const ScatterService&) = delete;

    // Loads a corpus (and optional truth sidecar) from under corpus_dir.
    std::string register_corpus(const std::string& path, const std::optional<std::string>& truth_path = {});
    // Registers an in-memory corpus; used by tests and embedding callers.
    std::string register_corpus(Corpus corpus, std::optional<std::map<std::string, std::string>> truth = {});

    nlohmann::json create_session(const std::string& corpus_id, const PipelineConfig& config);
    nlohmann::json state(const std::string& session_id) const;
    nlohmann::json gather(const std::string& session_id, const std::vector<std::string>& cluster_ids,
                          std::optional<std::size_t> k = {});
    nlohmann::json back(const std::string& session_id);
    nlohmann::json document(const std::string& session_id, const std::string& doc_id) const;
    nlohmann::json projection(const std::string& session_id) const;

    // Current scatter of a session; the pointer is an immutable snapshot.
    std::shared_ptr<const ScatterState> current(const std::string& session_id) const;

private:
    struct CorpusEntry;
    struct Session;

    std::shared_ptr<const CorpusEntry> corpus_entry(const std::string& corpus_id) const;
    std::shared_ptr<Session> session(const std::string& session_id) const;
    ScatterState scatter(const CorpusEntry& corpus, const PipelineConfig& config, std::vector<std::string> active,
                         std::size_t k, std::uint64_t generation, std::uint64_t seed) const;
    nlohmann::json render(const Session& s) const;
    void persist_corpora() const;
    void persist(const Session& s) const;
    void restore();

    ServiceOptions options_;
    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<const CorpusEntry>> corpora_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_corpus_ = 1;
    std::uint64_t next_session_ = 1;
};

nlohmann::json to_json(const ScatterState& state);
ScatterState scatter_state_from_json(const nlohmann::json& j);

}  // namespace scattermesh

#include "scattermesh/server.hpp"

#include <iostream>

namespace scattermesh {

namespace {

using json = nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw ServiceError(400, "request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ServiceError(400, std::string("malformed JSON body: ") + e.what());
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ServiceError& e) {
            reply(res, e.status(), {{"error", e.what()}});
        } catch (const json::exception& e) {
            reply(res, 400, {{"error", std::string("bad request: ") + e.what()}});
        } catch (const DataError& e) {
            reply(res, 422, {{"error", e.what()}});
        } catch (const std::exception& e) {
            std::cerr << "internal error: " << e.what() << '\n';
            reply(res, 500, {{"error", "internal error"}});
        }
    };
}

std::string require_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
        throw ServiceError(400, std::string("'") + key + "' must be a non-empty string");
    }
    return it->get<std::string>();
}

}  // namespace

void mount_routes(httplib::Server& server, ScatterService& service,
                  const std::optional<std::filesystem::path>& ui_dir) {
    server.Post("/api/corpora", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        std::optional<std::string> truth;
        if (auto it = body.find("truth"); it != body.end() && !it->is_null()) truth = it->get<std::string>();
        reply(res, 201, {{"corpus_id", service.register_corpus(require_string(body, "path"), truth)}});
    }));

    server.Post("/api/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        PipelineConfig config;
        if (auto it = body.find("config"); it != body.end() && !it->is_null()) {
            try {
                config = config_from_json(*it);
            } catch (const DataError& e) {
                throw ServiceError(400, e.what());
            }
        }
        reply(res, 201, service.create_session(require_string(body, "corpus_id"), config));
    }));

    server.Get(R"(/api/sessions/([^/]+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, service.state(req.matches[1]));
    }));

    server.Post(R"(/api/sessions/([^/]+)/gather)",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    auto it = body.find("clusters");
                    if (it == body.end() || !it->is_array()) throw ServiceError(400, "'clusters' must be an array");
                    std::vector<std::string> ids;
                    for (const auto& id : *it) {
                        if (!id.is_string()) throw ServiceError(400, "cluster ids must be strings");
                        ids.push_back(id.get<std::string>());
                    }
                    std::optional<std::size_t> k;
                    if (auto kt = body.find("k"); kt != body.end() && !kt->is_null()) {
                        if (!kt->is_number_unsigned()) throw ServiceError(400, "'k' must be a positive integer");
                        k = kt->get<std::size_t>();
                    }
                    reply(res, 200, service.gather(req.matches[1], ids, k));
                }));

    server.Post(R"(/api/sessions/([^/]+)/back)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, service.back(req.matches[1]));
    }));

    server.Get(R"(/api/sessions/([^/]+)/documents/([^/]+))",
               guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   reply(res, 200, service.document(req.matches[1], req.matches[2]));
               }));

    server.Get(R"(/api/sessions/([^/]+)/projection)",
               guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   reply(res, 200, service.projection(req.matches[1]));
               }));

    if (ui_dir) {
        if (!server.set_mount_point("/ui", ui_dir->string())) {
            throw DataError("ui directory '" + ui_dir->string() + "' does not exist");
        }
    }
}

}  // namespace scattermesh

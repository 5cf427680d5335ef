#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "planted.hpp"
#include "scattermesh/session.hpp"
#include "tempdir.hpp"

using namespace scattermesh;
using json = nlohmann::json;

namespace {

PipelineConfig service_config() {
    PipelineConfig c;
    c.selector.vcgs = {10, 1.0};
    c.lsa_n = 4;
    c.algorithm.kmeans.k = 4;
    c.algorithm.kmeans.restarts = 3;
    return c;
}

int status_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ServiceError& e) {
        return e.status();
    }
    return 0;
}

std::vector<std::string> card_ids(const json& state) {
    std::vector<std::string> ids;
    for (const auto& c : state["clusters"]) ids.push_back(c["id"]);
    return ids;
}

}  // namespace

TEST_CASE("session lifecycle: create, gather, back") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 80});
    const auto corpus_id = svc.register_corpus(ds.corpus, ds.truth);

    const auto first = svc.create_session(corpus_id, service_config());
    const std::string sid = first["session_id"];
    CHECK(first["generation"] == 0);
    CHECK(first["k"] == 4);
    CHECK(first["active_size"] == 80);
    CHECK(first["history_depth"] == 0);
    REQUIRE(first["clusters"].size() == 4);
    std::size_t total = 0;
    for (const auto& c : first["clusters"]) {
        total += c["size"].get<std::size_t>();
        CHECK(c["descriptors"].size() == 10);
        CHECK(c["descriptors"][0]["term"].get<std::string>().rfind("topic", 0) == 0);
        CHECK(c["samples"].size() <= 5);
    }
    CHECK(total == 80);
    CHECK(first["metrics"]["ami"].get<double>() > 0.9);

    const auto ids = card_ids(first);
    CHECK(ids[0] == "g0-c0");
    const auto gathered = svc.gather(sid, {ids[0], ids[1]});
    const std::size_t expected = first["clusters"][0]["size"].get<std::size_t>() +
                                 first["clusters"][1]["size"].get<std::size_t>();
    CHECK(gathered["active_size"] == expected);
    CHECK(gathered["generation"] == 1);
    CHECK(gathered["history_depth"] == 1);
    CHECK(gathered["k"] == std::min<std::size_t>(4, expected));

    // stale cards are refused with the generation named
    try {
        svc.gather(sid, {ids[0]});
        FAIL("stale card accepted");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 409);
        CHECK(std::string(e.what()).find("generation 0") != std::string::npos);
    }

    const auto restored = svc.back(sid);
    CHECK(restored.dump() == first.dump());
    CHECK(status_of([&] { svc.back(sid); }) == 409);

    // a new gather after back gets a fresh generation number
    const auto again = svc.gather(sid, {ids[2]}, 2);
    CHECK(again["generation"] == 2);
    CHECK(again["k"] == 2);
    CHECK(card_ids(again)[0] == "g2-c0");
}

TEST_CASE("gather validation leaves state unchanged") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 40});
    const auto sid = svc.create_session(svc.register_corpus(ds.corpus), service_config())["session_id"].get<std::string>();
    const auto before = svc.state(sid).dump();

    CHECK(status_of([&] { svc.gather(sid, {}); }) == 400);
    CHECK(status_of([&] { svc.gather(sid, {"nonsense"}); }) == 400);
    CHECK(status_of([&] { svc.gather(sid, {"g0-c99"}); }) == 400);
    CHECK(status_of([&] { svc.gather(sid, {"g0-c0"}, 0); }) == 400);
    CHECK(status_of([&] { svc.gather("s999", {"g0-c0"}); }) == 404);
    CHECK(svc.state(sid).dump() == before);
    CHECK(svc.state(sid)["metrics"].is_null());
}

TEST_CASE("single-document scatter") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 40});
    const auto sid = svc.create_session(svc.register_corpus(ds.corpus), service_config())["session_id"].get<std::string>();
    const auto state = svc.state(sid);
    CHECK(state["clusters"].size() == 4);
    // gather down until one document remains
    auto current = svc.current(sid);
    const auto smallest = std::min_element(current->clusters.begin(), current->clusters.end(),
                                           [](const auto& a, const auto& b) { return a.members.size() < b.members.size(); });
    auto next = svc.gather(sid, {smallest->id});
    while (next["active_size"].get<std::size_t>() > 1) {
        const auto cur = svc.current(sid);
        const auto small = std::min_element(cur->clusters.begin(), cur->clusters.end(),
                                            [](const auto& a, const auto& b) { return a.members.size() < b.members.size(); });
        next = svc.gather(sid, {small->id});
    }
    CHECK(next["clusters"].size() == 1);
    CHECK(next["k"] == 1);
    CHECK_FALSE(next["clusters"][0]["descriptors"].empty());
    const auto proj = svc.projection(sid);
    REQUIRE(proj["points"].size() == 1);
    CHECK(proj["points"][0]["x"] == 0.0);
}

TEST_CASE("document lookup") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 40});
    const auto sid =
        svc.create_session(svc.register_corpus(ds.corpus, ds.truth), service_config())["session_id"].get<std::string>();
    const auto doc = svc.document(sid, "doc3");
    CHECK(doc["id"] == "doc3");
    CHECK(doc["class"] == "topic3");
    CHECK(doc["cluster"].is_string());
    CHECK_FALSE(doc["abstract"].get<std::string>().empty());
    CHECK(status_of([&] { svc.document(sid, "nope"); }) == 404);

    const auto cur = svc.current(sid);
    svc.gather(sid, {cur->clusters[0].id});
    const auto& members = svc.current(sid)->active;
    std::string outside;
    for (const auto& r : ds.corpus.records()) {
        if (std::find(members.begin(), members.end(), r.id) == members.end()) {
            outside = r.id;
            break;
        }
    }
    REQUIRE_FALSE(outside.empty());
    CHECK(svc.document(sid, outside)["cluster"].is_null());

    const auto proj = svc.projection(sid);
    CHECK(proj["points"].size() == members.size());
    CHECK(proj["generation"] == 1);
}

TEST_CASE("corpus registration from files") {
    TempDir dir;
    dir.write("docs.jsonl",
              R"({"id":"a","title":"alpha beta","abstract":"gamma delta"})"
              "\n"
              R"({"id":"b","title":"beta gamma","abstract":"delta epsilon"})"
              "\n"
              R"({"id":"c","title":"zeta eta","abstract":"theta iota"})"
              "\n");
    dir.write("truth.csv", "id,class\na,x\nb,x\nc,y\n");
    dir.write("empty.jsonl", "");
    ScatterService svc({.corpus_dir = dir.path()});
    const auto id = svc.register_corpus("docs.jsonl", std::string("truth.csv"));
    CHECK(svc.register_corpus("docs.jsonl", std::string("truth.csv")) == id);
    CHECK(status_of([&] { svc.register_corpus("../etc/passwd"); }) == 400);
    CHECK(status_of([&] { svc.register_corpus("missing.jsonl"); }) == 404);
    CHECK(status_of([&] { svc.register_corpus("empty.jsonl"); }) == 422);
    CHECK(status_of([&] { svc.create_session("c404", service_config()); }) == 404);

    auto bad = service_config();
    bad.lsa_n = 0;
    CHECK(status_of([&] { svc.create_session(id, bad); }) == 400);
}

TEST_CASE("sessions survive a restart") {
    TempDir dir;
    const auto ds = planted::make({.docs = 40});
    save_corpus_jsonl(ds.corpus, dir / "docs.jsonl");
    const auto state_dir = dir / "state";
    std::string sid;
    json snapshot;
    {
        ScatterService svc({.corpus_dir = dir.path(), .state_dir = state_dir});
        const auto cid = svc.register_corpus("docs.jsonl");
        sid = svc.create_session(cid, service_config())["session_id"];
        const auto cur = svc.current(sid);
        svc.gather(sid, {cur->clusters[0].id, cur->clusters[1].id});
        snapshot = svc.state(sid);
    }
    ScatterService reopened({.corpus_dir = dir.path(), .state_dir = state_dir});
    CHECK(reopened.state(sid).dump() == snapshot.dump());
    const auto back = reopened.back(sid);
    CHECK(back["generation"] == 0);
    // ids keep counting past restored ones
    const auto other = reopened.create_session("c1", service_config());
    CHECK(other["session_id"] != sid);
}

TEST_CASE("scatter state JSON round trip") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 40});
    const auto sid = svc.create_session(svc.register_corpus(ds.corpus, ds.truth), service_config())["session_id"].get<std::string>();
    const auto cur = svc.current(sid);
    const auto j = to_json(*cur);
    CHECK(to_json(scatter_state_from_json(j)).dump() == j.dump());
}

TEST_CASE("two gathers and two backs return to the start") {
    TempDir dir;
    ScatterService svc({.corpus_dir = dir.path()});
    const auto ds = planted::make({.docs = 60});
    const auto start = svc.create_session(svc.register_corpus(ds.corpus), service_config());
    const std::string sid = start["session_id"];

    const auto all = svc.gather(sid, card_ids(start));
    CHECK(all["active_size"] == 60);
    CHECK(all["history_depth"] == 1);
    CHECK(svc.current(sid)->seed == service_config().seed + 1);

    svc.gather(sid, {card_ids(all)[0]});
    CHECK(svc.state(sid)["history_depth"] == 2);
    svc.back(sid);
    CHECK(svc.back(sid).dump() == start.dump());
}

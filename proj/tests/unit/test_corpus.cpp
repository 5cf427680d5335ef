#include <doctest.h>

#include <set>

#include "planted.hpp"
#include "scattermesh/corpus.hpp"
#include "scattermesh/error.hpp"
#include "tempdir.hpp"

using namespace scattermesh;

namespace {

DocumentRecord labeled(std::string id, std::vector<std::string> labels) {
    DocumentRecord r;
    r.id = id;
    r.title = "title of " + id;
    r.subject_labels = std::move(labels);
    return r;
}

}  // namespace

TEST_CASE("jsonl keeps file order") {
    TempDir dir;
    const auto path = dir.write("c.jsonl",
                                "{\"id\":\"b\",\"title\":\"Second\",\"abstract\":\"x\"}\n"
                                "{\"id\":\"a\",\"title\":\"First\",\"mesh_major\":[\"M1\",\"M2\"]}\n"
                                "\n"
                                "{\"id\":\"c\",\"title\":\"Third\",\"body\":\"full text\"}\n");
    const auto loaded = load_corpus(path);
    REQUIRE(loaded.corpus.size() == 3);
    CHECK(loaded.skipped == 0);
    CHECK(loaded.corpus.records()[0].id == "b");
    CHECK(loaded.corpus.records()[1].id == "a");
    CHECK(loaded.corpus.records()[2].id == "c");
    CHECK(loaded.corpus.records()[0].abstract_text == std::optional<std::string>("x"));
    CHECK(loaded.corpus.records()[1].subject_labels == std::vector<std::string>{"M1", "M2"});
    CHECK(loaded.corpus.records()[2].body == std::optional<std::string>("full text"));
    CHECK_FALSE(loaded.corpus.records()[2].abstract_text.has_value());
}

TEST_CASE("duplicate id reports its line") {
    TempDir dir;
    std::string text;
    for (int i = 1; i <= 4; ++i) text += "{\"id\":\"d" + std::to_string(i) + "\",\"title\":\"t\"}\n";
    text += "{\"id\":\"d2\",\"title\":\"again\"}\n";
    const auto path = dir.write("dup.jsonl", text);
    try {
        load_corpus(path);
        FAIL("expected an ingest error");
    } catch (const IngestError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 5") != std::string::npos);
        CHECK(what.find("d2") != std::string::npos);
    }
}

TEST_CASE("malformed jsonl line is named") {
    TempDir dir;
    const auto path = dir.write("bad.jsonl", "{\"id\":\"a\",\"title\":\"t\"}\n{not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 2"), IngestError);
}

TEST_CASE("unreadable file is an ingest error") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IngestError);
}

TEST_CASE("csv row without title is skipped") {
    TempDir dir;
    const auto path = dir.write("c.csv",
                                "id,title,abstract,body,mesh_major\n"
                                "1,Alpha,\"multi\nline abstract\",,A|B\n"
                                "2,,no title here,,A\n"
                                "3,\"Gamma, with comma\",,,\n");
    const auto loaded = load_corpus(path);
    CHECK(loaded.skipped == 1);
    REQUIRE(loaded.corpus.size() == 2);
    CHECK(loaded.corpus.records()[0].abstract_text == std::optional<std::string>("multi\nline abstract"));
    CHECK(loaded.corpus.records()[0].subject_labels == std::vector<std::string>{"A", "B"});
    CHECK(loaded.corpus.records()[1].title == "Gamma, with comma");
    CHECK(loaded.corpus.records()[1].subject_labels.empty());
}

TEST_CASE("csv with a short row names the line") {
    TempDir dir;
    const auto path = dir.write("short.csv", "id,title,abstract\n1,a,b\n2,c\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 3"), IngestError);
}

TEST_CASE("jsonl round trip") {
    TempDir dir;
    const auto original = planted::make_labeled_corpus({.docs = 12});
    save_corpus_jsonl(original, dir / "out.jsonl");
    const auto back = load_corpus(dir / "out.jsonl").corpus;
    REQUIRE(back.size() == original.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back.records()[i].id == original.records()[i].id);
        CHECK(back.records()[i].title == original.records()[i].title);
        CHECK(back.records()[i].abstract_text == original.records()[i].abstract_text);
        CHECK(back.records()[i].body == original.records()[i].body);
        CHECK(back.records()[i].subject_labels == original.records()[i].subject_labels);
    }
}

TEST_CASE("labeled dataset picks the most frequent classes") {
    const Corpus corpus({labeled("1", {"A"}), labeled("2", {"A"}), labeled("3", {"A"}), labeled("4", {"B"}),
                         labeled("5", {"B"}), labeled("6", {"C"})});
    const auto ds = build_labeled_dataset(corpus, {"C", "B", "A"}, 2, 1);
    CHECK(ds.classes == std::vector<std::string>{"A", "B"});
    CHECK(ds.corpus.size() == 5);
    CHECK(ds.dropped == 1);
    CHECK_FALSE(ds.corpus.find("6"));
    CHECK(ds.truth.at("4") == "B");
    for (const auto& r : ds.corpus.records()) CHECK(r.subject_labels.empty());
}

TEST_CASE("records with two selected labels are dropped") {
    const Corpus corpus({labeled("1", {"A", "B"}), labeled("2", {"A"}), labeled("3", {"B", "X"})});
    const auto ds = build_labeled_dataset(corpus, {"A", "B"}, 2, 1);
    CHECK(ds.corpus.size() == 2);
    CHECK_FALSE(ds.corpus.find("1"));
    CHECK(ds.truth.at("3") == "B");
}

TEST_CASE("frequency ties follow the candidate order") {
    const Corpus corpus({labeled("1", {"A"}), labeled("2", {"B"}), labeled("3", {"C"})});
    CHECK(build_labeled_dataset(corpus, {"C", "A", "B"}, 2, 0).classes == std::vector<std::string>{"C", "A"});
    CHECK(build_labeled_dataset(corpus, {"B", "C", "A"}, 2, 0).classes == std::vector<std::string>{"B", "C"});
}

TEST_CASE("dataset errors") {
    const Corpus corpus({labeled("1", {"A"}), labeled("2", {"A"}), labeled("3", {"B"})});
    CHECK_THROWS_AS(build_labeled_dataset(corpus, {"A", "Z"}, 2, 0), DataError);
    CHECK_THROWS_WITH(build_labeled_dataset(corpus, {"A", "B"}, 2, 2), doctest::Contains("'B'"));
    CHECK_THROWS_AS(build_labeled_dataset(corpus, {}, 2, 0), DataError);
    CHECK_THROWS_AS(build_labeled_dataset(corpus, {"A", "B"}, 1, 0), DataError);
}

TEST_CASE("rebuilding from the truth-labelled output is idempotent") {
    const auto corpus = planted::make_labeled_corpus({.docs = 40});
    std::vector<DocumentRecord> records = corpus.records();
    records[3].subject_labels.push_back("topic2");  // two classes: dropped
    records[5].subject_labels = {"other"};          // none: dropped
    const std::vector<std::string> candidates{"topic0", "topic1", "topic2", "topic3"};
    const auto first = build_labeled_dataset(Corpus(records), candidates, 4, 1);
    CHECK(first.corpus.size() == 38);

    std::vector<DocumentRecord> relabeled = first.corpus.records();
    for (auto& r : relabeled) r.subject_labels = {first.truth.at(r.id)};
    const auto second = build_labeled_dataset(Corpus(relabeled), candidates, 4, 1);
    CHECK(second.truth == first.truth);
    CHECK(std::set<std::string>(second.classes.begin(), second.classes.end()) ==
          std::set<std::string>(first.classes.begin(), first.classes.end()));
    CHECK(second.corpus.size() == first.corpus.size());
    CHECK(second.dropped == 0);
}

TEST_CASE("truth sidecar round trip and attach") {
    TempDir dir;
    const auto ds = planted::make({.docs = 20});
    save_truth_csv(ds, dir / "truth.csv");
    CHECK(slurp(dir / "truth.csv").rfind("id,class\n", 0) == 0);
    const auto truth = load_truth_csv(dir / "truth.csv");
    CHECK(truth == ds.truth);

    auto partial = truth;
    partial.erase("doc0");
    const auto attached = attach_truth(ds.corpus, partial);
    CHECK(attached.corpus.size() == 19);
    CHECK(attached.dropped == 1);

    partial["ghost"] = "topic0";
    CHECK_THROWS_WITH_AS(attach_truth(ds.corpus, partial), doctest::Contains("ghost"), DataError);
}

TEST_CASE("compose_text") {
    DocumentRecord r;
    r.id = "x";
    r.title = "T";
    r.abstract_text = "A";
    r.body = "B";
    CHECK(compose_text(r, FieldSubset::TitleAbstractBody) == "T\nA\nB");
    CHECK(compose_text(r, FieldSubset::TitleAbstract) == "T\nA");
    CHECK(compose_text(r, FieldSubset::TitleOnly) == "T");

    DocumentRecord bare;
    bare.title = "T";
    CHECK(compose_text(bare, FieldSubset::TitleAbstract) == "T");
    bare.abstract_text = "";
    bare.body = "B";
    CHECK(compose_text(bare, FieldSubset::TitleAbstractBody) == "T\nB");
}

TEST_CASE("composed subsets are prefixes of richer subsets") {
    const auto corpus = planted::make_labeled_corpus({.docs = 8});
    for (const auto& r : corpus.records()) {
        const auto a = compose_text(r, FieldSubset::TitleOnly);
        const auto b = compose_text(r, FieldSubset::TitleAbstract);
        const auto c = compose_text(r, FieldSubset::TitleAbstractBody);
        CHECK(b.rfind(a, 0) == 0);
        CHECK(c.rfind(b, 0) == 0);
    }
}

TEST_CASE("field subset names") {
    CHECK(parse_field_subset("a") == FieldSubset::TitleOnly);
    CHECK(parse_field_subset("title_abstract") == FieldSubset::TitleAbstract);
    CHECK(parse_field_subset("c") == FieldSubset::TitleAbstractBody);
    CHECK(to_string(FieldSubset::TitleAbstractBody) == "title_abstract_body");
    CHECK_THROWS_AS(parse_field_subset("abstract"), DataError);
}

TEST_CASE("corpus subset keeps corpus order") {
    const auto corpus = planted::make_labeled_corpus({.docs = 10});
    const auto sub = corpus.subset({"doc7", "doc2", "doc5"});
    REQUIRE(sub.size() == 3);
    CHECK(sub.records()[0].id == "doc2");
    CHECK(sub.records()[2].id == "doc7");
    CHECK(corpus.index_of("doc4") == std::optional<std::size_t>(4));
    CHECK_FALSE(corpus.index_of("nope"));
}

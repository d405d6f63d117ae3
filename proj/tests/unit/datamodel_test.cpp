#include <doctest.h>

#include <set>

#include "subix/corpus.hpp"
#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/suggestion.hpp"
#include "subix/vocabulary.hpp"
#include "support.hpp"

using namespace subix;
using testing::TempDir;

namespace {

const char* kVocab =
    "id\tlabel_de\tlabel_en\n"
    "s1\tQuantencomputer\tQuantum computing\n"
    "s2\tEthik\tEthics\n"
    "s3\tKünstliche Intelligenz\tArtificial intelligence\n";

}  // namespace

TEST_CASE("vocabulary ingestion and lookup") {
    const auto v = testing::vocab(kVocab);
    CHECK(v.size() == 3);
    CHECK(v.languages() == std::vector<std::string>{"de", "en"});
    REQUIRE(v.find("s2") != nullptr);
    CHECK(v.find("s2")->labels.at("en") == "Ethics");
    CHECK(v.label("s3", "de") == "Künstliche Intelligenz");
    CHECK(v.find("s9") == nullptr);
    CHECK_THROWS_AS(v.at("s9"), ValidationError);
    CHECK(v.find_by_label("de", "kunstliche   INTELLIGENZ") == std::vector<std::string>{"s3"});
}

TEST_CASE("vocabulary rejects duplicate ids and missing labels") {
    CHECK_THROWS_WITH_AS(testing::vocab("id\tlabel_en\ns1\tA\ns1\tB\n"),
                         doctest::Contains("'s1'"), ValidationError);
    CHECK_THROWS_WITH_AS(testing::vocab("id\tlabel_de\tlabel_en\ns1\tA\tB\ns2\t\tC\n"),
                         doctest::Contains("row 3 is missing the label for language 'de'"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(testing::vocab("id\tlabel_de\tlabel_en\ns1\tA\n"),
                         doctest::Contains("'en'"), ValidationError);
}

TEST_CASE("header-only vocabulary is empty but valid") {
    const auto v = testing::vocab("id\tlabel_de\tlabel_en\n");
    CHECK(v.size() == 0);
    CHECK(v.has_language("en"));
}

TEST_CASE("vocabulary format round-trips") {
    const auto v = testing::vocab(kVocab);
    CHECK(format_vocabulary(v) == kVocab);
}

TEST_CASE("corpus keeps file order and accepts empty abstracts") {
    const auto v = testing::vocab(kVocab);
    const std::string text =
        R"({"id":"r2","title":"Ethik heute","abstract":"","language":"de","subjects":["s2"]})" "\n"
        R"({"id":"r1","title":"Quantum computing basics","abstract":"An intro.","language":"en","subjects":["s1","s3"]})" "\n";
    const auto corpus = parse_corpus(text, v, "c.jsonl");
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.records[0].id == "r2");
    CHECK(corpus.records[0].abstract.empty());
    CHECK(corpus.records[1].subjects == std::vector<std::string>{"s1", "s3"});
    CHECK(corpus.find("r1") == &corpus.records[1]);
    CHECK(format_corpus(corpus) == text);
}

TEST_CASE("corpus errors carry line numbers") {
    const auto v = testing::vocab(kVocab);
    const std::string good = R"({"id":"r1","title":"t","abstract":"","language":"en","subjects":[]})" "\n";
    CHECK_THROWS_WITH_AS(
        parse_corpus(good + R"({"id":"r2","title":"t","abstract":"","language":"en","subjects":["sX"]})" "\n",
                     v, "c.jsonl"),
        doctest::Contains("c.jsonl:2: unknown subject 'sX'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_corpus(good + "{not json\n", v, "c.jsonl"),
                         doctest::Contains("c.jsonl:2: malformed line"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_corpus(R"({"id":"r1","title":"t","abstract":"","language":"fr","subjects":[]})" "\n", v, "c.jsonl"),
        doctest::Contains("unknown language code 'fr'"), ValidationError);
    CHECK_THROWS_AS(parse_corpus(good + good, v, "c.jsonl"), ValidationError);
    CHECK_THROWS_AS(
        parse_corpus(R"({"id":"r1","title":"t","abstract":"","language":"en","subjects":[],"x":1})" "\n", v, "c"),
        ValidationError);
}

TEST_CASE("corpus load, write, load is identity") {
    TempDir dir;
    const auto v = testing::vocab(kVocab);
    Corpus corpus;
    corpus.records.push_back(testing::record("a", "Tab\there \"quoted\"", "Zeile\nzwei ü", "de", {"s1"}));
    corpus.records.push_back(testing::record("b", "", "", "en"));
    write_corpus(dir / "c.jsonl", corpus);
    const auto again = load_corpus(dir / "c.jsonl", v);
    CHECK(again.records == corpus.records);
}

TEST_CASE("merge_training_sets counts and suffixes") {
    Corpus base;
    for (int i = 0; i < 10; ++i) base.records.push_back(testing::record("b" + std::to_string(i), "t", "", "en"));
    Corpus extra1 = base;
    Corpus extra2 = base;
    for (auto& r : extra1.records) r.id += "x";
    for (auto& r : extra2.records) r.id += "y";
    const auto merged = merge_training_sets(base, {extra1, extra2}, 2);
    CHECK(merged.size() == 40);
    std::set<std::string> ids;
    for (const auto& r : merged.records) ids.insert(r.id);
    CHECK(ids.size() == 40);

    const auto identity = merge_training_sets(base, {}, 1);
    CHECK(identity.records == base.records);

    Corpus german = base;
    german.records[0].language = "de";
    CHECK_THROWS_AS(merge_training_sets(base, {german}, 1), ValidationError);
}

TEST_CASE("suggestions serialize, truncate with a warning and round-trip") {
    std::vector<std::string> warnings;
    log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    PredictionSet predictions;
    SuggestionList many;
    for (int i = 0; i < 25; ++i) many.push_back({"s" + std::to_string(100 + i), 1.0 - i * 0.01});
    predictions.push_back({"r1", {{"s1", 0.9}, {"s2", 0.5}, {"s3", 0.1}}});
    predictions.push_back({"r2", many});
    predictions.push_back({"r3", {}});
    const auto text = format_suggestions(predictions, 20);
    log::set_warning_sink(nullptr);

    CHECK(warnings.size() == 1);
    const auto parsed = parse_suggestions(text, "p.jsonl");
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0] == predictions[0]);
    CHECK(parsed[1].suggestions.size() == 20);
    CHECK(parsed[2].suggestions.empty());
    CHECK(text.find(R"({"record_id":"r3","suggestions":[]})") != std::string::npos);
}

TEST_CASE("scores survive the text format bit-exactly") {
    PredictionSet predictions{{"r", {{"b", 1.0 / 3.0}, {"a", 0.1 + 0.2}}}};
    CHECK(parse_suggestions(format_suggestions(predictions), "p") == predictions);
}

TEST_CASE("rank_suggestions orders by score then id") {
    SuggestionList list{{"c", 0.5}, {"a", 0.5}, {"b", 0.9}, {"d", 0.1}};
    rank_suggestions(list, 3);
    CHECK(list == SuggestionList{{"b", 0.9}, {"a", 0.5}, {"c", 0.5}});
    CHECK(is_canonical(list));
    CHECK_FALSE(is_canonical({{"a", 0.1}, {"b", 0.2}}));
    CHECK_FALSE(is_canonical({{"a", 1.5}}));
}

TEST_CASE("UTF-8 validation") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("Künstliche"));
    CHECK_FALSE(is_valid_utf8("\xC3"));
    CHECK_FALSE(is_valid_utf8("\xC0\xAF"));        // overlong
    CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));    // surrogate
    const auto v = testing::vocab(kVocab);
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"\xC3\"}\n", v, "c"), ValidationError);
}

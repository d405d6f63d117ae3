#include <doctest.h>

#include <json.hpp>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/llm_client.hpp"
#include "subix/llm_pipelines.hpp"
#include "subix/mock_llm.hpp"
#include "subix/prompts.hpp"
#include "support.hpp"

using namespace subix;
using nlohmann::json;

namespace {

LlmEndpoint fast_endpoint(const MockLlmServer& server) {
    LlmEndpoint e;
    e.base_url = server.base_url();
    e.model = "mock-model";
    e.backoff = std::chrono::milliseconds(1);
    e.timeout = std::chrono::milliseconds(2000);
    return e;
}

std::string golden(const std::string& name) {
    return read_file(testing::source_dir() / "tests" / "golden" / name);
}

json last_request(const MockLlmServer& server) {
    return json::parse(server.request_bodies().back());
}

const char* kVocab =
    "id\tlabel_de\tlabel_en\n"
    "s1\tQuantencomputer\tQuantum computing\n"
    "s2\tEthik\tEthics\n"
    "s3\tRobotik\tRobotics\n";

}  // namespace

TEST_CASE("chat round-trips through the mock and uses the wire shape") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    CHECK(client.chat("be an echo", "hello there") == "hello there");
    const auto body = last_request(server);
    std::vector<std::string> keys;
    for (const auto& item : body.items()) keys.push_back(item.key());
    CHECK(keys == std::vector<std::string>{"max_tokens", "messages", "model", "temperature"});
    CHECK(server.request_bodies().back().rfind(R"({"model":"mock-model","messages":[{"role":"system")", 0) == 0);
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][1]["content"] == "hello there");
}

TEST_CASE("5xx replies are retried") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    server.script_statuses({500, 500, 200});
    CHECK(client.chat("s", "after retries") == "after retries");
    CHECK(client.telemetry().snapshot().retries == 2);
    CHECK(client.telemetry().snapshot().requests == 3);

    server.script_statuses({503, 503, 503, 503});
    CHECK_THROWS_WITH_AS(client.chat("s", "u"), doctest::Contains(server.base_url().c_str()), TransportError);
}

TEST_CASE("4xx and non-JSON bodies are protocol errors") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    server.script_statuses({404});
    CHECK_THROWS_AS(client.chat("s", "u"), ProtocolError);
    server.script_raw_bodies({"<html>oops</html>"});
    CHECK_THROWS_WITH_AS(client.chat("s", "u"), doctest::Contains("non-JSON"), ProtocolError);
    server.script_raw_bodies({R"({"choices":[]})"});
    CHECK_THROWS_AS(client.chat("s", "u"), ProtocolError);
}

TEST_CASE("timeouts become transport errors naming the endpoint") {
    MockLlmServer server;
    server.start();
    auto e = fast_endpoint(server);
    e.timeout = std::chrono::milliseconds(100);
    e.max_retries = 1;
    LlmClient client(e);
    server.set_delay(std::chrono::milliseconds(400));
    CHECK_THROWS_WITH_AS(client.chat("s", "u"), doctest::Contains(server.base_url().c_str()), TransportError);
    server.set_delay(std::chrono::milliseconds(0));
}

TEST_CASE("unreachable endpoint is a transport error") {
    LlmEndpoint e;
    e.base_url = "http://127.0.0.1:1";
    e.max_retries = 0;
    e.timeout = std::chrono::milliseconds(200);
    LlmClient client(e);
    CHECK_THROWS_AS(client.chat("s", "u"), TransportError);
    e.base_url = "https://example.org";
    CHECK_THROWS_AS(LlmClient{e}, ValidationError);
}

TEST_CASE("translation prompt matches the golden file") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    const auto r = testing::record("r", "Künstliche Intelligenz in Bibliotheken",
                                   "Ein Überblick über maschinelle Verfahren.", "de", {"s1"});
    server.script_replies({"Artificial intelligence in libraries\nAn overview of machine methods."});
    const auto result = translate_record(client, r, "en");
    const auto body = last_request(server);
    CHECK(body["messages"][0]["content"] == golden("translation.system.txt"));
    CHECK(body["messages"][1]["content"] == golden("translation.user.txt"));
    CHECK_FALSE(result.failed);
    CHECK(result.record.language == "en");
    CHECK(result.record.title == "Artificial intelligence in libraries");
    CHECK(result.record.abstract == "An overview of machine methods.");
    CHECK(result.record.subjects == r.subjects);
}

TEST_CASE("translation edge cases") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    const auto r = testing::record("r", "Title only", "", "en");

    server.script_replies({"Title only"});
    auto result = translate_record(client, r, "en");
    CHECK(result.record == r);
    CHECK(last_request(server)["messages"][1]["content"].get<std::string>().ends_with(":\n\nTitle only\n\n"));

    std::vector<std::string> warnings;
    log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    server.script_replies({"   "});
    result = translate_record(client, testing::record("r", "Titel", "Text", "de"), "en");
    log::set_warning_sink(nullptr);
    CHECK(result.failed);
    CHECK(result.record.title == "Titel");
    CHECK(result.record.abstract == "Text");
    CHECK(result.record.language == "en");
    CHECK(warnings.size() == 1);

    CHECK(split_title_abstract("One line") == std::pair<std::string, std::string>{"One line", ""});
    CHECK(split_title_abstract("T\n\n  body text \n") == std::pair<std::string, std::string>{"T", "body text"});
}

TEST_CASE("glossary mock translates word by word") {
    MockResponder responder;
    responder.add_glossary_entry("de", "Ethik", "en", "ethics");
    responder.add_glossary_entry("de", "heute", "en", "today");
    MockLlmServer server(responder);
    server.start();
    LlmClient client(fast_endpoint(server));
    const auto result = translate_record(client, testing::record("r", "Ethik heute", "Ethik, heute!", "de"), "en");
    CHECK(result.record.title == "Ethics today");
    CHECK(result.record.abstract == "Ethics, today!");
    const auto back = translate_record(client, result.record, "de");
    CHECK(back.record.title == "Ethik heute");
}

TEST_CASE("synthesis prompt, subject choice and record shape") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    const auto vocab = testing::vocab(kVocab);
    const auto source = testing::record("src", "Quantum computing basics", "An introduction.", "en", {"s1"});
    server.script_replies({"New title\nNew description."});
    const auto out = synthesize_record(client, source, vocab, {"s2"}, 123);
    REQUIRE(out.has_value());
    const auto body = last_request(server);
    CHECK(body["messages"][0]["content"] == golden("synthesis.system.txt"));
    CHECK(body["messages"][1]["content"] == golden("synthesis.user.txt"));
    CHECK(out->record.subjects == std::vector<std::string>{"s1", "s2"});
    CHECK(out->added_subject == "s2");
    CHECK(out->source_record_id == "src");
    CHECK(out->generator_model == "mock-model");
    CHECK(out->record.title == "New title");

    // seeded choice is reproducible and stays within the eligible set
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = synthesize_record(client, source, vocab, {"s2", "s3"}, seed);
        const auto b = synthesize_record(client, source, vocab, {"s2", "s3"}, seed);
        CHECK(a->added_subject == b->added_subject);
        CHECK((a->added_subject == "s2" || a->added_subject == "s3"));
    }
    CHECK_THROWS_AS(synthesize_record(client, source, vocab, {}, 1), ValidationError);
    CHECK(eligible_subjects({"s1", "s2", "s3"}, source) == std::vector<std::string>{"s2", "s3"});
}

TEST_CASE("empty synthesis is retried once, then skipped") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    const auto vocab = testing::vocab(kVocab);
    const auto source = testing::record("src", "T", "", "en", {"s1"});
    log::set_warning_sink([](const std::string&) {});
    server.script_replies({"", "Second try\nworks"});
    auto out = synthesize_record(client, source, vocab, {"s2"}, 1);
    CHECK(out.has_value());
    server.script_replies({"", " "});
    out = synthesize_record(client, source, vocab, {"s2"}, 1);
    log::set_warning_sink(nullptr);
    CHECK_FALSE(out.has_value());
}

TEST_CASE("ranking prompt and reply parsing") {
    MockLlmServer server;
    server.start();
    LlmClient client(fast_endpoint(server));
    const std::vector<Candidate> candidates = {{"s1", "Quantum computing"}, {"s2", "Ethics"}};
    const std::string text = "Quantum computing basics\n\nAn introduction.";

    server.script_replies({R"({"Quantum computing": 95, "Ethics": 10})"});
    auto result = rank_candidates(client, text, candidates, 100);
    const auto body = last_request(server);
    CHECK(body["messages"][0]["content"] == golden("ranking.system.txt"));
    CHECK(body["messages"][1]["content"] == golden("ranking.user.txt"));
    CHECK(result.scores.at("s1") == 0.95);
    CHECK(result.scores.at("s2") == 0.10);
    CHECK_FALSE(result.parse_failed);

    server.script_replies({"Sure!\n```json\n{\" quantum COMPUTING \": 250}\n```\nHope that helps."});
    result = rank_candidates(client, text, candidates, 100);
    CHECK(result.scores.at("s1") == 1.0);
    CHECK(result.scores.at("s2") == 0.0);

    server.script_replies({R"({"Ethics": -5, "Quantum computing": "40"})"});
    result = rank_candidates(client, text, candidates, 100);
    CHECK(result.scores.at("s1") == 0.4);
    CHECK(result.scores.at("s2") == 0.0);

    log::set_warning_sink([](const std::string&) {});
    const auto before = server.request_count();
    server.script_replies({"no idea", "still no idea"});
    result = rank_candidates(client, text, candidates, 100);
    log::set_warning_sink(nullptr);
    CHECK(server.request_count() - before == 2);
    CHECK(result.parse_failed);
    CHECK(result.scores == RelevanceScores{{"s1", 0.0}, {"s2", 0.0}});
    CHECK(client.telemetry().snapshot().parse_failures == 1);

    CHECK_THROWS_AS(rank_candidates(client, text, candidates, 1), ValidationError);
}

TEST_CASE("JSON extraction skips unbalanced and non-object spans") {
    CHECK(extract_json_object("prefix {\"a\": 1} suffix")->at("a") == 1);
    CHECK(extract_json_object("{broken {\"b\": \"}\"}")->at("b") == "}");
    CHECK_FALSE(extract_json_object("[1, 2]").has_value());
    CHECK_FALSE(extract_json_object("{ never closed").has_value());
}

TEST_CASE("throughput and model score") {
    CHECK(measure_throughput({100, 0, 20.0}) == 5.0);
    CHECK(measure_throughput({8, 2, 10.0}) == 0.8);
    CHECK(measure_throughput({1, 0, 0.25}) == 4.0);
    CHECK_THROWS_AS(measure_throughput({1, 0, 0.0}), ValidationError);
    CHECK_THROWS_AS(measure_throughput({0, 0, 1.0}), ValidationError);

    const auto s = score_model(0.55, 10, 0.003);
    CHECK(s.score == 0.55 + 0.003 * 10);
    CHECK(s.score == doctest::Approx(0.58).epsilon(1e-15));
    CHECK(score_model(0.4, 0).score == 0.4);
    CHECK(score_model(0.4, 100, 0.0).score == 0.4);
    CHECK_THROWS_AS(score_model(-0.1, 1), ValidationError);
    CHECK_THROWS_AS(score_model(0.5, -1), ValidationError);
}

TEST_CASE("corpus-level jobs keep input order under parallelism") {
    MockResponder responder;
    MockLlmServer server(responder);
    server.start();
    auto e = fast_endpoint(server);
    e.max_parallel = 8;
    LlmClient client(e);
    const auto vocab = testing::vocab(kVocab);
    Corpus corpus;
    for (int i = 0; i < 30; ++i) {
        corpus.records.push_back(testing::record("r" + std::to_string(i), "Title " + std::to_string(i), "Body",
                                                 "en", {i % 2 ? "s1" : "s2"}));
    }
    const auto translated = translate_corpus(client, corpus, "en");
    REQUIRE(translated.corpus.size() == 30);
    for (int i = 0; i < 30; ++i) CHECK(translated.corpus.records[i].id == corpus.records[i].id);

    const auto one = synthesize_corpus(client, corpus, vocab, 7);
    const auto two = synthesize_corpus(client, corpus, vocab, 7);
    CHECK(format_corpus(one.corpus) == format_corpus(two.corpus));
    CHECK(format_provenance_tsv(one.provenance) == format_provenance_tsv(two.provenance));
    CHECK(one.corpus.size() == corpus.size());
}

#include <doctest.h>

#include <sstream>

#include "subix/cli.hpp"
#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/pipeline.hpp"
#include "support.hpp"

using namespace subix;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "subix");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const char* kConfig =
    "[paths]\n"
    "vocabulary = vocab.tsv\n"
    "train = train.jsonl\n"
    "dev = dev.jsonl\n"
    "work = out\n"
    "\n"
    "[pipeline]\n"
    "languages = en\n"
    "seed = 5\n"
    "\n"
    "[llm]\n"
    "endpoint = http://127.0.0.1:9\n"
    "timeout = 2\n"
    "\n"
    "[hyperopt]\n"
    "trials = 30\n";

}  // namespace

TEST_CASE("pipeline config parsing") {
    const auto config = parse_pipeline_config(kConfig, "/data/run/pipeline.cfg");
    CHECK(config.languages == std::vector<std::string>{"en"});
    CHECK(config.seed == 5);
    CHECK(config.hyperopt.trials == 30);
    CHECK(config.llm.timeout == std::chrono::milliseconds(2000));
    CHECK(config.work_dir() == std::filesystem::path("/data/run/out"));
    CHECK(config.resolve("vocab.tsv") == std::filesystem::path("/data/run/vocab.tsv"));
    CHECK_FALSE(config.test.has_value());

    CHECK_THROWS_AS(parse_pipeline_config(std::string(kConfig) + "[bogus]\nx = 1\n", "p.cfg"),
                    ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(std::string(kConfig) + "[pipeline]\nseed = many\n", "p.cfg"),
                    ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config("[paths]\ntrain = t.jsonl\n", "p.cfg").validate(), ValidationError);
}

TEST_CASE("stage names are fixed and ordered") {
    CHECK(pipeline_stages() == std::vector<std::string>{"vocab", "translate", "synthesize", "train",
                                                        "suggest", "hyperopt", "fuse", "rank",
                                                        "merge", "eval"});
}

TEST_CASE("manifest round trip and corruption") {
    std::vector<ManifestEntry> entries = {{"vocab", "abc", {}, {{"work/vocabulary.tsv", "ff"}}}};
    testing::TempDir dir;
    write_file_atomic(dir / "manifest.jsonl", format_manifest(entries));
    const auto back = read_manifest(dir / "manifest.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].outputs == entries[0].outputs);
    write_file_atomic(dir / "manifest.jsonl", "{not json\n");
    CHECK_THROWS_AS(read_manifest(dir / "manifest.jsonl"), ValidationError);
}

TEST_CASE("report and stage dependencies on a fresh work dir") {
    testing::TempDir dir;
    const auto src = testing::source_dir() / "data" / "toy";
    for (const char* f : {"vocab.tsv", "train.jsonl", "dev.jsonl"}) {
        std::filesystem::copy_file(src / f, dir / f);
    }
    write_file_atomic(dir / "pipeline.cfg", kConfig);
    const auto cfg = (dir / "pipeline.cfg").string();

    auto r = cli({"report", "--config", cfg});
    CHECK(r.code == 0);
    CHECK(r.out.find("no manifest") != std::string::npos);

    r = cli({"run", "--config", cfg, "--stages", "eval"});
    CHECK(r.code == 1);
    CHECK(r.err.find("suggest") != std::string::npos);

    r = cli({"run", "--config", cfg, "--stages", "nonsense"});
    CHECK(r.code == 1);

    r = cli({"run", "--config", cfg, "--dry-run"});
    CHECK(r.code == 0);
    CHECK_FALSE(std::filesystem::exists(dir / "out" / "manifest.jsonl"));

    // the vocab stage needs no LLM and records itself in the manifest
    r = cli({"run", "--config", cfg, "--stages", "vocab"});
    CHECK(r.code == 0);
    CHECK(std::filesystem::exists(dir / "out" / "manifest.jsonl"));
    r = cli({"run", "--config", cfg, "--stages", "vocab"});
    CHECK(r.code == 0);
    CHECK(r.out.find("0 stage(s) ran") != std::string::npos);

    // translate talks to an endpoint that refuses connections
    r = cli({"run", "--config", cfg, "--stages", "translate"});
    CHECK(r.code == 2);

    write_file_atomic(dir / "out" / "manifest.jsonl", "garbage\n");
    r = cli({"report", "--config", cfg});
    CHECK(r.code == 1);
}

TEST_CASE("cli exit codes for single commands") {
    testing::TempDir dir;
    const auto toy = testing::source_dir() / "data" / "toy";
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"vocab", (dir / "missing.tsv").string()}).code == 1);

    auto r = cli({"vocab", (toy / "vocab.tsv").string()});
    CHECK(r.code == 0);

    write_file_atomic(dir / "bad.tsv", "id\tlabel_en\nx\t\n");
    CHECK(cli({"vocab", (dir / "bad.tsv").string()}).code == 1);

    // the lexical backend only accepts records in its own language
    const auto vocabulary = load_vocabulary(toy / "vocab.tsv");
    auto english = load_corpus(toy / "dev.jsonl", vocabulary);
    std::erase_if(english.records, [](const Record& r) { return r.language != "en"; });
    REQUIRE_FALSE(english.records.empty());
    const auto corpus = (dir / "dev.en.jsonl").string();
    write_corpus(corpus, english);

    const auto model = (dir / "lex.model").string();
    r = cli({"train", "--backend", "lexical", "--vocabulary", (toy / "vocab.tsv").string(), "--language", "en",
             "--out", model});
    CHECK(r.code == 0);
    const auto preds = (dir / "p.jsonl").string();
    r = cli({"suggest", "--backend", "lexical", "--model", model, "--vocabulary", (toy / "vocab.tsv").string(),
             "--corpus", corpus, "--out", preds});
    CHECK(r.code == 0);
    r = cli({"eval", "--vocabulary", (toy / "vocab.tsv").string(), "--corpus", corpus,
             "--predictions", preds});
    CHECK(r.code == 0);
    CHECK(r.out.find("ndcg@20") != std::string::npos);
    r = cli({"eval", "--vocabulary", (toy / "vocab.tsv").string(), "--corpus", corpus,
             "--predictions", preds, "--throughput", "0"});
    CHECK(r.code == 0);
    r = cli({"eval", "--vocabulary", (toy / "vocab.tsv").string(), "--corpus", corpus,
             "--predictions", preds, "--throughput", "-1"});
    CHECK(r.code == 1);
}

#include <doctest.h>

#include <algorithm>
#include <random>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/lexical.hpp"
#include "subix/text.hpp"
#include "support.hpp"

using namespace subix;
using Tokens = std::vector<std::string>;

namespace {

// Straight transcription of the candidate score, kept apart from the library.
double expected_score(bool in_title, double tf, double first_pos, double doc_len, double label_len) {
    const double value = 0.4 * (in_title ? 1.0 : 0.0) + 0.3 * std::min(tf, 3.0) / 3.0 +
                         0.2 * (1.0 - first_pos / doc_len) + 0.1 * std::min(label_len, 4.0) / 4.0;
    return std::min(1.0, value);
}

const char* kVocab =
    "id\tlabel_en\n"
    "s1\tQuantum computing\n"
    "s2\tEthics\n"
    "s3\tethics\n"
    "s4\t!!!\n"
    "s5\tMachine learning for quantum computing systems\n";

}  // namespace

TEST_CASE("normalize folds case and diacritics and splits") {
    CHECK(normalize("Künstliche Intelligenz!") == Tokens{"kunstliche", "intelligenz"});
    CHECK(normalize("").empty());
    CHECK(normalize("COVID-19 models") == Tokens{"covid", "19", "models"});
    CHECK(normalize("a 7 x") == Tokens{"7"});
    CHECK(normalize("Ａｎｄｒé ÆON") == Tokens{"andre", "æon"});
    CHECK(normalize("Straße") == Tokens{"straße"});
}

TEST_CASE("build_lexical indexes labels, shares ambiguous labels and skips empty ones") {
    std::vector<std::string> warnings;
    log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    log::set_warning_sink(nullptr);

    CHECK(model.index().at({"quantum", "computing"}) == std::vector<std::string>{"s1"});
    CHECK(model.index().at({"ethics"}) == std::vector<std::string>{"s2", "s3"});
    CHECK(model.warnings().size() == 1);
    CHECK(model.warnings()[0].find("s4") != std::string::npos);
    CHECK_THROWS_AS(build_lexical(testing::vocab(kVocab), "de"), ValidationError);
}

TEST_CASE("title match score follows the formula") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    const auto r = testing::record("r", "Quantum computing basics", "", "en");
    const auto list = model.suggest(r, 10);
    REQUIRE(list.size() == 1);
    CHECK(list[0].subject_id == "s1");
    // 0.4 + 0.3*(1/3) + 0.2*(1 - 0/3) + 0.1*(2/4)
    CHECK(list[0].score == expected_score(true, 1, 0, 3, 2));
    CHECK(list[0].score == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("term frequency saturates at three occurrences") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    const auto r = testing::record("r", "Notes", "ethics ethics and ethics again ethics", "en");
    const auto list = model.suggest(r, 10);
    REQUIRE(list.size() == 2);
    // title "notes" is token 0; the abstract starts at token 1
    const double expected = expected_score(false, 4, 1, 7, 1);
    CHECK(list[0].subject_id == "s2");
    CHECK(list[1].subject_id == "s3");
    CHECK(list[0].score == expected);
    CHECK(list[0].score == doctest::Approx(0.3 + 0.2 * (6.0 / 7.0) + 0.025));
}

TEST_CASE("long labels cap the length term and scores stay in [0,1]") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    const auto r = testing::record(
        "r", "Machine learning for quantum computing systems", "machine learning for quantum computing systems "
        "machine learning for quantum computing systems", "en");
    const auto list = model.suggest(r, 10);
    REQUIRE(list.size() == 2);
    CHECK(list[0].subject_id == "s5");
    CHECK(list[0].score == doctest::Approx(1.0));
    CHECK(list[0].score <= 1.0);
    CHECK(is_canonical(list));
}

TEST_CASE("no shared token gives no suggestions; language mismatch is an error") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    CHECK(model.suggest(testing::record("r", "Gardening", "roses", "en"), 10).empty());
    CHECK(model.suggest(testing::record("r", "", "", "en"), 10).empty());
    auto vocab = testing::vocab("id\tlabel_de\tlabel_en\ns1\tEthik\tEthics\n");
    const auto en = build_lexical(vocab, "en");
    CHECK_THROWS_AS(en.suggest(testing::record("r", "Ethik", "", "de"), 10), ValidationError);
}

TEST_CASE("labels must match contiguously") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    const auto list = model.suggest(testing::record("r", "Quantum theory of computing", "", "en"), 10);
    CHECK(list.empty());
}

TEST_CASE("appending label-free text never drops a suggested subject") {
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    std::mt19937_64 rng(11);
    const std::vector<std::string> filler = {"alpha", "beta", "gamma", "delta", "noise", "words"};
    const std::vector<std::string> labels = {"quantum computing", "ethics", "something"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (int i = 0; i < 12; ++i) {
            text += (rng() % 4 == 0 ? labels[rng() % labels.size()] : filler[rng() % filler.size()]) + " ";
        }
        const auto before = model.suggest(testing::record("r", "t", text, "en"), 100);
        std::string extra;
        for (int i = 0; i < 8; ++i) extra += " " + filler[rng() % filler.size()];
        const auto after = model.suggest(testing::record("r", "t", text + extra, "en"), 100);
        for (const auto& s : before) {
            const bool kept = std::any_of(after.begin(), after.end(),
                                          [&](const Suggestion& a) { return a.subject_id == s.subject_id; });
            CHECK(kept);
        }
        // every suggested label really occurs contiguously
        const auto tokens = normalize("t " + text + extra);
        for (const auto& s : after) {
            const auto label = normalize(testing::vocab(kVocab).label(s.subject_id, "en"));
            CHECK(std::search(tokens.begin(), tokens.end(), label.begin(), label.end()) != tokens.end());
        }
    }
}

TEST_CASE("lexical model persists with a versioned header") {
    testing::TempDir dir;
    const auto model = build_lexical(testing::vocab(kVocab), "en");
    save_lexical(model, dir / "lex.model");
    const auto text = read_file(dir / "lex.model");
    CHECK(text.rfind("SUBIX-LEXICAL 1\n", 0) == 0);
    const auto loaded = load_lexical(dir / "lex.model");
    CHECK(loaded.index() == model.index());
    const auto r = testing::record("r", "Quantum computing and ethics", "", "en");
    CHECK(loaded.suggest(r, 10) == model.suggest(r, 10));
    CHECK_THROWS_AS(LexicalModel::deserialize("SUBIX-LEXICAL 9\n", "bad"), ValidationError);
}

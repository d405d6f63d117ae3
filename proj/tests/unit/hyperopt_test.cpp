#include <doctest.h>

#include <random>

#include "subix/error.hpp"
#include "subix/hyperopt.hpp"
#include "subix/metrics.hpp"
#include "support.hpp"

using namespace subix;

namespace {

struct Bench {
    Corpus dev;
    PredictionSet perfect;
    PredictionSet noise;
};

// Source one ranks gold first; source two scores random subjects.
Bench make_bench(std::uint64_t seed, int records = 40, int subjects = 30) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Bench b;
    for (int r = 0; r < records; ++r) {
        const std::string id = "r" + std::to_string(r);
        std::set<std::string> gold;
        const int count = 1 + static_cast<int>(rng() % 3);
        while (static_cast<int>(gold.size()) < count) gold.insert("s" + std::to_string(rng() % subjects));
        b.dev.records.push_back(testing::record(id, "t", "", "en", {gold.begin(), gold.end()}));
        SuggestionList good;
        SuggestionList bad;
        for (int s = 0; s < subjects; ++s) {
            const std::string sid = "s" + std::to_string(s);
            good.push_back({sid, gold.count(sid) ? 0.6 + 0.4 * u(rng) : 0.5 * u(rng)});
            bad.push_back({sid, u(rng)});
        }
        rank_suggestions(good, 100);
        rank_suggestions(bad, 100);
        b.perfect.push_back({id, good});
        b.noise.push_back({id, bad});
    }
    return b;
}

double mean_ndcg(const PredictionSet& predictions, const Corpus& dev) {
    return evaluate(predictions, dev).get("ndcg@20");
}

}  // namespace

TEST_CASE("two-source search prefers the informative source") {
    const auto b = make_bench(1);
    TrialSpec spec;
    spec.trials = 100;
    spec.seed = 5;
    const std::vector<std::string> names = {"perfect", "noise"};
    const std::vector<PredictionSet> sources = {b.perfect, b.noise};
    const auto result = optimise_fusion(names, sources, b.dev, spec);
    CHECK(result.config.sources[0].weight >= 0.9);
    CHECK(result.objective == doctest::Approx(mean_ndcg(b.perfect, b.dev)).epsilon(0.02));
    CHECK(result.trials.size() == 100);
    for (std::size_t t = 1; t < result.trials.size(); ++t) {
        CHECK(result.trials[t].best_so_far >= result.trials[t - 1].best_so_far);
    }
    double sum = 0.0;
    for (const auto& s : result.config.sources) sum += s.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("search is deterministic under a fixed seed") {
    const auto b = make_bench(2);
    TrialSpec spec;
    spec.trials = 40;
    spec.seed = 9;
    const std::vector<std::string> names = {"a", "b"};
    const std::vector<PredictionSet> sources = {b.noise, b.perfect};
    const auto one = optimise_fusion(names, sources, b.dev, spec);
    const auto two = optimise_fusion(names, sources, b.dev, spec);
    CHECK(format_fusion_trials_csv(names, one.trials) == format_fusion_trials_csv(names, two.trials));
    spec.seed = 10;
    const auto three = optimise_fusion(names, sources, b.dev, spec);
    CHECK(format_fusion_trials_csv(names, one.trials) != format_fusion_trials_csv(names, three.trials));
}

TEST_CASE("single source keeps weight one and its own ranking") {
    const auto b = make_bench(3);
    TrialSpec spec;
    spec.trials = 20;
    const std::vector<std::string> names = {"noise"};
    const std::vector<PredictionSet> sources = {b.noise};
    const auto result = optimise_fusion(names, sources, b.dev, spec);
    CHECK(result.config.sources[0].weight == 1.0);
    for (const auto& trial : result.trials) {
        CHECK(trial.objective == doctest::Approx(mean_ndcg(b.noise, b.dev)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(optimise_fusion({}, {}, b.dev, spec), ValidationError);
}

TEST_CASE("trial spec validation") {
    TrialSpec spec;
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = {};
    spec.source_exponent_min = 0.0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = {};
    spec.llm_weight_max = 1.5;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("LLM term search with oracle relevance beats the combined lists") {
    const auto b = make_bench(4);
    // a mediocre combined list: half perfect, half noise
    FusionConfig half;
    half.sources = {{"p", 0.3, 1.0}, {"n", 0.7, 1.0}};
    const PredictionSet inputs[] = {b.perfect, b.noise};
    const auto combined = fuse_simple(half, inputs, 100);

    RelevanceByRecord gold_relevance;
    RelevanceByRecord zeros;
    for (const auto& record : b.dev.records) {
        auto& scores = gold_relevance[record.id];
        auto& zero = zeros[record.id];
        for (int s = 0; s < 30; ++s) {
            const std::string sid = "s" + std::to_string(s);
            const bool is_gold = std::find(record.subjects.begin(), record.subjects.end(), sid) !=
                                 record.subjects.end();
            scores[sid] = is_gold ? 1.0 : 0.0;
            zero[sid] = 0.0;
        }
    }
    TrialSpec spec;
    spec.trials = 60;
    const auto useful = optimise_llm_term(combined, gold_relevance, b.dev, spec);
    CHECK(useful.llm_term_useful);
    CHECK(useful.objective >= useful.baseline_objective);
    CHECK(useful.weight > 0.0);

    const auto useless = optimise_llm_term(combined, zeros, b.dev, spec);
    CHECK_FALSE(useless.llm_term_useful);
    CHECK(useless.objective == useless.baseline_objective);
    for (std::size_t t = 1; t < useless.trials.size(); ++t) {
        CHECK(useless.trials[t].best_so_far >= useless.trials[t - 1].best_so_far);
    }
}

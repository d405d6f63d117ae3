#include "subix/hyperopt.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "subix/error.hpp"
#include "subix/metrics.hpp"
#include "subix/random.hpp"

namespace subix {

namespace {

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

/// Per dev record: its gold set and the list each input gave it.
struct AlignedRecord {
    GoldSet gold;
    std::vector<SuggestionList> lists;
};

std::vector<AlignedRecord> align(std::span<const PredictionSet> sources, const Corpus& dev) {
    std::unordered_set<std::string_view> dev_ids;
    for (const auto& record : dev.records) {
        dev_ids.insert(record.id);
    }
    std::vector<std::unordered_map<std::string_view, const SuggestionList*>> index(sources.size());
    for (std::size_t k = 0; k < sources.size(); ++k) {
        for (const auto& record : sources[k]) {
            if (!dev_ids.contains(record.record_id)) {
                throw ValidationError("source prediction for unknown dev record '" +
                                      record.record_id + "'");
            }
            index[k][record.record_id] = &record.suggestions;
        }
    }
    std::vector<AlignedRecord> aligned;
    aligned.reserve(dev.size());
    for (const auto& record : dev.records) {
        AlignedRecord entry;
        entry.gold = GoldSet(record.subjects.begin(), record.subjects.end());
        for (std::size_t k = 0; k < sources.size(); ++k) {
            auto it = index[k].find(record.id);
            entry.lists.push_back(it == index[k].end() ? SuggestionList{} : *it->second);
        }
        aligned.push_back(std::move(entry));
    }
    return aligned;
}

double mean_ndcg(const std::vector<AlignedRecord>& records, std::size_t k,
                 const std::function<SuggestionList(const AlignedRecord&)>& rank) {
    if (records.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& record : records) {
        sum += ndcg_at_k(rank(record), record.gold, k);
    }
    return sum / static_cast<double>(records.size());
}

}  // namespace

void TrialSpec::validate() const {
    if (trials < 1) {
        throw ValidationError("trial count must be >= 1");
    }
    if (!(source_exponent_min > 0.0 && source_exponent_min <= source_exponent_max)) {
        throw ValidationError("source exponent range must be positive and ordered");
    }
    if (!(llm_exponent_min > 0.0 && llm_exponent_min <= llm_exponent_max)) {
        throw ValidationError("llm exponent range must be positive and ordered");
    }
    if (!(llm_weight_min >= 0.0 && llm_weight_min <= llm_weight_max && llm_weight_max <= 1.0)) {
        throw ValidationError("llm weight range must lie within [0, 1]");
    }
    if (ndcg_k < 1) {
        throw ValidationError("nDCG cut-off must be >= 1");
    }
}

FusionSearchResult optimise_fusion(std::span<const std::string> source_names,
                                   std::span<const PredictionSet> sources, const Corpus& dev,
                                   const TrialSpec& spec) {
    spec.validate();
    if (sources.empty()) {
        throw ValidationError("hyperopt needs at least one source");
    }
    if (source_names.size() != sources.size()) {
        throw ValidationError("source names and prediction sets differ in count");
    }
    const auto aligned = align(sources, dev);
    const std::size_t n = sources.size();

    FusionConfig config;
    for (const auto& name : source_names) {
        config.sources.push_back({name, 0.0, 1.0});
    }
    config.sources.front().weight = 1.0;

    Rng rng(spec.seed);
    FusionSearchResult result;
    result.objective = -1.0;
    for (std::size_t t = 0; t < spec.trials; ++t) {
        FusionTrial trial;
        trial.index = t;
        trial.weights.assign(n, 0.0);
        trial.exponents.assign(n, 1.0);
        if (spec.include_baselines && t < n) {
            trial.weights[t] = 1.0;
        } else {
            if (n == 1) {
                trial.weights[0] = 1.0;
            } else {
                double total = 0.0;
                for (auto& w : trial.weights) {
                    w = rng.exponential();
                    total += w;
                }
                double partial = 0.0;
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    trial.weights[k] /= total;
                    partial += trial.weights[k];
                }
                trial.weights[n - 1] = std::max(0.0, 1.0 - partial);
            }
            for (auto& p : trial.exponents) {
                p = rng.log_uniform(spec.source_exponent_min, spec.source_exponent_max);
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            config.sources[k].weight = trial.weights[k];
            config.sources[k].exponent = trial.exponents[k];
        }
        trial.objective = mean_ndcg(aligned, spec.ndcg_k, [&](const AlignedRecord& record) {
            return fuse_simple(config, record.lists, spec.ndcg_k);
        });
        if (trial.objective > result.objective) {
            result.objective = trial.objective;
            result.config = config;
        }
        trial.best_so_far = result.objective;
        result.trials.push_back(std::move(trial));
    }
    result.config.validate();
    return result;
}

LlmTermSearchResult optimise_llm_term(const PredictionSet& combined,
                                      const RelevanceByRecord& relevance, const Corpus& dev,
                                      const TrialSpec& spec, std::size_t candidates) {
    spec.validate();
    const PredictionSet sources[] = {combined};
    const auto aligned = align(sources, dev);
    static const RelevanceScores kNoScores;

    std::vector<const RelevanceScores*> per_record;
    per_record.reserve(dev.size());
    for (const auto& record : dev.records) {
        auto it = relevance.find(record.id);
        per_record.push_back(it == relevance.end() ? &kNoScores : &it->second);
    }

    FusionConfig config;
    config.sources.push_back({"combined", 1.0, 1.0});
    config.candidates = candidates;

    auto objective = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < aligned.size(); ++i) {
            const auto ranked =
                fuse_llm(config, aligned[i].lists[0], *per_record[i], spec.ndcg_k);
            sum += ndcg_at_k(ranked, aligned[i].gold, spec.ndcg_k);
        }
        return aligned.empty() ? 0.0 : sum / static_cast<double>(aligned.size());
    };

    config.llm_weight = 0.0;
    config.llm_exponent = 1.0;
    LlmTermSearchResult result;
    result.baseline_objective = objective();
    result.objective = -1.0;

    Rng rng(spec.seed);
    for (std::size_t t = 0; t < spec.trials; ++t) {
        LlmTrial trial;
        trial.index = t;
        if (spec.include_baselines && t == 0) {
            trial.weight = 0.0;
            trial.exponent = 1.0;
        } else {
            trial.weight = rng.uniform(spec.llm_weight_min, spec.llm_weight_max);
            trial.exponent = rng.log_uniform(spec.llm_exponent_min, spec.llm_exponent_max);
        }
        config.llm_weight = trial.weight;
        config.llm_exponent = trial.exponent;
        trial.objective = objective();
        if (trial.objective > result.objective) {
            result.objective = trial.objective;
            result.weight = trial.weight;
            result.exponent = trial.exponent;
        }
        trial.best_so_far = result.objective;
        result.trials.push_back(trial);
    }
    result.llm_term_useful = result.objective > result.baseline_objective;
    return result;
}

std::string format_fusion_trials_csv(std::span<const std::string> source_names,
                                     const std::vector<FusionTrial>& trials) {
    std::string out = "trial";
    for (const auto& name : source_names) {
        out += ",weight_" + name;
    }
    for (const auto& name : source_names) {
        out += ",exponent_" + name;
    }
    out += ",objective,best_so_far\n";
    for (const auto& trial : trials) {
        out += std::to_string(trial.index);
        for (double w : trial.weights) {
            out += "," + format_double(w);
        }
        for (double p : trial.exponents) {
            out += "," + format_double(p);
        }
        out += "," + format_double(trial.objective) + "," + format_double(trial.best_so_far) + "\n";
    }
    return out;
}

std::string format_llm_trials_csv(const std::vector<LlmTrial>& trials) {
    std::string out = "trial,weight,exponent,objective,best_so_far\n";
    for (const auto& trial : trials) {
        out += std::to_string(trial.index) + "," + format_double(trial.weight) + "," +
               format_double(trial.exponent) + "," + format_double(trial.objective) + "," +
               format_double(trial.best_so_far) + "\n";
    }
    return out;
}

}  // namespace subix

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "subix/corpus.hpp"
#include "subix/fusion.hpp"
#include "subix/suggestion.hpp"

namespace subix {

/// Random-search budget and priors. Source weights come from a flat
/// Dirichlet; exponents are log-uniform within their ranges.
struct TrialSpec {
    std::size_t trials = 400;
    double source_exponent_min = 0.5;
    double source_exponent_max = 2.0;
    double llm_exponent_min = 0.5;
    double llm_exponent_max = 12.0;
    double llm_weight_min = 0.0;
    double llm_weight_max = 0.5;
    std::uint64_t seed = 0;
    std::size_t ndcg_k = 20;
    /// Spend the first trials on the single-source configurations (and on
    /// w = 0 for the LLM term) so the result is never worse than a baseline.
    bool include_baselines = true;

    void validate() const;
};

struct FusionTrial {
    std::size_t index = 0;
    std::vector<double> weights;
    std::vector<double> exponents;
    double objective = 0.0;
    double best_so_far = 0.0;
};

struct FusionSearchResult {
    FusionConfig config;
    double objective = 0.0;
    std::vector<FusionTrial> trials;
};

/// Maximises mean nDCG@k of `fuse_simple` over `dev`. Sources are frozen
/// prediction sets (one per name); records missing from a source count as
/// empty lists.
FusionSearchResult optimise_fusion(std::span<const std::string> source_names,
                                   std::span<const PredictionSet> sources, const Corpus& dev,
                                   const TrialSpec& spec);

struct LlmTrial {
    std::size_t index = 0;
    double weight = 0.0;
    double exponent = 1.0;
    double objective = 0.0;
    double best_so_far = 0.0;
};

struct LlmTermSearchResult {
    double weight = 0.0;
    double exponent = 1.0;
    double objective = 0.0;
    double baseline_objective = 0.0;  ///< the combined lists alone (w = 0)
    bool llm_term_useful = false;     ///< best objective strictly beats the baseline
    std::vector<LlmTrial> trials;
};

using RelevanceByRecord = std::map<std::string, RelevanceScores>;

/// Searches (w, p) of the LLM blending term over precomputed relevance scores.
LlmTermSearchResult optimise_llm_term(const PredictionSet& combined,
                                      const RelevanceByRecord& relevance, const Corpus& dev,
                                      const TrialSpec& spec, std::size_t candidates = 100);

std::string format_fusion_trials_csv(std::span<const std::string> source_names,
                                     const std::vector<FusionTrial>& trials);
std::string format_llm_trials_csv(const std::vector<LlmTrial>& trials);

}  // namespace subix

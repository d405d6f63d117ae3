#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "subix/suggestion.hpp"

namespace subix {

struct SourceWeight {
    std::string name;
    double weight = 0.0;    ///< w_k >= 0, all weights sum to 1
    double exponent = 1.0;  ///< p_k > 0
};

/// Weights and exponents for the simple ensemble plus the LLM blending term.
struct FusionConfig {
    std::vector<SourceWeight> sources;
    double llm_weight = 0.0;    ///< w in [0, 1]
    double llm_exponent = 1.0;  ///< p > 0
    std::size_t candidates = 100;  ///< K, the candidate window sent to the LLM

    /// Throws ValidationError unless weights sum to 1 (±1e-9), exponents are
    /// positive and K >= 1.
    void validate() const;
};

inline constexpr double kWeightSumTolerance = 1e-9;

/// `[source.<name>]` sections with `weight`/`exponent`, plus an optional
/// `[llm]` section with `weight`, `exponent`, `candidates`.
FusionConfig parse_fusion_config(std::string_view text, const std::string& source_name);
FusionConfig load_fusion_config(const std::filesystem::path& path);
std::string format_fusion_config(const FusionConfig& config);

/// subject id -> LLM relevance rescaled to [0, 1]
using RelevanceScores = std::map<SubjectId, double>;

/// f = sum_k w_k * x_k^p_k, with x_k = 0 for subjects a source did not suggest.
/// `inputs` are matched positionally to `config.sources`.
SuggestionList fuse_simple(const FusionConfig& config, std::span<const SuggestionList> inputs,
                           std::size_t limit);

/// f = w * r^p + (1 - w) * x inside the top-K window of `combined`
/// (r = 0 where the LLM gave no score); entries past K get (1 - w) * x.
SuggestionList fuse_llm(const FusionConfig& config, const SuggestionList& combined,
                        const RelevanceScores& relevance, std::size_t limit);

/// Per-subject sum of scores across both lists; raw sums, not renormalized.
SuggestionList merge_bilingual(const SuggestionList& a, const SuggestionList& b,
                               std::size_t limit);

/// Record-level helpers. Records are matched by id; the output follows the
/// order in which record ids first appear across the inputs.
PredictionSet fuse_simple(const FusionConfig& config, std::span<const PredictionSet> sources,
                          std::size_t limit);
PredictionSet merge_bilingual(const PredictionSet& a, const PredictionSet& b, std::size_t limit);

}  // namespace subix

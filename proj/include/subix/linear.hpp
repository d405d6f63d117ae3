#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subix/corpus.hpp"
#include "subix/suggestion.hpp"
#include "subix/vocabulary.hpp"

namespace subix {

/// Sparse vector sorted by feature index.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

double dot(const SparseVector& a, const SparseVector& b);
double l2_norm(const SparseVector& v);
void normalize_l2(SparseVector& v);

/// TF-IDF n-gram feature space learned from training text.
///
/// idf(g) = ln((1 + N) / (1 + df(g))) + 1, with N the training document count.
/// Only n-grams with df >= min_df are kept.
class FeatureSpace {
public:
    FeatureSpace() = default;

    static FeatureSpace fit(const std::vector<std::vector<std::string>>& documents, int ngram,
                            int min_df);

    /// Unit-length TF-IDF vector (raw counts times idf); all-zero when nothing matches.
    SparseVector vectorize(const std::vector<std::string>& tokens) const;

    std::size_t size() const { return ngrams_.size(); }
    int ngram() const { return ngram_; }
    int min_df() const { return min_df_; }
    std::size_t document_count() const { return document_count_; }
    const std::vector<std::string>& ngrams() const { return ngrams_; }
    const std::vector<std::uint32_t>& document_frequencies() const { return df_; }
    const std::vector<double>& idf() const { return idf_; }

    std::string serialize() const;
    static FeatureSpace deserialize(std::string_view text, const std::string& source_name);

private:
    int ngram_ = 2;
    int min_df_ = 5;
    std::size_t document_count_ = 0;
    std::vector<std::string> ngrams_;  // sorted
    std::vector<std::uint32_t> df_;
    std::vector<double> idf_;
    std::unordered_map<std::string, std::uint32_t> lookup_;

    void rebuild_lookup();
};

/// All 1..n token n-grams of a document, bigrams joined by a single space.
std::vector<std::string> extract_ngrams(const std::vector<std::string>& tokens, int ngram);

/// Two-level tree: clusters of subjects, each with a unit centroid, and one
/// unit prototype per subject.
struct LabelTree {
    std::vector<SubjectId> subjects;  // sorted by id
    std::vector<SparseVector> prototypes;
    std::vector<std::vector<std::uint32_t>> clusters;  // subject indices
    std::vector<SparseVector> centroids;
};

struct LinearParams {
    int ngram = 2;
    int min_df = 5;
    int clusters = 0;  ///< 0 selects ceil(sqrt(#subjects))
    int beam = 10;
    std::uint64_t seed = 1;
    int max_iterations = 25;
};

class LinearModel {
public:
    LinearModel() = default;
    LinearModel(LanguageCode language, LinearParams params, FeatureSpace features, LabelTree tree)
        : language_(std::move(language)),
          params_(params),
          features_(std::move(features)),
          tree_(std::move(tree)) {}

    const LanguageCode& language() const { return language_; }
    const LinearParams& params() const { return params_; }
    const FeatureSpace& features() const { return features_; }
    const LabelTree& tree() const { return tree_; }

    SparseVector vectorize(const Record& record) const;

    /// Beam-routed scoring: top-`beam` clusters by centroid cosine, then
    /// max(0, cosine) against each prototype in those clusters.
    SuggestionList suggest(const Record& record, std::size_t limit) const;
    /// Scores every subject, ignoring the tree.
    SuggestionList suggest_flat(const Record& record, std::size_t limit) const;

private:
    LanguageCode language_;
    LinearParams params_;
    FeatureSpace features_;
    LabelTree tree_;

    void check_language(const Record& record) const;
    SuggestionList score_subjects(const SparseVector& query,
                                  const std::vector<std::uint32_t>& candidates,
                                  std::size_t limit) const;
};

/// Spherical k-means over unit vectors; returns the cluster of each point.
/// Deterministic for a given seed. Empty clusters are reseeded from the point
/// farthest from its current centroid.
std::vector<std::uint32_t> spherical_kmeans(const std::vector<SparseVector>& points,
                                            std::size_t cluster_count, std::uint64_t seed,
                                            int max_iterations);

LinearModel train_linear(const Corpus& corpus, const SubjectVocabulary& vocabulary,
                         const LanguageCode& language, const LinearParams& params);
SuggestionList suggest_linear(const LinearModel& model, const Record& record, std::size_t limit);

/// Writes `features.txt` and `tree.txt` into `directory`.
void save_linear(const LinearModel& model, const std::filesystem::path& directory);
LinearModel load_linear(const std::filesystem::path& directory);

}  // namespace subix

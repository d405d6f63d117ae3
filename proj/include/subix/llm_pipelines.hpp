#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subix/corpus.hpp"
#include "subix/fusion.hpp"
#include "subix/hyperopt.hpp"
#include "subix/llm_client.hpp"
#include "subix/vocabulary.hpp"

namespace subix {

// ---------------------------------------------------------------------------
// Completion parsing

/// Splits a completion at its first line break: the first line is the title,
/// the trimmed remainder the abstract.
std::pair<std::string, std::string> split_title_abstract(std::string_view completion);

/// Finds the first balanced {...} span that parses as a JSON object, skipping
/// any prose or code fences around it.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

// ---------------------------------------------------------------------------
// Translation

struct TranslationResult {
    Record record;
    bool failed = false;  ///< empty completion; record passed through untranslated
};

TranslationResult translate_record(LlmClient& client, const Record& record,
                                   const LanguageCode& target);

// ---------------------------------------------------------------------------
// Synthetic records

struct SyntheticRecord {
    Record record;
    std::string generator_model;
    std::string source_record_id;
    SubjectId added_subject;
};

/// Subjects of at least one record in `train`, sorted by id.
std::vector<SubjectId> subjects_in_corpus(const Corpus& train);

/// `pool` minus the source record's own subjects.
std::vector<SubjectId> eligible_subjects(const std::vector<SubjectId>& pool, const Record& source);

/// Picks one eligible subject with a seeded draw and asks the LLM for a new
/// record about the source subjects plus that one. An empty completion is
/// retried once; std::nullopt means the record was skipped.
std::optional<SyntheticRecord> synthesize_record(LlmClient& client, const Record& source,
                                                 const SubjectVocabulary& vocabulary,
                                                 const std::vector<SubjectId>& eligible,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Candidate ranking

struct Candidate {
    SubjectId subject_id;
    std::string label;
};

struct RankResult {
    RelevanceScores scores;     ///< exactly the candidate subjects, values in [0, 1]
    bool parse_failed = false;  ///< no JSON object even after one retry; all scores 0
};

/// Applies the reply-parsing contract: case-insensitive trimmed key match,
/// clamp to [0,100], divide by 100, missing keywords score 0.
RelevanceScores scores_from_reply(const nlohmann::json& reply,
                                  const std::vector<Candidate>& candidates);

RankResult rank_candidates(LlmClient& client, const std::string& text,
                           const std::vector<Candidate>& candidates, std::size_t max_candidates);

// ---------------------------------------------------------------------------
// Batches, throughput and model selection

struct JobStats {
    std::size_t completed = 0;
    std::size_t failed = 0;
    double elapsed_seconds = 0.0;
};

/// Completed records per wall-clock second; failures cost time but do not count.
double measure_throughput(const JobStats& job);

inline constexpr double kDefaultAlpha = 0.003;

struct ModelScore {
    std::string model_id;
    double ndcg = 0.0;
    double throughput = 0.0;
    double alpha = kDefaultAlpha;
    double score = 0.0;  ///< ndcg + alpha * throughput
};

/// Quality/efficiency trade-off score for choosing an LLM.
ModelScore score_model(double ndcg, double throughput, double alpha = kDefaultAlpha,
                       std::string model_id = {});

/// Runs `task(i)` for i in [0, count) on up to `parallelism` threads.
/// The first exception thrown by any task is rethrown after all threads stop.
void parallel_for(std::size_t count, std::size_t parallelism,
                  const std::function<void(std::size_t)>& task);

struct TranslatedCorpus {
    Corpus corpus;
    JobStats stats;
};

TranslatedCorpus translate_corpus(LlmClient& client, const Corpus& corpus,
                                  const LanguageCode& target);

struct SyntheticCorpus {
    Corpus corpus;
    std::vector<SyntheticRecord> provenance;
    JobStats stats;
};

/// One synthetic record per source record (minus skips). Per-record seeds are
/// derived from `seed` and the record position, so output order and content
/// do not depend on scheduling.
SyntheticCorpus synthesize_corpus(LlmClient& client, const Corpus& train,
                                  const SubjectVocabulary& vocabulary, std::uint64_t seed);

std::string format_provenance_tsv(const std::vector<SyntheticRecord>& records);

struct RankedPredictions {
    RelevanceByRecord relevance;
    std::size_t parse_failures = 0;
    JobStats stats;
};

/// Asks the LLM to score the top `max_candidates` subjects of every record's
/// combined list, using labels in `language`.
RankedPredictions rank_predictions(LlmClient& client, const Corpus& corpus,
                                   const PredictionSet& combined,
                                   const SubjectVocabulary& vocabulary,
                                   const LanguageCode& language, std::size_t max_candidates);

std::string format_relevance(const RelevanceByRecord& relevance);
RelevanceByRecord parse_relevance(std::string_view text, const std::string& source_name);

/// Telemetry file body: request counters plus job throughput.
std::string format_telemetry(const TelemetrySnapshot& telemetry, const JobStats& job);

}  // namespace subix

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "subix/vocabulary.hpp"

namespace subix {

struct Suggestion {
    SubjectId subject_id;
    double score = 0.0;

    bool operator==(const Suggestion&) const = default;
};

/// Ranked predictions: descending score, ties by ascending subject id, no duplicates.
using SuggestionList = std::vector<Suggestion>;

/// Sorts into canonical order and keeps the first `limit` entries.
void rank_suggestions(SuggestionList& list, std::size_t limit);

/// Checks ordering, uniqueness and (optionally) that scores are in [0,1].
bool is_canonical(const SuggestionList& list, bool unit_interval = true);

struct RecordSuggestions {
    std::string record_id;
    SuggestionList suggestions;

    bool operator==(const RecordSuggestions&) const = default;
};

using PredictionSet = std::vector<RecordSuggestions>;

inline constexpr std::size_t kDefaultSuggestionLimit = 20;

/// One line per record: {"record_id": ..., "suggestions": [{"subject_id", "score"}...]}.
/// Lists longer than `limit` are truncated with a warning.
std::string format_suggestions(const PredictionSet& predictions,
                               std::size_t limit = kDefaultSuggestionLimit);
void write_suggestions(const std::filesystem::path& path, const PredictionSet& predictions,
                       std::size_t limit = kDefaultSuggestionLimit);

PredictionSet parse_suggestions(std::string_view text, const std::string& source_name);
PredictionSet read_suggestions(const std::filesystem::path& path);

}  // namespace subix

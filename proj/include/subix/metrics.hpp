#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "subix/corpus.hpp"
#include "subix/suggestion.hpp"

namespace subix {

using GoldSet = std::set<SubjectId>;

// Binary-relevance ranking metrics. All return 0 when `gold` is empty.

double precision_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k);
double recall_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k);
double f1_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k);

/// DCG over the first min(k, len) items with 1/log2(i+1) discounts, divided
/// by the ideal DCG truncated at min(k, |gold|).
double ndcg_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k);

/// Precision at rank |gold|.
double r_precision(const SuggestionList& ranked, const GoldSet& gold);

struct EvalOptions {
    std::size_t f1_k = 5;
    std::size_t ndcg_k = 20;
    /// When set, corpus records without a prediction are an error instead of
    /// being scored as empty predictions.
    bool require_full_coverage = false;
};

struct EvalReport {
    std::size_t record_count = 0;
    std::size_t f1_k = 5;
    std::size_t ndcg_k = 20;
    /// metric name -> sample-averaged value, in a fixed order
    std::vector<std::pair<std::string, double>> metrics;

    double get(const std::string& name) const;
};

/// Per-record metrics, arithmetic mean over every corpus record.
EvalReport evaluate(const PredictionSet& predictions, const Corpus& corpus,
                    const EvalOptions& options = {});

/// `name<TAB>value` per line plus a `records` line.
std::string format_report_tsv(const EvalReport& report);
/// Aligned two-column table for terminals.
std::string format_report_table(const EvalReport& report);

}  // namespace subix

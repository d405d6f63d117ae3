#include "subix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "subix/error.hpp"

namespace subix {

namespace {

std::size_t hits_in_top(const SuggestionList& ranked, const GoldSet& gold, std::size_t k) {
    std::size_t hits = 0;
    const auto n = std::min(k, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
        hits += gold.contains(ranked[i].subject_id) ? 1 : 0;
    }
    return hits;
}

std::string format_value(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", value);
    return buffer;
}

}  // namespace

double precision_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k) {
    if (gold.empty() || k == 0) {
        return 0.0;
    }
    return static_cast<double>(hits_in_top(ranked, gold, k)) / static_cast<double>(k);
}

double recall_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k) {
    if (gold.empty()) {
        return 0.0;
    }
    return static_cast<double>(hits_in_top(ranked, gold, k)) / static_cast<double>(gold.size());
}

double f1_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k) {
    const double p = precision_at_k(ranked, gold, k);
    const double r = recall_at_k(ranked, gold, k);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double ndcg_at_k(const SuggestionList& ranked, const GoldSet& gold, std::size_t k) {
    if (gold.empty() || k == 0) {
        return 0.0;
    }
    double dcg = 0.0;
    const auto n = std::min(k, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (gold.contains(ranked[i].subject_id)) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    double ideal = 0.0;
    const auto m = std::min(k, gold.size());
    for (std::size_t i = 0; i < m; ++i) {
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / ideal;
}

double r_precision(const SuggestionList& ranked, const GoldSet& gold) {
    if (gold.empty()) {
        return 0.0;
    }
    return static_cast<double>(hits_in_top(ranked, gold, gold.size())) /
           static_cast<double>(gold.size());
}

double EvalReport::get(const std::string& name) const {
    for (const auto& [metric, value] : metrics) {
        if (metric == name) {
            return value;
        }
    }
    throw ValidationError("report has no metric '" + name + "'");
}

EvalReport evaluate(const PredictionSet& predictions, const Corpus& corpus,
                    const EvalOptions& options) {
    if (options.f1_k < 1 || options.ndcg_k < 1) {
        throw ValidationError("metric cut-offs must be >= 1");
    }
    std::unordered_map<std::string_view, const SuggestionList*> by_record;
    std::unordered_map<std::string_view, bool> in_corpus;
    for (const auto& record : corpus.records) {
        in_corpus.emplace(record.id, true);
    }
    for (const auto& prediction : predictions) {
        if (!in_corpus.contains(prediction.record_id)) {
            throw ValidationError("prediction for unknown record '" + prediction.record_id + "'");
        }
        by_record[prediction.record_id] = &prediction.suggestions;
    }

    const std::string k = std::to_string(options.f1_k);
    const std::string nk = std::to_string(options.ndcg_k);
    EvalReport report;
    report.record_count = corpus.size();
    report.f1_k = options.f1_k;
    report.ndcg_k = options.ndcg_k;
    report.metrics = {{"precision@" + k, 0.0}, {"recall@" + k, 0.0}, {"f1@" + k, 0.0},
                      {"ndcg@" + nk, 0.0},     {"r-precision", 0.0}};

    static const SuggestionList kEmpty;
    for (const auto& record : corpus.records) {
        auto it = by_record.find(record.id);
        if (it == by_record.end() && options.require_full_coverage) {
            throw ValidationError("no prediction for record '" + record.id + "'");
        }
        const auto& ranked = it == by_record.end() ? kEmpty : *it->second;
        const GoldSet gold(record.subjects.begin(), record.subjects.end());
        report.metrics[0].second += precision_at_k(ranked, gold, options.f1_k);
        report.metrics[1].second += recall_at_k(ranked, gold, options.f1_k);
        report.metrics[2].second += f1_at_k(ranked, gold, options.f1_k);
        report.metrics[3].second += ndcg_at_k(ranked, gold, options.ndcg_k);
        report.metrics[4].second += r_precision(ranked, gold);
    }
    if (corpus.size() > 0) {
        for (auto& metric : report.metrics) {
            metric.second /= static_cast<double>(corpus.size());
        }
    }
    return report;
}

std::string format_report_tsv(const EvalReport& report) {
    std::string out = "records\t" + std::to_string(report.record_count) + "\n";
    for (const auto& [name, value] : report.metrics) {
        char buffer[32];
        std::snprintf(buffer, sizeof buffer, "%.17g", value);
        out += name + "\t" + buffer + "\n";
    }
    return out;
}

std::string format_report_table(const EvalReport& report) {
    std::string out = "metric         value\n";
    out += "-------------  --------\n";
    for (const auto& [name, value] : report.metrics) {
        std::string padded = name;
        padded.resize(std::max<std::size_t>(padded.size(), 13), ' ');
        out += padded + "  " + format_value(value) + "\n";
    }
    out += "records: " + std::to_string(report.record_count) + "\n";
    return out;
}

}  // namespace subix

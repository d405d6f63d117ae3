#include "subix/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/ini.hpp"

namespace subix {

namespace {

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

/// Record ids in order of first appearance, each with its list per input.
template <typename Fn>
PredictionSet align_records(std::span<const PredictionSet> inputs, Fn&& combine) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const SuggestionList*>> lists;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (const auto& record : inputs[k]) {
            auto [it, inserted] = lists.try_emplace(record.record_id);
            if (inserted) {
                order.push_back(record.record_id);
                it->second.assign(inputs.size(), nullptr);
            }
            if (it->second[k] != nullptr) {
                throw ValidationError("record '" + record.record_id +
                                      "' appears twice in one prediction set");
            }
            it->second[k] = &record.suggestions;
        }
    }
    static const SuggestionList kEmpty;
    PredictionSet out;
    out.reserve(order.size());
    for (const auto& id : order) {
        std::vector<SuggestionList> per_source;
        per_source.reserve(inputs.size());
        for (const auto* list : lists.at(id)) {
            per_source.push_back(list ? *list : kEmpty);
        }
        out.push_back({id, combine(per_source)});
    }
    return out;
}

}  // namespace

void FusionConfig::validate() const {
    if (sources.empty()) {
        throw ValidationError("fusion config has no sources");
    }
    double sum = 0.0;
    for (const auto& source : sources) {
        if (!(source.weight >= 0.0) || !std::isfinite(source.weight)) {
            throw ValidationError("source '" + source.name + "' has negative weight");
        }
        if (!(source.exponent > 0.0) || !std::isfinite(source.exponent)) {
            throw ValidationError("source '" + source.name + "' exponent must be > 0");
        }
        sum += source.weight;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        throw ValidationError("source weights sum to " + format_double(sum) + ", expected 1.0");
    }
    if (!(llm_weight >= 0.0 && llm_weight <= 1.0)) {
        throw ValidationError("llm weight must be in [0, 1]");
    }
    if (!(llm_exponent > 0.0) || !std::isfinite(llm_exponent)) {
        throw ValidationError("llm exponent must be > 0");
    }
    if (candidates < 1) {
        throw ValidationError("llm candidate count must be >= 1");
    }
}

FusionConfig parse_fusion_config(std::string_view text, const std::string& source_name) {
    const auto doc = IniDocument::parse(text, source_name);
    FusionConfig config;
    for (const auto& section : doc.sections()) {
        if (section.name.starts_with("source.")) {
            SourceWeight source;
            source.name = section.name.substr(7);
            if (source.name.empty()) {
                throw ValidationError(source_name + ": empty source name");
            }
            const auto weight = section.get("weight");
            if (!weight) {
                throw ValidationError(source_name + ": [" + section.name + "] lacks weight");
            }
            source.weight = parse_real(*weight, source_name + " [" + section.name + "] weight");
            source.exponent = doc.get_double(section.name, "exponent", 1.0);
            config.sources.push_back(std::move(source));
        } else if (section.name == "llm") {
            config.llm_weight = doc.get_double("llm", "weight", 0.0);
            config.llm_exponent = doc.get_double("llm", "exponent", 1.0);
            const auto candidates = doc.get_int("llm", "candidates", 100);
            if (candidates < 1) {
                throw ValidationError(source_name + ": [llm] candidates must be >= 1");
            }
            config.candidates = static_cast<std::size_t>(candidates);
        } else {
            throw ValidationError(source_name + ": unknown section [" + section.name + "]");
        }
    }
    config.validate();
    return config;
}

FusionConfig load_fusion_config(const std::filesystem::path& path) {
    return parse_fusion_config(read_file(path), path.string());
}

std::string format_fusion_config(const FusionConfig& config) {
    std::string out;
    for (const auto& source : config.sources) {
        out += "[source." + source.name + "]\n";
        out += "weight = " + format_double(source.weight) + "\n";
        out += "exponent = " + format_double(source.exponent) + "\n\n";
    }
    out += "[llm]\n";
    out += "weight = " + format_double(config.llm_weight) + "\n";
    out += "exponent = " + format_double(config.llm_exponent) + "\n";
    out += "candidates = " + std::to_string(config.candidates) + "\n";
    return out;
}

SuggestionList fuse_simple(const FusionConfig& config, std::span<const SuggestionList> inputs,
                           std::size_t limit) {
    config.validate();
    if (inputs.size() != config.sources.size()) {
        throw ValidationError("fusion expects " + std::to_string(config.sources.size()) +
                              " sources, got " + std::to_string(inputs.size()));
    }
    std::unordered_map<std::string_view, double> combined;
    std::vector<std::string_view> order;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto& source = config.sources[k];
        for (const auto& suggestion : inputs[k]) {
            auto [it, inserted] = combined.try_emplace(suggestion.subject_id, 0.0);
            if (inserted) {
                order.push_back(suggestion.subject_id);
            }
            it->second += source.weight * std::pow(suggestion.score, source.exponent);
        }
    }
    SuggestionList out;
    out.reserve(order.size());
    for (auto id : order) {
        out.push_back({std::string(id), combined.at(id)});
    }
    rank_suggestions(out, limit);
    return out;
}

SuggestionList fuse_llm(const FusionConfig& config, const SuggestionList& combined,
                        const RelevanceScores& relevance, std::size_t limit) {
    config.validate();
    const double w = config.llm_weight;
    SuggestionList out;
    out.reserve(combined.size());
    for (std::size_t i = 0; i < combined.size(); ++i) {
        const auto& entry = combined[i];
        double score = (1.0 - w) * entry.score;
        if (i < config.candidates) {
            auto it = relevance.find(entry.subject_id);
            const double r = it == relevance.end() ? 0.0 : it->second;
            score = w * std::pow(r, config.llm_exponent) + score;
        }
        out.push_back({entry.subject_id, score});
    }
    rank_suggestions(out, limit);
    return out;
}

SuggestionList merge_bilingual(const SuggestionList& a, const SuggestionList& b,
                               std::size_t limit) {
    std::unordered_map<std::string_view, double> sums;
    std::vector<std::string_view> order;
    for (const auto* list : {&a, &b}) {
        for (const auto& suggestion : *list) {
            auto [it, inserted] = sums.try_emplace(suggestion.subject_id, 0.0);
            if (inserted) {
                order.push_back(suggestion.subject_id);
            }
            it->second += suggestion.score;
        }
    }
    SuggestionList out;
    out.reserve(order.size());
    for (auto id : order) {
        out.push_back({std::string(id), sums.at(id)});
    }
    rank_suggestions(out, limit);
    return out;
}

PredictionSet fuse_simple(const FusionConfig& config, std::span<const PredictionSet> sources,
                          std::size_t limit) {
    config.validate();
    if (sources.size() != config.sources.size()) {
        throw ValidationError("fusion expects " + std::to_string(config.sources.size()) +
                              " prediction sets, got " + std::to_string(sources.size()));
    }
    return align_records(sources, [&](const std::vector<SuggestionList>& lists) {
        return fuse_simple(config, lists, limit);
    });
}

PredictionSet merge_bilingual(const PredictionSet& a, const PredictionSet& b, std::size_t limit) {
    const PredictionSet inputs[] = {a, b};
    return align_records(inputs, [&](const std::vector<SuggestionList>& lists) {
        return merge_bilingual(lists[0], lists[1], limit);
    });
}

}  // namespace subix

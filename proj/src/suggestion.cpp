#include "subix/suggestion.hpp"

#include <json.hpp>

#include <algorithm>
#include <unordered_set>

#include "subix/error.hpp"
#include "subix/fileio.hpp"

namespace subix {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool ranks_before(const Suggestion& a, const Suggestion& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.subject_id < b.subject_id;
}

}  // namespace

void rank_suggestions(SuggestionList& list, std::size_t limit) {
    if (list.size() > limit) {
        std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(limit),
                          list.end(), ranks_before);
        list.resize(limit);
    } else {
        std::sort(list.begin(), list.end(), ranks_before);
    }
}

bool is_canonical(const SuggestionList& list, bool unit_interval) {
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!seen.insert(list[i].subject_id).second) {
            return false;
        }
        if (unit_interval && !(list[i].score >= 0.0 && list[i].score <= 1.0)) {
            return false;
        }
        if (i > 0 && !ranks_before(list[i - 1], list[i])) {
            return false;
        }
    }
    return true;
}

std::string format_suggestions(const PredictionSet& predictions, std::size_t limit) {
    std::string out;
    for (const auto& record : predictions) {
        ordered_json line;
        line["record_id"] = record.record_id;
        auto entries = ordered_json::array();
        if (record.suggestions.size() > limit) {
            log::warn("record '" + record.record_id + "' has " +
                      std::to_string(record.suggestions.size()) +
                      " suggestions; truncating to " + std::to_string(limit));
        }
        const auto count = std::min(limit, record.suggestions.size());
        for (std::size_t i = 0; i < count; ++i) {
            ordered_json entry;
            entry["subject_id"] = record.suggestions[i].subject_id;
            entry["score"] = record.suggestions[i].score;
            entries.push_back(std::move(entry));
        }
        line["suggestions"] = std::move(entries);
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

void write_suggestions(const std::filesystem::path& path, const PredictionSet& predictions,
                       std::size_t limit) {
    write_file_atomic(path, format_suggestions(predictions, limit));
}

PredictionSet parse_suggestions(std::string_view text, const std::string& source_name) {
    PredictionSet predictions;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) {
            return;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        json object;
        try {
            object = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed line: " + e.what());
        }
        if (!object.is_object() || !object.contains("record_id") ||
            !object["record_id"].is_string() || !object.contains("suggestions") ||
            !object["suggestions"].is_array()) {
            throw ValidationError(where + ": expected {record_id, suggestions}");
        }
        RecordSuggestions record;
        record.record_id = object["record_id"].get<std::string>();
        for (const auto& entry : object["suggestions"]) {
            if (!entry.is_object() || !entry.contains("subject_id") ||
                !entry["subject_id"].is_string() || !entry.contains("score") ||
                !entry["score"].is_number()) {
                throw ValidationError(where + ": malformed suggestion entry");
            }
            record.suggestions.push_back(
                {entry["subject_id"].get<std::string>(), entry["score"].get<double>()});
        }
        if (!is_canonical(record.suggestions, false)) {
            throw ValidationError(where + ": suggestions not in descending score order");
        }
        predictions.push_back(std::move(record));
    });
    return predictions;
}

PredictionSet read_suggestions(const std::filesystem::path& path) {
    return parse_suggestions(read_file(path), path.string());
}

}  // namespace subix

#include "subix/lexical.hpp"

#include <algorithm>
#include <unordered_map>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/text.hpp"

namespace subix {

namespace {

constexpr std::string_view kMagic = "SUBIX-LEXICAL 1";

}  // namespace

LexicalModel::LexicalModel(LanguageCode language,
                           std::map<TokenSequence, std::vector<SubjectId>> index)
    : language_(std::move(language)), index_(std::move(index)) {
    rebuild_first_token_index();
}

void LexicalModel::rebuild_first_token_index() {
    by_first_token_.clear();
    for (const auto& [tokens, subjects] : index_) {
        if (!tokens.empty()) {
            by_first_token_[tokens.front()].push_back(tokens);
        }
    }
}

double lexical_score(const LexicalMatchStats& stats) {
    const double in_title = stats.in_title ? 1.0 : 0.0;
    const double tf = static_cast<double>(std::min<std::size_t>(stats.term_frequency, 3)) / 3.0;
    const double position =
        1.0 - static_cast<double>(stats.first_position) / static_cast<double>(stats.document_length);
    const double length = static_cast<double>(std::min<std::size_t>(stats.label_length, 4)) / 4.0;
    return std::min(1.0, 0.4 * in_title + 0.3 * tf + 0.2 * position + 0.1 * length);
}

SuggestionList LexicalModel::suggest(const Record& record, std::size_t limit) const {
    if (record.language != language_) {
        throw ValidationError("record '" + record.id + "' is in '" + record.language +
                              "' but the lexical model is for '" + language_ + "'");
    }
    auto tokens = normalize(record.title);
    const std::size_t title_length = tokens.size();
    auto abstract_tokens = normalize(record.abstract);
    tokens.insert(tokens.end(), std::make_move_iterator(abstract_tokens.begin()),
                  std::make_move_iterator(abstract_tokens.end()));

    std::unordered_map<const TokenSequence*, LexicalMatchStats> matches;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        auto it = by_first_token_.find(tokens[pos]);
        if (it == by_first_token_.end()) {
            continue;
        }
        for (const TokenSequence& candidate : it->second) {
            const TokenSequence* label = &candidate;
            const auto length = label->size();
            if (pos + length > tokens.size() ||
                !std::equal(label->begin(), label->end(),
                            tokens.begin() + static_cast<std::ptrdiff_t>(pos))) {
                continue;
            }
            auto [entry, inserted] = matches.try_emplace(label);
            auto& stats = entry->second;
            if (inserted) {
                stats.first_position = pos;
                stats.document_length = tokens.size();
                stats.label_length = length;
            }
            ++stats.term_frequency;
            if (pos + length <= title_length) {
                stats.in_title = true;
            }
        }
    }

    SuggestionList out;
    for (const auto& [label, stats] : matches) {
        const double score = lexical_score(stats);
        for (const auto& subject : index_.at(*label)) {
            out.push_back({subject, score});
        }
    }
    rank_suggestions(out, limit);
    return out;
}

std::string LexicalModel::serialize() const {
    std::string out(kMagic);
    out += "\nlanguage\t" + language_ + "\n";
    for (const auto& [tokens, subjects] : index_) {
        out += join_tokens(tokens);
        for (const auto& subject : subjects) {
            out.push_back('\t');
            out += subject;
        }
        out.push_back('\n');
    }
    return out;
}

LexicalModel LexicalModel::deserialize(std::string_view text, const std::string& source_name) {
    LanguageCode language;
    std::map<TokenSequence, std::vector<SubjectId>> index;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line_no == 1) {
            if (line != kMagic) {
                throw ValidationError(where + ": not a lexical model (bad magic header)");
            }
            return;
        }
        if (line_no == 2) {
            if (!line.starts_with("language\t") || line.size() <= 9) {
                throw ValidationError(where + ": expected language line");
            }
            language = std::string(line.substr(9));
            return;
        }
        if (line.empty()) {
            return;
        }
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0) {
            throw ValidationError(where + ": malformed index entry");
        }
        TokenSequence tokens;
        std::size_t start = 0;
        const auto key = line.substr(0, tab);
        while (start <= key.size()) {
            auto space = key.find(' ', start);
            if (space == std::string_view::npos) {
                space = key.size();
            }
            tokens.emplace_back(key.substr(start, space - start));
            start = space + 1;
        }
        std::vector<SubjectId> subjects;
        start = tab + 1;
        while (start <= line.size()) {
            auto next = line.find('\t', start);
            if (next == std::string_view::npos) {
                next = line.size();
            }
            subjects.emplace_back(line.substr(start, next - start));
            start = next + 1;
        }
        index.emplace(std::move(tokens), std::move(subjects));
    });
    if (language.empty()) {
        throw ValidationError(source_name + ": truncated lexical model");
    }
    return LexicalModel(std::move(language), std::move(index));
}

LexicalModel build_lexical(const SubjectVocabulary& vocabulary, const LanguageCode& language) {
    if (!vocabulary.has_language(language)) {
        throw ValidationError("language '" + language + "' is not declared in the vocabulary");
    }
    std::map<LexicalModel::TokenSequence, std::vector<SubjectId>> index;
    std::vector<std::string> warnings;
    for (const auto& entry : vocabulary.subjects()) {
        auto tokens = normalize(entry.labels.at(language));
        if (tokens.empty()) {
            warnings.push_back("subject '" + entry.id + "' label '" + entry.labels.at(language) +
                               "' normalizes to nothing; excluded");
            log::warn(warnings.back());
            continue;
        }
        index[std::move(tokens)].push_back(entry.id);
    }
    LexicalModel model(language, std::move(index));
    model.warnings_ = std::move(warnings);
    return model;
}

SuggestionList suggest_lexical(const LexicalModel& model, const Record& record, std::size_t limit) {
    return model.suggest(record, limit);
}

void save_lexical(const LexicalModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, model.serialize());
}

LexicalModel load_lexical(const std::filesystem::path& path) {
    return LexicalModel::deserialize(read_file(path), path.string());
}

}  // namespace subix

#include "subix/vocabulary.hpp"

#include <algorithm>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/text.hpp"

namespace subix {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string label_key(std::string_view language, std::string_view label) {
    std::string key(language);
    key.push_back('\t');
    key += join_tokens(normalize(label));
    return key;
}

}  // namespace

SubjectVocabulary::SubjectVocabulary(std::vector<LanguageCode> languages,
                                     std::vector<SubjectEntry> subjects)
    : languages_(std::move(languages)), subjects_(std::move(subjects)) {
    for (std::size_t i = 0; i < languages_.size(); ++i) {
        if (languages_[i].empty()) {
            throw ValidationError("empty language code in vocabulary");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (languages_[i] == languages_[j]) {
                throw ValidationError("duplicate language '" + languages_[i] + "' in vocabulary");
            }
        }
    }
    by_id_.reserve(subjects_.size());
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const auto& entry = subjects_[i];
        if (entry.id.empty()) {
            throw ValidationError("empty subject id at position " + std::to_string(i + 1));
        }
        if (!by_id_.emplace(entry.id, i).second) {
            throw ValidationError("duplicate subject id '" + entry.id + "'");
        }
        for (const auto& language : languages_) {
            auto it = entry.labels.find(language);
            if (it == entry.labels.end() || it->second.empty()) {
                throw ValidationError("subject '" + entry.id + "' has no label for language '" +
                                      language + "'");
            }
        }
        for (const auto& [language, label] : entry.labels) {
            if (!has_language(language)) {
                throw ValidationError("subject '" + entry.id + "' has label in undeclared language '" +
                                      language + "'");
            }
            by_label_[label_key(language, label)].push_back(i);
        }
    }
}

bool SubjectVocabulary::has_language(std::string_view language) const {
    return std::find(languages_.begin(), languages_.end(), language) != languages_.end();
}

const SubjectEntry* SubjectVocabulary::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &subjects_[it->second];
}

const SubjectEntry& SubjectVocabulary::at(std::string_view id) const {
    if (const auto* entry = find(id)) {
        return *entry;
    }
    throw ValidationError("unknown subject id '" + std::string(id) + "'");
}

const std::string& SubjectVocabulary::label(std::string_view id, std::string_view language) const {
    const auto& entry = at(id);
    auto it = entry.labels.find(std::string(language));
    if (it == entry.labels.end()) {
        throw ValidationError("subject '" + entry.id + "' has no label for language '" +
                              std::string(language) + "'");
    }
    return it->second;
}

std::vector<SubjectId> SubjectVocabulary::find_by_label(std::string_view language,
                                                        std::string_view label) const {
    std::vector<SubjectId> ids;
    auto it = by_label_.find(label_key(language, label));
    if (it != by_label_.end()) {
        for (auto index : it->second) {
            ids.push_back(subjects_[index].id);
        }
    }
    return ids;
}

SubjectVocabulary parse_vocabulary(std::string_view text, const std::string& source_name) {
    if (!is_valid_utf8(text)) {
        throw ValidationError(source_name + ": not valid UTF-8");
    }
    std::vector<LanguageCode> languages;
    std::vector<SubjectEntry> subjects;
    bool have_header = false;

    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto cells = split_tabs(line);
        if (!have_header) {
            if (cells.size() < 2 || cells[0] != "id") {
                throw ValidationError(source_name +
                                      ": header must be 'id<TAB>label_<lang>...', got '" +
                                      std::string(line) + "'");
            }
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (!cells[c].starts_with("label_") || cells[c].size() == 6) {
                    throw ValidationError(source_name + ": bad header column '" +
                                          std::string(cells[c]) + "'");
                }
                languages.emplace_back(cells[c].substr(6));
            }
            have_header = true;
            return;
        }
        if (line.empty()) {
            return;
        }
        if (cells.size() > languages.size() + 1) {
            throw ValidationError(source_name + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(languages.size() + 1));
        }
        SubjectEntry entry;
        entry.id = std::string(cells[0]);
        for (std::size_t l = 0; l < languages.size(); ++l) {
            if (l + 1 >= cells.size() || cells[l + 1].empty()) {
                throw ValidationError(source_name + ": row " + std::to_string(line_no) +
                                      " is missing the label for language '" + languages[l] +
                                      "'");
            }
            entry.labels.emplace(languages[l], std::string(cells[l + 1]));
        }
        subjects.push_back(std::move(entry));
    });
    if (!have_header) {
        throw ValidationError(source_name + ": missing header row");
    }
    return SubjectVocabulary(std::move(languages), std::move(subjects));
}

SubjectVocabulary load_vocabulary(const std::filesystem::path& path) {
    return parse_vocabulary(read_file(path), path.string());
}

std::string format_vocabulary(const SubjectVocabulary& vocabulary) {
    std::string out = "id";
    for (const auto& language : vocabulary.languages()) {
        out += "\tlabel_" + language;
    }
    out.push_back('\n');
    for (const auto& entry : vocabulary.subjects()) {
        out += entry.id;
        for (const auto& language : vocabulary.languages()) {
            out.push_back('\t');
            out += entry.labels.at(language);
        }
        out.push_back('\n');
    }
    return out;
}

std::string language_name(std::string_view code) {
    static const std::map<std::string, std::string, std::less<>> kNames = {
        {"de", "German"}, {"en", "English"}, {"fi", "Finnish"},
        {"fr", "French"}, {"sv", "Swedish"}, {"es", "Spanish"},
    };
    auto it = kNames.find(code);
    return it == kNames.end() ? std::string(code) : it->second;
}

}  // namespace subix

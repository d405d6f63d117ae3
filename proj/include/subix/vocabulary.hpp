#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace subix {

using SubjectId = std::string;
using LanguageCode = std::string;

struct SubjectEntry {
    SubjectId id;
    std::map<LanguageCode, std::string> labels;  ///< preferred label per language
};

/// Bilingual (or n-lingual) controlled vocabulary. Immutable once built.
class SubjectVocabulary {
public:
    SubjectVocabulary() = default;

    /// Validates ids (unique, non-empty) and label coverage for every language.
    SubjectVocabulary(std::vector<LanguageCode> languages, std::vector<SubjectEntry> subjects);

    std::size_t size() const { return subjects_.size(); }
    const std::vector<LanguageCode>& languages() const { return languages_; }
    const std::vector<SubjectEntry>& subjects() const { return subjects_; }
    bool has_language(std::string_view language) const;

    const SubjectEntry* find(std::string_view id) const;
    /// Throws ValidationError for unknown ids.
    const SubjectEntry& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    const std::string& label(std::string_view id, std::string_view language) const;

    /// Subjects whose label in `language` normalizes to the same token sequence.
    std::vector<SubjectId> find_by_label(std::string_view language, std::string_view label) const;

private:
    std::vector<LanguageCode> languages_;
    std::vector<SubjectEntry> subjects_;
    std::unordered_map<std::string, std::size_t> by_id_;
    // key: language + '\t' + normalized label
    std::unordered_map<std::string, std::vector<std::size_t>> by_label_;
};

/// Parses the TSV form: header `id<TAB>label_<lang>...`, one subject per row.
SubjectVocabulary parse_vocabulary(std::string_view text, const std::string& source_name);
SubjectVocabulary load_vocabulary(const std::filesystem::path& path);
std::string format_vocabulary(const SubjectVocabulary& vocabulary);

/// Display name used in prompts ("de" -> "German"); unknown codes pass through.
std::string language_name(std::string_view code);

}  // namespace subix

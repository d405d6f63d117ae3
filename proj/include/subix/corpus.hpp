#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "subix/vocabulary.hpp"

namespace subix {

struct Record {
    std::string id;
    std::string title;
    std::string abstract;  ///< may be empty
    LanguageCode language;
    std::vector<SubjectId> subjects;  ///< gold set in file order; empty for unlabeled records

    /// Title and abstract as one text, separated by a blank line.
    std::string text() const;

    bool operator==(const Record&) const = default;
};

enum class CorpusRole { train, development, test };

std::string_view to_string(CorpusRole role);
CorpusRole parse_corpus_role(std::string_view text);

struct Corpus {
    CorpusRole role = CorpusRole::train;
    std::vector<Record> records;  ///< file order

    std::size_t size() const { return records.size(); }
    const Record* find(std::string_view id) const;
};

/// One line-delimited JSON object per record with exactly the fields
/// id, title, abstract, language, subjects. Every subject id must resolve.
Corpus parse_corpus(std::string_view text, const SubjectVocabulary& vocabulary,
                    const std::string& source_name, CorpusRole role = CorpusRole::train);
Corpus load_corpus(const std::filesystem::path& path, const SubjectVocabulary& vocabulary,
                   CorpusRole role = CorpusRole::train);

std::string format_record(const Record& record);
std::string format_corpus(const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Concatenates `base` repeated `base_repeat` times, then every extra corpus in
/// order. Record ids get a `#<copy>` suffix so they stay unique.
Corpus merge_training_sets(const Corpus& base, const std::vector<Corpus>& extras,
                           std::size_t base_repeat);

}  // namespace subix

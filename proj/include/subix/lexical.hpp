#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "subix/corpus.hpp"
#include "subix/suggestion.hpp"
#include "subix/vocabulary.hpp"

namespace subix {

/// Preferred-label matcher for one language.
///
/// A subject is a candidate when its whole normalized label occurs as a
/// contiguous token run in the record text. Candidates are scored by
///
///   min(1, 0.4*in_title + 0.3*min(tf,3)/3 + 0.2*(1 - first_pos/doc_len)
///          + 0.1*min(label_len,4)/4)
///
/// where tf counts occurrences, first_pos is the token index of the first
/// occurrence and in_title is set when some occurrence lies inside the title.
class LexicalModel {
public:
    using TokenSequence = std::vector<std::string>;

    LexicalModel() = default;
    LexicalModel(LanguageCode language, std::map<TokenSequence, std::vector<SubjectId>> index);

    const LanguageCode& language() const { return language_; }
    const std::map<TokenSequence, std::vector<SubjectId>>& index() const { return index_; }
    /// Warnings produced while building (e.g. labels that normalize to nothing).
    const std::vector<std::string>& warnings() const { return warnings_; }

    SuggestionList suggest(const Record& record, std::size_t limit) const;

    std::string serialize() const;
    static LexicalModel deserialize(std::string_view text, const std::string& source_name);

private:
    friend LexicalModel build_lexical(const SubjectVocabulary&, const LanguageCode&);

    LanguageCode language_;
    std::map<TokenSequence, std::vector<SubjectId>> index_;
    std::map<std::string, std::vector<TokenSequence>> by_first_token_;
    std::vector<std::string> warnings_;

    void rebuild_first_token_index();
};

struct LexicalMatchStats {
    bool in_title = false;
    std::size_t term_frequency = 0;
    std::size_t first_position = 0;
    std::size_t document_length = 0;
    std::size_t label_length = 0;
};

/// The heuristic candidate score; exposed for callers that rescore matches.
double lexical_score(const LexicalMatchStats& stats);

LexicalModel build_lexical(const SubjectVocabulary& vocabulary, const LanguageCode& language);
SuggestionList suggest_lexical(const LexicalModel& model, const Record& record, std::size_t limit);

void save_lexical(const LexicalModel& model, const std::filesystem::path& path);
LexicalModel load_lexical(const std::filesystem::path& path);

}  // namespace subix

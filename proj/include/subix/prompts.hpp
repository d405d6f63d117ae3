#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace subix::prompts {

// Chat prompt templates. Slots are written as <NAME> and filled in one pass,
// so slot values are never re-scanned for further slots.

inline constexpr std::string_view kTranslationSystem =
    "You are a professional translator specialized in translating bibliographic metadata.";

inline constexpr std::string_view kTranslationUser =
    "Your task is to ensure that the given document title and description are in <LANGUAGE> "
    "language, translating the text if necessary. If the text is already in <LANGUAGE>, do not "
    "change or summarize it, keep it all as it is.\n"
    "\n"
    "Respond with only the text, nothing else.\n"
    "\n"
    "Give this title and description in <LANGUAGE>:\n"
    "\n"
    "<TITLE>\n"
    "\n"
    "<DESCRIPTION>";

inline constexpr std::string_view kSynthesisSystem = "You are a professional metadata manager.";

inline constexpr std::string_view kSynthesisUser =
    "Your task is to create new bibliographic metadata: document titles and descriptions.\n"
    "\n"
    "Here is an example document title and description in <LANGUAGE> with the following subject "
    "keywords: <OLD_KEYWORDS>\n"
    "\n"
    "<TITLE_DESC>\n"
    "\n"
    "Generate a new document title and description in <LANGUAGE>. Respond with only the title "
    "and description, nothing else. Create a new title and description that match the "
    "following subject keywords: <NEW_KEYWORDS>";

inline constexpr std::string_view kRankingSystem =
    "You will be given text and a list of keywords to describe it. Your task is\n"
    "to score the keywords with a value between 0 and 100. The score value\n"
    "should depend on how well the keyword represents the text: a perfect\n"
    "keyword should have score 100 and completely unrelated keyword score\n"
    "0. You must output JSON with keywords as field names and add their scores\n"
    "as field values.\n"
    "There must be the same number of objects in the JSON as there are lines in\n"
    "the intput keyword list; do not skip scoring any keywords.";

/// Keywords go one per line, in the order given.
inline constexpr std::string_view kRankingUser =
    "Here is the text:\n"
    "<TEXT>\n"
    "\n"
    "And here are the keywords:\n"
    "<KEYWORDS>";

/// Replaces every <NAME> whose NAME is a key of `slots`; other text is copied.
std::string fill(std::string_view templ, const std::map<std::string, std::string>& slots);

std::string translation_user(std::string_view language, std::string_view title,
                             std::string_view description);
std::string synthesis_user(std::string_view language, std::string_view old_keywords,
                           std::string_view title_desc, std::string_view new_keywords);
std::string ranking_user(std::string_view text, const std::vector<std::string>& keywords);

}  // namespace subix::prompts

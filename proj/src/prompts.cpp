#include "subix/prompts.hpp"

namespace subix::prompts {

std::string fill(std::string_view templ, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(templ.size());
    std::size_t pos = 0;
    while (pos < templ.size()) {
        const auto open = templ.find('<', pos);
        if (open == std::string_view::npos) {
            break;
        }
        const auto close = templ.find('>', open + 1);
        if (close == std::string_view::npos) {
            break;
        }
        out.append(templ.substr(pos, open - pos));
        auto it = slots.find(std::string(templ.substr(open + 1, close - open - 1)));
        if (it != slots.end()) {
            out += it->second;
            pos = close + 1;
        } else {
            out.push_back('<');
            pos = open + 1;
        }
    }
    out.append(templ.substr(pos));
    return out;
}

std::string translation_user(std::string_view language, std::string_view title,
                             std::string_view description) {
    return fill(kTranslationUser, {{"LANGUAGE", std::string(language)},
                                   {"TITLE", std::string(title)},
                                   {"DESCRIPTION", std::string(description)}});
}

std::string synthesis_user(std::string_view language, std::string_view old_keywords,
                           std::string_view title_desc, std::string_view new_keywords) {
    return fill(kSynthesisUser, {{"LANGUAGE", std::string(language)},
                                 {"OLD_KEYWORDS", std::string(old_keywords)},
                                 {"TITLE_DESC", std::string(title_desc)},
                                 {"NEW_KEYWORDS", std::string(new_keywords)}});
}

std::string ranking_user(std::string_view text, const std::vector<std::string>& keywords) {
    std::string list;
    for (const auto& keyword : keywords) {
        if (!list.empty()) {
            list.push_back('\n');
        }
        list += keyword;
    }
    return fill(kRankingUser, {{"TEXT", std::string(text)}, {"KEYWORDS", list}});
}

}  // namespace subix::prompts

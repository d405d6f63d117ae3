#include "subix/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "subix/error.hpp"

namespace subix {

namespace {

const icu::Normalizer2& nfkd() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* instance = icu::Normalizer2::getNFKDInstance(status);
    if (U_FAILURE(status) || instance == nullptr) {
        throw InvariantError(std::string("ICU NFKD unavailable: ") + u_errorName(status));
    }
    return *instance;
}

void flush_token(std::string& current, int& length, UChar32 first,
                 std::vector<std::string>& out) {
    if (length >= 2 || (length == 1 && u_isdigit(first))) {
        out.push_back(std::move(current));
    }
    current.clear();
    length = 0;
}

}  // namespace

std::vector<std::string> normalize(std::string_view text) {
    std::vector<std::string> tokens;
    if (text.empty()) {
        return tokens;
    }
    icu::UnicodeString source = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    source.toLower(icu::Locale::getRoot());
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString decomposed = nfkd().normalize(source, status);
    if (U_FAILURE(status)) {
        throw InvariantError(std::string("NFKD failed: ") + u_errorName(status));
    }

    std::string current;
    int length = 0;
    UChar32 first = 0;
    for (int32_t i = 0; i < decomposed.length();) {
        const UChar32 cp = decomposed.char32At(i);
        i += U16_LENGTH(cp);
        if (u_charType(cp) == U_NON_SPACING_MARK) {
            continue;
        }
        if (u_isalnum(cp)) {
            if (length == 0) {
                first = cp;
            }
            icu::UnicodeString(cp).toUTF8String(current);
            ++length;
        } else {
            flush_token(current, length, first, tokens);
        }
    }
    flush_token(current, length, first, tokens);
    return tokens;
}

std::string fold_case(std::string_view text) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    u.foldCase();
    std::string out;
    u.toUTF8String(out);
    return out;
}

std::string_view trim(std::string_view text) {
    constexpr std::string_view kSpace = " \t\r\n\f\v";
    const auto first = text.find_first_not_of(kSpace);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(kSpace);
    return text.substr(first, last - first + 1);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& token : tokens) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += token;
    }
    return out;
}

}  // namespace subix

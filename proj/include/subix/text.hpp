#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace subix {

/// Lowercases, applies NFKD and drops combining marks, then splits on runs of
/// non-alphanumeric code points. Tokens shorter than two code points are
/// dropped unless they are a single digit.
///
///   normalize("Künstliche Intelligenz!") == {"kunstliche", "intelligenz"}
///   normalize("COVID-19 models")          == {"covid", "19", "models"}
std::vector<std::string> normalize(std::string_view text);

/// Full Unicode lowercasing, used for case-insensitive key matching.
std::string fold_case(std::string_view text);

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

/// Joins tokens with a single space.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace subix

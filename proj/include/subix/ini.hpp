#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace subix {

/// Flat sectioned config: `[section]` headers and `key = value` lines.
/// `#` and `;` start comment lines. Order is preserved.
class IniDocument {
public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;

        std::optional<std::string> get(std::string_view key) const;
    };

    static IniDocument parse(std::string_view text, const std::string& source_name);

    const std::vector<Section>& sections() const { return sections_; }
    const Section* find(std::string_view name) const;

    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    std::string get_or(std::string_view section, std::string_view key,
                       std::string fallback) const;
    double get_double(std::string_view section, std::string_view key, double fallback) const;
    long long get_int(std::string_view section, std::string_view key, long long fallback) const;
    bool get_bool(std::string_view section, std::string_view key, bool fallback) const;

    const std::string& source_name() const { return source_name_; }

private:
    std::string source_name_;
    std::vector<Section> sections_;
};

double parse_real(std::string_view text, const std::string& what);
long long parse_integer(std::string_view text, const std::string& what);

}  // namespace subix

#include "subix/ini.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/text.hpp"

namespace subix {

std::optional<std::string> IniDocument::Section::get(std::string_view key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

IniDocument IniDocument::parse(std::string_view text, const std::string& source_name) {
    IniDocument doc;
    doc.source_name_ = source_name;
    for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            return;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ValidationError(where + ": malformed section header");
            }
            const auto name = std::string(trim(line.substr(1, line.size() - 2)));
            if (doc.find(name) != nullptr) {
                throw ValidationError(where + ": duplicate section [" + name + "]");
            }
            doc.sections_.push_back({name, {}});
            return;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(where + ": expected key = value");
        }
        if (doc.sections_.empty()) {
            throw ValidationError(where + ": key outside of any section");
        }
        auto key = std::string(trim(line.substr(0, eq)));
        auto value = std::string(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ValidationError(where + ": empty key");
        }
        auto& section = doc.sections_.back();
        if (section.get(key)) {
            throw ValidationError(where + ": duplicate key '" + key + "'");
        }
        section.entries.emplace_back(std::move(key), std::move(value));
    });
    return doc;
}

const IniDocument::Section* IniDocument::find(std::string_view name) const {
    for (const auto& section : sections_) {
        if (section.name == name) {
            return &section;
        }
    }
    return nullptr;
}

std::optional<std::string> IniDocument::get(std::string_view section, std::string_view key) const {
    const auto* s = find(section);
    return s ? s->get(key) : std::nullopt;
}

std::string IniDocument::get_or(std::string_view section, std::string_view key,
                                std::string fallback) const {
    auto value = get(section, key);
    return value ? *value : std::move(fallback);
}

double IniDocument::get_double(std::string_view section, std::string_view key,
                               double fallback) const {
    auto value = get(section, key);
    return value ? parse_real(*value, source_name_ + " [" + std::string(section) + "] " +
                                          std::string(key))
                 : fallback;
}

long long IniDocument::get_int(std::string_view section, std::string_view key,
                               long long fallback) const {
    auto value = get(section, key);
    return value ? parse_integer(*value, source_name_ + " [" + std::string(section) + "] " +
                                             std::string(key))
                 : fallback;
}

bool IniDocument::get_bool(std::string_view section, std::string_view key, bool fallback) const {
    auto value = get(section, key);
    if (!value) {
        return fallback;
    }
    if (*value == "true" || *value == "yes" || *value == "1") return true;
    if (*value == "false" || *value == "no" || *value == "0") return false;
    throw ValidationError(source_name_ + " [" + std::string(section) + "] " + std::string(key) +
                          ": expected a boolean, got '" + *value + "'");
}

double parse_real(std::string_view text, const std::string& what) {
    const std::string copy(trim(text));
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size() || errno == ERANGE ||
        !std::isfinite(value)) {
        throw ValidationError(what + ": expected a number, got '" + copy + "'");
    }
    return value;
}

long long parse_integer(std::string_view text, const std::string& what) {
    const std::string copy(trim(text));
    char* end = nullptr;
    errno = 0;
    const long long value = std::strtoll(copy.c_str(), &end, 10);
    if (copy.empty() || end != copy.c_str() + copy.size() || errno == ERANGE) {
        throw ValidationError(what + ": expected an integer, got '" + copy + "'");
    }
    return value;
}

}  // namespace subix

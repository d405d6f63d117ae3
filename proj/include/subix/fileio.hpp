#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace subix {

/// Reads a whole file as bytes. Throws ValidationError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
/// Parent directories are created as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws ValidationError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// True when `text` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid_utf8(std::string_view text);

/// Calls `fn(line, line_number)` for every LF-terminated line (1-based numbers).
/// A trailing CR is not stripped; only LF line endings are accepted.
void for_each_line(std::string_view text,
                   const std::function<void(std::string_view, std::size_t)>& fn);

namespace log {

/// Warnings go to stderr unless a sink is installed (tests capture them).
using Sink = std::function<void(const std::string&)>;
void set_warning_sink(Sink sink);
void warn(const std::string& message);

}  // namespace log

}  // namespace subix

#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <system_error>

#include "subix/corpus.hpp"
#include "subix/fileio.hpp"
#include "subix/vocabulary.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return SUBIX_SOURCE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string templ = (std::filesystem::temp_directory_path() / "subix-XXXXXX").string();
        if (::mkdtemp(templ.data()) == nullptr) {
            throw std::system_error(errno, std::generic_category(), "mkdtemp");
        }
        path_ = templ;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline subix::SubjectVocabulary vocab(std::string_view tsv) {
    return subix::parse_vocabulary(tsv, "test-vocab");
}

inline subix::Record record(std::string id, std::string title, std::string abstract,
                            std::string language, std::vector<std::string> subjects = {}) {
    return subix::Record{std::move(id), std::move(title), std::move(abstract),
                         std::move(language), std::move(subjects)};
}

}  // namespace testing

#include "subix/corpus.hpp"

#include <json.hpp>

#include <set>
#include <unordered_set>

#include "subix/error.hpp"
#include "subix/fileio.hpp"

namespace subix {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Record::text() const {
    if (abstract.empty()) {
        return title;
    }
    return title + "\n\n" + abstract;
}

std::string_view to_string(CorpusRole role) {
    switch (role) {
        case CorpusRole::train: return "train";
        case CorpusRole::development: return "development";
        case CorpusRole::test: return "test";
    }
    throw InvariantError("unhandled corpus role");
}

CorpusRole parse_corpus_role(std::string_view text) {
    if (text == "train") return CorpusRole::train;
    if (text == "development" || text == "dev") return CorpusRole::development;
    if (text == "test") return CorpusRole::test;
    throw ValidationError("unknown corpus role '" + std::string(text) + "'");
}

const Record* Corpus::find(std::string_view id) const {
    for (const auto& record : records) {
        if (record.id == id) {
            return &record;
        }
    }
    return nullptr;
}

namespace {

std::string string_field(const json& object, const char* name, const std::string& where) {
    auto it = object.find(name);
    if (it == object.end() || !it->is_string()) {
        throw ValidationError(where + ": field '" + name + "' missing or not a string");
    }
    return it->get<std::string>();
}

}  // namespace

Corpus parse_corpus(std::string_view text, const SubjectVocabulary& vocabulary,
                    const std::string& source_name, CorpusRole role) {
    if (!is_valid_utf8(text)) {
        throw ValidationError(source_name + ": not valid UTF-8");
    }
    static const std::set<std::string> kFields = {"id", "title", "abstract", "language", "subjects"};

    Corpus corpus;
    corpus.role = role;
    std::unordered_set<std::string> seen_ids;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) {
            return;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        json object;
        try {
            object = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed line: " + e.what());
        }
        if (!object.is_object()) {
            throw ValidationError(where + ": malformed line: not an object");
        }
        for (const auto& item : object.items()) {
            if (!kFields.contains(item.key())) {
                throw ValidationError(where + ": unexpected field '" + item.key() + "'");
            }
        }
        Record record;
        record.id = string_field(object, "id", where);
        record.title = string_field(object, "title", where);
        record.abstract = string_field(object, "abstract", where);
        record.language = string_field(object, "language", where);
        if (record.id.empty()) {
            throw ValidationError(where + ": empty record id");
        }
        if (!seen_ids.insert(record.id).second) {
            throw ValidationError(where + ": duplicate record id '" + record.id + "'");
        }
        if (!vocabulary.has_language(record.language)) {
            throw ValidationError(where + ": unknown language code '" + record.language + "'");
        }
        auto subjects = object.find("subjects");
        if (subjects == object.end() || !subjects->is_array()) {
            throw ValidationError(where + ": field 'subjects' missing or not an array");
        }
        std::unordered_set<std::string> seen_subjects;
        for (const auto& subject : *subjects) {
            if (!subject.is_string()) {
                throw ValidationError(where + ": subject ids must be strings");
            }
            auto id = subject.get<std::string>();
            if (!vocabulary.contains(id)) {
                throw ValidationError(where + ": unknown subject '" + id + "'");
            }
            if (!seen_subjects.insert(id).second) {
                throw ValidationError(where + ": subject '" + id + "' listed twice");
            }
            record.subjects.push_back(std::move(id));
        }
        corpus.records.push_back(std::move(record));
    });
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const SubjectVocabulary& vocabulary,
                   CorpusRole role) {
    return parse_corpus(read_file(path), vocabulary, path.string(), role);
}

std::string format_record(const Record& record) {
    ordered_json object;
    object["id"] = record.id;
    object["title"] = record.title;
    object["abstract"] = record.abstract;
    object["language"] = record.language;
    object["subjects"] = record.subjects;
    return object.dump();
}

std::string format_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& record : corpus.records) {
        out += format_record(record);
        out.push_back('\n');
    }
    return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    write_file_atomic(path, format_corpus(corpus));
}

Corpus merge_training_sets(const Corpus& base, const std::vector<Corpus>& extras,
                           std::size_t base_repeat) {
    std::string language;
    auto check_language = [&](const Record& record) {
        if (language.empty()) {
            language = record.language;
        } else if (record.language != language) {
            throw ValidationError("cannot merge training sets: record '" + record.id +
                                  "' is in '" + record.language + "', expected '" + language +
                                  "'");
        }
    };

    Corpus merged;
    merged.role = base.role;
    std::size_t copy = 0;
    auto append = [&](const Corpus& source, bool suffix) {
        for (const auto& record : source.records) {
            check_language(record);
            Record out = record;
            if (suffix) {
                out.id += "#" + std::to_string(copy);
            }
            merged.records.push_back(std::move(out));
        }
        ++copy;
    };

    // A single plain copy keeps ids untouched so the identity case is exact.
    const bool suffix = base_repeat > 1 || !extras.empty();
    for (std::size_t r = 0; r < base_repeat; ++r) {
        append(base, suffix);
    }
    for (const auto& extra : extras) {
        append(extra, suffix);
    }
    return merged;
}

}  // namespace subix

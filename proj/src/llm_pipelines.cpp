#include "subix/llm_pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/prompts.hpp"
#include "subix/random.hpp"
#include "subix/text.hpp"

namespace subix {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string join(const std::vector<std::string>& items, std::string_view separator) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) {
            out += separator;
        }
        out += item;
    }
    return out;
}

std::optional<double> numeric_value(const json& value) {
    if (value.is_number()) {
        return value.get<double>();
    }
    if (value.is_string()) {
        const auto text = std::string(trim(value.get<std::string>()));
        char* end = nullptr;
        const double parsed = std::strtod(text.c_str(), &end);
        if (!text.empty() && end == text.c_str() + text.size()) {
            return parsed;
        }
    }
    return std::nullopt;
}

}  // namespace

std::pair<std::string, std::string> split_title_abstract(std::string_view completion) {
    const auto text = trim(completion);
    const auto newline = text.find('\n');
    if (newline == std::string_view::npos) {
        return {std::string(text), {}};
    }
    return {std::string(trim(text.substr(0, newline))),
            std::string(trim(text.substr(newline + 1)))};
}

std::optional<json> extract_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    auto parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) {
                        return parsed;
                    }
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

TranslationResult translate_record(LlmClient& client, const Record& record,
                                   const LanguageCode& target) {
    const auto completion =
        client.chat(std::string(prompts::kTranslationSystem),
                    prompts::translation_user(language_name(target), record.title, record.abstract));
    TranslationResult result;
    result.record = record;
    result.record.language = target;
    if (trim(completion).empty()) {
        log::warn("empty translation for record '" + record.id + "'; keeping the original text");
        result.failed = true;
        return result;
    }
    auto [title, abstract] = split_title_abstract(completion);
    result.record.title = std::move(title);
    result.record.abstract = std::move(abstract);
    return result;
}

std::vector<SubjectId> subjects_in_corpus(const Corpus& train) {
    std::set<SubjectId> subjects;
    for (const auto& record : train.records) {
        subjects.insert(record.subjects.begin(), record.subjects.end());
    }
    return {subjects.begin(), subjects.end()};
}

std::vector<SubjectId> eligible_subjects(const std::vector<SubjectId>& pool, const Record& source) {
    std::vector<SubjectId> out;
    for (const auto& subject : pool) {
        if (std::find(source.subjects.begin(), source.subjects.end(), subject) ==
            source.subjects.end()) {
            out.push_back(subject);
        }
    }
    return out;
}

std::optional<SyntheticRecord> synthesize_record(LlmClient& client, const Record& source,
                                                 const SubjectVocabulary& vocabulary,
                                                 const std::vector<SubjectId>& eligible,
                                                 std::uint64_t seed) {
    if (eligible.empty()) {
        throw ValidationError("no eligible subject to add to record '" + source.id + "'");
    }
    Rng rng(seed);
    const SubjectId added = eligible[rng.index(eligible.size())];

    std::vector<std::string> keywords;
    for (const auto& subject : source.subjects) {
        keywords.push_back(vocabulary.label(subject, source.language));
    }
    const std::string old_keywords = join(keywords, ", ");
    keywords.push_back(vocabulary.label(added, source.language));
    const std::string new_keywords = join(keywords, ", ");
    const std::string title_desc =
        source.abstract.empty() ? source.title : source.title + "\n\n" + source.abstract;

    const std::string user = prompts::synthesis_user(language_name(source.language), old_keywords,
                                                     title_desc, new_keywords);
    std::string completion;
    for (int attempt = 0; attempt < 2 && trim(completion).empty(); ++attempt) {
        completion = client.chat(std::string(prompts::kSynthesisSystem), user);
    }
    if (trim(completion).empty()) {
        log::warn("empty synthesis for record '" + source.id + "' after retry; skipped");
        return std::nullopt;
    }

    SyntheticRecord out;
    out.generator_model = client.endpoint().model;
    out.source_record_id = source.id;
    out.added_subject = added;
    out.record.id = source.id + "~syn";
    out.record.language = source.language;
    out.record.subjects = source.subjects;
    out.record.subjects.push_back(added);
    auto [title, abstract] = split_title_abstract(completion);
    out.record.title = std::move(title);
    out.record.abstract = std::move(abstract);
    return out;
}

RelevanceScores scores_from_reply(const json& reply, const std::vector<Candidate>& candidates) {
    std::unordered_map<std::string, double> by_key;
    if (reply.is_object()) {
        for (const auto& item : reply.items()) {
            if (auto value = numeric_value(item.value()); value && std::isfinite(*value)) {
                by_key.emplace(fold_case(trim(item.key())), *value);
            }
        }
    }
    RelevanceScores scores;
    for (const auto& candidate : candidates) {
        double r = 0.0;
        auto it = by_key.find(fold_case(trim(candidate.label)));
        if (it != by_key.end()) {
            r = std::clamp(it->second, 0.0, 100.0) / 100.0;
        }
        scores[candidate.subject_id] = r;
    }
    return scores;
}

RankResult rank_candidates(LlmClient& client, const std::string& text,
                           const std::vector<Candidate>& candidates, std::size_t max_candidates) {
    if (candidates.size() > max_candidates) {
        throw ValidationError("got " + std::to_string(candidates.size()) +
                              " ranking candidates, limit is " + std::to_string(max_candidates));
    }
    RankResult result;
    if (candidates.empty()) {
        return result;
    }
    std::vector<std::string> keywords;
    std::set<std::string> seen;
    for (const auto& candidate : candidates) {
        if (seen.insert(fold_case(trim(candidate.label))).second) {
            keywords.push_back(candidate.label);
        }
    }
    const std::string user = prompts::ranking_user(text, keywords);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto completion = client.chat(std::string(prompts::kRankingSystem), user);
        if (auto reply = extract_json_object(completion)) {
            result.scores = scores_from_reply(*reply, candidates);
            return result;
        }
    }
    client.telemetry().parse_failures.fetch_add(1);
    log::warn("ranking reply contained no JSON object after retry; scoring all candidates 0");
    result.parse_failed = true;
    result.scores = scores_from_reply(json(), candidates);
    return result;
}

double measure_throughput(const JobStats& job) {
    if (job.completed + job.failed < 1) {
        throw ValidationError("throughput needs at least one processed record");
    }
    if (!(job.elapsed_seconds > 0.0)) {
        throw ValidationError("throughput needs a positive elapsed time");
    }
    return static_cast<double>(job.completed) / job.elapsed_seconds;
}

ModelScore score_model(double ndcg, double throughput, double alpha, std::string model_id) {
    if (!(ndcg >= 0.0 && ndcg <= 1.0)) {
        throw ValidationError("nDCG must be in [0, 1]");
    }
    if (!(throughput >= 0.0) || !(alpha >= 0.0)) {
        throw ValidationError("throughput and alpha must be non-negative");
    }
    return {std::move(model_id), ndcg, throughput, alpha, ndcg + alpha * throughput};
}

void parallel_for(std::size_t count, std::size_t parallelism,
                  const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min(std::max<std::size_t>(parallelism, 1), count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (!stop.load()) {
            const auto i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                stop.store(true);
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) {
        threads.emplace_back(worker);
    }
    if (workers > 0) {
        worker();
    }
    for (auto& thread : threads) {
        thread.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

TranslatedCorpus translate_corpus(LlmClient& client, const Corpus& corpus,
                                  const LanguageCode& target) {
    std::vector<TranslationResult> results(corpus.size());
    const auto start = Clock::now();
    parallel_for(corpus.size(), client.endpoint().max_parallel, [&](std::size_t i) {
        results[i] = translate_record(client, corpus.records[i], target);
    });
    TranslatedCorpus out;
    out.stats.elapsed_seconds = seconds_since(start);
    out.corpus.role = corpus.role;
    for (auto& result : results) {
        (result.failed ? out.stats.failed : out.stats.completed) += 1;
        out.corpus.records.push_back(std::move(result.record));
    }
    return out;
}

SyntheticCorpus synthesize_corpus(LlmClient& client, const Corpus& train,
                                  const SubjectVocabulary& vocabulary, std::uint64_t seed) {
    const auto pool = subjects_in_corpus(train);
    std::vector<std::optional<SyntheticRecord>> results(train.size());
    const auto start = Clock::now();
    parallel_for(train.size(), client.endpoint().max_parallel, [&](std::size_t i) {
        const auto& source = train.records[i];
        results[i] = synthesize_record(client, source, vocabulary,
                                       eligible_subjects(pool, source), mix_seed(seed, i));
    });
    SyntheticCorpus out;
    out.stats.elapsed_seconds = seconds_since(start);
    out.corpus.role = train.role;
    for (auto& result : results) {
        if (!result) {
            ++out.stats.failed;
            continue;
        }
        ++out.stats.completed;
        out.corpus.records.push_back(result->record);
        out.provenance.push_back(std::move(*result));
    }
    return out;
}

std::string format_provenance_tsv(const std::vector<SyntheticRecord>& records) {
    std::string out = "record_id\tgenerator_model\tsource_record_id\tadded_subject\n";
    for (const auto& record : records) {
        out += record.record.id + "\t" + record.generator_model + "\t" + record.source_record_id +
               "\t" + record.added_subject + "\n";
    }
    return out;
}

RankedPredictions rank_predictions(LlmClient& client, const Corpus& corpus,
                                   const PredictionSet& combined,
                                   const SubjectVocabulary& vocabulary,
                                   const LanguageCode& language, std::size_t max_candidates) {
    std::unordered_map<std::string_view, const Record*> records;
    for (const auto& record : corpus.records) {
        records.emplace(record.id, &record);
    }
    std::vector<RankResult> results(combined.size());
    const auto start = Clock::now();
    parallel_for(combined.size(), client.endpoint().max_parallel, [&](std::size_t i) {
        const auto& prediction = combined[i];
        auto it = records.find(prediction.record_id);
        if (it == records.end()) {
            throw ValidationError("prediction for unknown record '" + prediction.record_id + "'");
        }
        std::vector<Candidate> candidates;
        const auto n = std::min(max_candidates, prediction.suggestions.size());
        for (std::size_t c = 0; c < n; ++c) {
            const auto& id = prediction.suggestions[c].subject_id;
            candidates.push_back({id, vocabulary.label(id, language)});
        }
        results[i] = rank_candidates(client, it->second->text(), candidates, max_candidates);
    });
    RankedPredictions out;
    out.stats.elapsed_seconds = seconds_since(start);
    for (std::size_t i = 0; i < combined.size(); ++i) {
        if (results[i].parse_failed) {
            ++out.parse_failures;
            ++out.stats.failed;
        } else {
            ++out.stats.completed;
        }
        out.relevance[combined[i].record_id] = std::move(results[i].scores);
    }
    return out;
}

std::string format_relevance(const RelevanceByRecord& relevance) {
    std::string out;
    for (const auto& [record_id, scores] : relevance) {
        ordered_json line;
        line["record_id"] = record_id;
        ordered_json object = ordered_json::object();
        for (const auto& [subject, r] : scores) {
            object[subject] = r;
        }
        line["scores"] = std::move(object);
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

RelevanceByRecord parse_relevance(std::string_view text, const std::string& source_name) {
    RelevanceByRecord relevance;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) {
            return;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        auto object = json::parse(line, nullptr, false);
        if (object.is_discarded() || !object.is_object() || !object.contains("record_id") ||
            !object["record_id"].is_string() || !object.contains("scores") ||
            !object["scores"].is_object()) {
            throw ValidationError(where + ": expected {record_id, scores}");
        }
        RelevanceScores scores;
        for (const auto& item : object["scores"].items()) {
            if (!item.value().is_number()) {
                throw ValidationError(where + ": relevance for '" + item.key() +
                                      "' is not a number");
            }
            const double r = item.value().get<double>();
            if (!(r >= 0.0 && r <= 1.0)) {
                throw ValidationError(where + ": relevance for '" + item.key() +
                                      "' outside [0, 1]");
            }
            scores[item.key()] = r;
        }
        relevance[object["record_id"].get<std::string>()] = std::move(scores);
    });
    return relevance;
}

std::string format_telemetry(const TelemetrySnapshot& telemetry, const JobStats& job) {
    ordered_json out;
    out["requests"] = telemetry.requests;
    out["retries"] = telemetry.retries;
    out["failures"] = telemetry.failures;
    out["parse_failures"] = telemetry.parse_failures;
    out["records_completed"] = job.completed;
    out["records_failed"] = job.failed;
    out["elapsed_seconds"] = job.elapsed_seconds;
    if (job.completed + job.failed > 0 && job.elapsed_seconds > 0.0) {
        out["throughput"] = measure_throughput(job);
    } else {
        out["throughput"] = nullptr;
    }
    return out.dump(2) + "\n";
}

}  // namespace subix

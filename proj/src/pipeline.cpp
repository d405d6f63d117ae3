#include "subix/pipeline.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "subix/corpus.hpp"
#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/fusion.hpp"
#include "subix/ini.hpp"
#include "subix/lexical.hpp"
#include "subix/llm_pipelines.hpp"
#include "subix/metrics.hpp"
#include "subix/random.hpp"
#include "subix/text.hpp"

namespace subix {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "manifest.jsonl";
const std::vector<std::string> kBackends = {"linear", "lexical"};

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) {
            comma = text.size();
        }
        auto item = trim(text.substr(start, comma - start));
        if (!item.empty()) {
            items.emplace_back(item);
        }
        start = comma + 1;
    }
    return items;
}

/// Releases the flock when destroyed.
class WorkLock {
public:
    explicit WorkLock(const fs::path& path) {
        fs::create_directories(path.parent_path());
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) {
            throw ValidationError("cannot open lock file '" + path.string() + "'");
        }
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw ValidationError("another pipeline holds '" + path.string() + "'");
        }
    }
    ~WorkLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    WorkLock(const WorkLock&) = delete;
    WorkLock& operator=(const WorkLock&) = delete;

private:
    int fd_ = -1;
};

struct Artifact {
    fs::path path;         ///< relative to the config directory
    std::string producer;  ///< stage name, or "config" for inputs named in the config
};

struct StagePlan {
    std::string name;
    std::vector<Artifact> inputs;
    std::vector<fs::path> outputs;
    std::string params;
    std::function<void()> run;
};

class Pipeline {
public:
    Pipeline(const PipelineConfig& config, std::ostream& log) : config_(config), log_(log) {}

    std::vector<StagePlan> plan();

private:
    const PipelineConfig& config_;
    std::ostream& log_;
    std::unique_ptr<LlmClient> client_;

    std::vector<std::string> splits_all() const {
        std::vector<std::string> splits = {"train", "dev"};
        if (config_.test) splits.push_back("test");
        return splits;
    }
    std::vector<std::string> splits_eval() const {
        std::vector<std::string> splits = {"dev"};
        if (config_.test) splits.push_back("test");
        return splits;
    }

    fs::path work(const std::string& relative) const { return config_.work / relative; }
    fs::path abs(const fs::path& relative) const { return config_.resolve(relative); }
    fs::path source_corpus(const std::string& split) const {
        if (split == "train") return config_.train;
        if (split == "dev") return config_.dev;
        return *config_.test;
    }

    static std::string corpus_name(const std::string& split, const std::string& lang) {
        return "corpus/" + split + "." + lang + ".jsonl";
    }
    static std::string synthetic_name(const std::string& lang, std::size_t set) {
        return "corpus/synthetic." + lang + "." + std::to_string(set) + ".jsonl";
    }
    static std::string pred_name(const std::string& split, const std::string& lang,
                                 const std::string& system) {
        return "pred/" + split + "." + lang + "." + system + ".jsonl";
    }

    LlmClient& client() {
        if (!client_) {
            client_ = std::make_unique<LlmClient>(config_.llm);
        }
        return *client_;
    }

    SubjectVocabulary vocabulary() const { return load_vocabulary(abs(work("vocabulary.tsv"))); }

    void write_telemetry(const std::string& stage, const JobStats& job) {
        write_file_atomic(abs(work("telemetry/" + stage + ".json")),
                          format_telemetry(client().telemetry().snapshot(), job));
        // counters are per stage
        client_.reset();
    }

    std::string llm_params() const {
        return "model=" + config_.llm.model + "\ntemperature=" +
               format_double(config_.llm.temperature) +
               "\nmax_tokens=" + std::to_string(config_.llm.max_tokens) + "\n";
    }
    std::string trial_params() const {
        const auto& h = config_.hyperopt;
        return "trials=" + std::to_string(h.trials) + "\nseed=" + std::to_string(config_.seed) +
               "\nsource_exponent=" + format_double(h.source_exponent_min) + ":" +
               format_double(h.source_exponent_max) + "\nllm_exponent=" +
               format_double(h.llm_exponent_min) + ":" + format_double(h.llm_exponent_max) +
               "\nllm_weight=" + format_double(h.llm_weight_min) + ":" +
               format_double(h.llm_weight_max) + "\nndcg_k=" + std::to_string(h.ndcg_k) +
               "\nbaselines=" + (h.include_baselines ? "1" : "0") + "\n";
    }
    TrialSpec trial_spec() const {
        TrialSpec spec = config_.hyperopt;
        spec.seed = config_.seed;
        return spec;
    }
    std::string languages_param() const {
        std::string out = "languages=";
        for (const auto& lang : config_.languages) out += lang + ",";
        return out + "\n";
    }

    StagePlan stage_vocab();
    StagePlan stage_translate();
    StagePlan stage_synthesize();
    StagePlan stage_train();
    StagePlan stage_suggest();
    StagePlan stage_hyperopt();
    StagePlan stage_fuse();
    StagePlan stage_rank();
    StagePlan stage_merge();
    StagePlan stage_eval();
};

std::vector<StagePlan> Pipeline::plan() {
    std::vector<StagePlan> stages;
    stages.push_back(stage_vocab());
    stages.push_back(stage_translate());
    stages.push_back(stage_synthesize());
    stages.push_back(stage_train());
    stages.push_back(stage_suggest());
    stages.push_back(stage_hyperopt());
    stages.push_back(stage_fuse());
    stages.push_back(stage_rank());
    if (config_.languages.size() == 2) {
        stages.push_back(stage_merge());
    }
    stages.push_back(stage_eval());
    return stages;
}

StagePlan Pipeline::stage_vocab() {
    StagePlan stage;
    stage.name = "vocab";
    stage.inputs = {{config_.vocabulary, "config"}};
    stage.outputs = {work("vocabulary.tsv")};
    stage.params = languages_param();
    stage.run = [this] {
        const auto vocab = load_vocabulary(abs(config_.vocabulary));
        for (const auto& lang : config_.languages) {
            if (!vocab.has_language(lang)) {
                throw ValidationError("pipeline language '" + lang +
                                      "' is not declared in the vocabulary");
            }
        }
        write_file_atomic(abs(work("vocabulary.tsv")), format_vocabulary(vocab));
        log_ << "  vocabulary: " << vocab.size() << " subjects\n";
    };
    return stage;
}

StagePlan Pipeline::stage_translate() {
    StagePlan stage;
    stage.name = "translate";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& split : splits_all()) {
        stage.inputs.push_back({source_corpus(split), "config"});
        for (const auto& lang : config_.languages) {
            stage.outputs.push_back(work(corpus_name(split, lang)));
        }
    }
    stage.params = llm_params() + languages_param();
    stage.run = [this] {
        const auto vocab = vocabulary();
        JobStats total;
        for (const auto& split : splits_all()) {
            const auto corpus = load_corpus(abs(source_corpus(split)), vocab);
            for (const auto& lang : config_.languages) {
                auto translated = translate_corpus(client(), corpus, lang);
                total.completed += translated.stats.completed;
                total.failed += translated.stats.failed;
                total.elapsed_seconds += translated.stats.elapsed_seconds;
                write_corpus(abs(work(corpus_name(split, lang))), translated.corpus);
                log_ << "  " << split << " -> " << lang << ": " << translated.corpus.size()
                     << " records (" << translated.stats.failed << " failed)\n";
            }
        }
        write_telemetry("translate", total);
    };
    return stage;
}

StagePlan Pipeline::stage_synthesize() {
    StagePlan stage;
    stage.name = "synthesize";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work(corpus_name("train", lang)), "translate"});
        for (std::size_t set = 0; set < config_.synthetic_sets; ++set) {
            const auto name = synthetic_name(lang, set);
            stage.outputs.push_back(work(name));
            stage.outputs.push_back(work(name.substr(0, name.size() - 6) + ".provenance.tsv"));
        }
    }
    stage.params = llm_params() + "seed=" + std::to_string(config_.seed) +
                   "\nsets=" + std::to_string(config_.synthetic_sets) + "\n";
    stage.run = [this] {
        const auto vocab = vocabulary();
        JobStats total;
        for (std::size_t l = 0; l < config_.languages.size(); ++l) {
            const auto& lang = config_.languages[l];
            const auto train = load_corpus(abs(work(corpus_name("train", lang))), vocab);
            for (std::size_t set = 0; set < config_.synthetic_sets; ++set) {
                auto synthetic = synthesize_corpus(client(), train, vocab,
                                                   mix_seed(config_.seed, l * 1000 + set));
                total.completed += synthetic.stats.completed;
                total.failed += synthetic.stats.failed;
                total.elapsed_seconds += synthetic.stats.elapsed_seconds;
                const auto name = synthetic_name(lang, set);
                write_corpus(abs(work(name)), synthetic.corpus);
                write_file_atomic(abs(work(name.substr(0, name.size() - 6) + ".provenance.tsv")),
                                  format_provenance_tsv(synthetic.provenance));
                log_ << "  synthetic " << lang << " #" << set << ": "
                     << synthetic.corpus.size() << " records\n";
            }
        }
        write_telemetry("synthesize", total);
    };
    return stage;
}

StagePlan Pipeline::stage_train() {
    StagePlan stage;
    stage.name = "train";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work(corpus_name("train", lang)), "translate"});
        for (std::size_t set = 0; set < config_.synthetic_sets; ++set) {
            stage.inputs.push_back({work(synthetic_name(lang, set)), "synthesize"});
        }
        stage.outputs.push_back(work("models/" + lang + "/lexical.model"));
        stage.outputs.push_back(work("models/" + lang + "/linear/features.txt"));
        stage.outputs.push_back(work("models/" + lang + "/linear/tree.txt"));
    }
    const auto& p = config_.linear;
    stage.params = "ngram=" + std::to_string(p.ngram) + "\nmin_df=" + std::to_string(p.min_df) +
                   "\nclusters=" + std::to_string(p.clusters) + "\nbeam=" +
                   std::to_string(p.beam) + "\nseed=" + std::to_string(config_.seed) +
                   "\nbase_repeat=" + std::to_string(config_.base_repeat) + "\n";
    stage.run = [this] {
        const auto vocab = vocabulary();
        for (const auto& lang : config_.languages) {
            const auto base = load_corpus(abs(work(corpus_name("train", lang))), vocab);
            std::vector<Corpus> extras;
            for (std::size_t set = 0; set < config_.synthetic_sets; ++set) {
                extras.push_back(load_corpus(abs(work(synthetic_name(lang, set))), vocab));
            }
            const auto merged = merge_training_sets(base, extras, config_.base_repeat);
            save_lexical(build_lexical(vocab, lang), abs(work("models/" + lang + "/lexical.model")));
            LinearParams params = config_.linear;
            params.seed = config_.seed;
            const auto model = train_linear(merged, vocab, lang, params);
            save_linear(model, abs(work("models/" + lang + "/linear")));
            log_ << "  " << lang << ": " << merged.size() << " training records, "
                 << model.features().size() << " features, " << model.tree().clusters.size()
                 << " clusters\n";
        }
    };
    return stage;
}

StagePlan Pipeline::stage_suggest() {
    StagePlan stage;
    stage.name = "suggest";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work("models/" + lang + "/lexical.model"), "train"});
        stage.inputs.push_back({work("models/" + lang + "/linear/features.txt"), "train"});
        stage.inputs.push_back({work("models/" + lang + "/linear/tree.txt"), "train"});
        for (const auto& split : splits_eval()) {
            stage.inputs.push_back({work(corpus_name(split, lang)), "translate"});
            for (const auto& backend : kBackends) {
                stage.outputs.push_back(work(pred_name(split, lang, backend)));
            }
        }
    }
    stage.params = "limit=" + std::to_string(config_.candidate_limit) + "\n";
    stage.run = [this] {
        const auto vocab = vocabulary();
        const auto limit = config_.candidate_limit;
        for (const auto& lang : config_.languages) {
            const auto lexical = load_lexical(abs(work("models/" + lang + "/lexical.model")));
            const auto linear = load_linear(abs(work("models/" + lang + "/linear")));
            for (const auto& split : splits_eval()) {
                const auto corpus = load_corpus(abs(work(corpus_name(split, lang))), vocab);
                PredictionSet lexical_out;
                PredictionSet linear_out;
                for (const auto& record : corpus.records) {
                    lexical_out.push_back({record.id, lexical.suggest(record, limit)});
                    linear_out.push_back({record.id, linear.suggest(record, limit)});
                }
                write_suggestions(abs(work(pred_name(split, lang, "lexical"))), lexical_out, limit);
                write_suggestions(abs(work(pred_name(split, lang, "linear"))), linear_out, limit);
            }
        }
    };
    return stage;
}

StagePlan Pipeline::stage_hyperopt() {
    StagePlan stage;
    stage.name = "hyperopt";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work(corpus_name("dev", lang)), "translate"});
        for (const auto& backend : kBackends) {
            stage.inputs.push_back({work(pred_name("dev", lang, backend)), "suggest"});
        }
        stage.outputs.push_back(work("fusion/" + lang + ".cfg"));
        stage.outputs.push_back(work("fusion/" + lang + ".trials.csv"));
    }
    stage.params = trial_params() + "candidates=" + std::to_string(config_.candidate_limit) + "\n";
    stage.run = [this] {
        const auto vocab = vocabulary();
        for (const auto& lang : config_.languages) {
            const auto dev = load_corpus(abs(work(corpus_name("dev", lang))), vocab);
            std::vector<PredictionSet> sources;
            for (const auto& backend : kBackends) {
                sources.push_back(read_suggestions(abs(work(pred_name("dev", lang, backend)))));
            }
            const auto result = optimise_fusion(kBackends, sources, dev, trial_spec());
            FusionConfig config = result.config;
            config.candidates = config_.candidate_limit;
            write_file_atomic(abs(work("fusion/" + lang + ".cfg")), format_fusion_config(config));
            write_file_atomic(abs(work("fusion/" + lang + ".trials.csv")),
                              format_fusion_trials_csv(kBackends, result.trials));
            log_ << "  " << lang << ": best nDCG@" << config_.hyperopt.ndcg_k << " = "
                 << std::fixed << std::setprecision(4) << result.objective << " (";
            for (const auto& source : config.sources) {
                log_ << source.name << " " << std::setprecision(3) << source.weight << ":"
                     << source.exponent << " ";
            }
            log_ << ")\n" << std::defaultfloat;
        }
    };
    return stage;
}

StagePlan Pipeline::stage_fuse() {
    StagePlan stage;
    stage.name = "fuse";
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work("fusion/" + lang + ".cfg"), "hyperopt"});
        for (const auto& split : splits_eval()) {
            for (const auto& backend : kBackends) {
                stage.inputs.push_back({work(pred_name(split, lang, backend)), "suggest"});
            }
            stage.outputs.push_back(work(pred_name(split, lang, "ensemble")));
        }
    }
    stage.params = "limit=" + std::to_string(config_.candidate_limit) + "\n";
    stage.run = [this] {
        for (const auto& lang : config_.languages) {
            const auto config = load_fusion_config(abs(work("fusion/" + lang + ".cfg")));
            for (const auto& split : splits_eval()) {
                std::vector<PredictionSet> sources;
                for (const auto& source : config.sources) {
                    sources.push_back(read_suggestions(abs(work(pred_name(split, lang, source.name)))));
                }
                write_suggestions(abs(work(pred_name(split, lang, "ensemble"))),
                                  fuse_simple(config, sources, config_.candidate_limit),
                                  config_.candidate_limit);
            }
        }
    };
    return stage;
}

StagePlan Pipeline::stage_rank() {
    StagePlan stage;
    stage.name = "rank";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}};
    for (const auto& lang : config_.languages) {
        stage.inputs.push_back({work("fusion/" + lang + ".cfg"), "hyperopt"});
        for (const auto& split : splits_eval()) {
            stage.inputs.push_back({work(corpus_name(split, lang)), "translate"});
            stage.inputs.push_back({work(pred_name(split, lang, "ensemble")), "fuse"});
            stage.outputs.push_back(work(pred_name(split, lang, "relevance")));
            stage.outputs.push_back(work(pred_name(split, lang, "llm-ensemble")));
        }
        stage.outputs.push_back(work("fusion/" + lang + ".llm.cfg"));
        if (config_.optimise_llm_term) {
            stage.outputs.push_back(work("fusion/" + lang + ".llm.trials.csv"));
        }
    }
    stage.params = llm_params() + trial_params() +
                   "candidates=" + std::to_string(config_.candidate_limit) +
                   "\noptimise=" + (config_.optimise_llm_term ? "1" : "0") +
                   "\nweight=" + format_double(config_.llm_weight) +
                   "\nexponent=" + format_double(config_.llm_exponent) + "\n";
    stage.run = [this] {
        const auto vocab = vocabulary();
        JobStats total;
        std::size_t parse_failures = 0;
        for (const auto& lang : config_.languages) {
            FusionConfig config = load_fusion_config(abs(work("fusion/" + lang + ".cfg")));
            config.candidates = config_.candidate_limit;
            std::map<std::string, RelevanceByRecord> relevance;
            std::map<std::string, PredictionSet> combined;
            std::map<std::string, Corpus> corpora;
            for (const auto& split : splits_eval()) {
                corpora[split] = load_corpus(abs(work(corpus_name(split, lang))), vocab);
                combined[split] = read_suggestions(abs(work(pred_name(split, lang, "ensemble"))));
                auto ranked = rank_predictions(client(), corpora[split], combined[split], vocab,
                                               lang, config_.candidate_limit);
                total.completed += ranked.stats.completed;
                total.failed += ranked.stats.failed;
                total.elapsed_seconds += ranked.stats.elapsed_seconds;
                parse_failures += ranked.parse_failures;
                write_file_atomic(abs(work(pred_name(split, lang, "relevance"))),
                                  format_relevance(ranked.relevance));
                relevance[split] = std::move(ranked.relevance);
            }
            if (config_.optimise_llm_term) {
                const auto result = optimise_llm_term(combined["dev"], relevance["dev"],
                                                      corpora["dev"], trial_spec(),
                                                      config_.candidate_limit);
                config.llm_weight = result.weight;
                config.llm_exponent = result.exponent;
                write_file_atomic(abs(work("fusion/" + lang + ".llm.trials.csv")),
                                  format_llm_trials_csv(result.trials));
                log_ << "  " << lang << ": llm weight " << result.weight << " exponent "
                     << result.exponent << " (nDCG " << result.baseline_objective << " -> "
                     << result.objective << (result.llm_term_useful ? "" : ", LLM term unused")
                     << ")\n";
            } else {
                config.llm_weight = config_.llm_weight;
                config.llm_exponent = config_.llm_exponent;
            }
            write_file_atomic(abs(work("fusion/" + lang + ".llm.cfg")),
                              format_fusion_config(config));
            for (const auto& split : splits_eval()) {
                PredictionSet out;
                for (const auto& record : combined[split]) {
                    static const RelevanceScores kNone;
                    auto it = relevance[split].find(record.record_id);
                    out.push_back({record.record_id,
                                   fuse_llm(config, record.suggestions,
                                            it == relevance[split].end() ? kNone : it->second,
                                            config_.candidate_limit)});
                }
                write_suggestions(abs(work(pred_name(split, lang, "llm-ensemble"))), out,
                                  config_.candidate_limit);
            }
        }
        write_telemetry("rank", total);
        if (parse_failures > 0) {
            log_ << "  " << parse_failures << " ranking replies could not be parsed\n";
        }
    };
    return stage;
}

StagePlan Pipeline::stage_merge() {
    StagePlan stage;
    stage.name = "merge";
    const auto& first = config_.languages[0];
    const auto& second = config_.languages[1];
    for (const auto& split : splits_eval()) {
        stage.inputs.push_back({work(pred_name(split, first, "llm-ensemble")), "rank"});
        stage.inputs.push_back({work(pred_name(split, second, "llm-ensemble")), "rank"});
        stage.outputs.push_back(work("pred/" + split + ".merged.jsonl"));
    }
    stage.params = "limit=" + std::to_string(config_.suggestion_limit) + "\n";
    stage.run = [this, first, second] {
        for (const auto& split : splits_eval()) {
            const auto a = read_suggestions(abs(work(pred_name(split, first, "llm-ensemble"))));
            const auto b = read_suggestions(abs(work(pred_name(split, second, "llm-ensemble"))));
            write_suggestions(abs(work("pred/" + split + ".merged.jsonl")),
                              merge_bilingual(a, b, config_.suggestion_limit),
                              config_.suggestion_limit);
        }
    };
    return stage;
}

StagePlan Pipeline::stage_eval() {
    StagePlan stage;
    stage.name = "eval";
    stage.inputs = {{work("vocabulary.tsv"), "vocab"}, {config_.dev, "config"}};
    std::vector<std::string> systems = kBackends;
    systems.push_back("ensemble");
    systems.push_back("llm-ensemble");
    for (const auto& lang : config_.languages) {
        for (const auto& system : systems) {
            const auto producer = system == "ensemble"       ? "fuse"
                                  : system == "llm-ensemble" ? "rank"
                                                             : "suggest";
            stage.inputs.push_back({work(pred_name("dev", lang, system)), producer});
        }
    }
    if (config_.languages.size() == 2) {
        stage.inputs.push_back({work("pred/dev.merged.jsonl"), "merge"});
    }
    stage.outputs = {work("eval/dev.tsv")};
    stage.params = "f1_k=5\nndcg_k=20\n";
    stage.run = [this, systems] {
        const auto vocab = vocabulary();
        const auto dev = load_corpus(abs(config_.dev), vocab, CorpusRole::development);
        std::string table = "system\tlanguage\trecords\tprecision@5\trecall@5\tf1@5\tndcg@20\tr-precision\n";
        auto add_row = [&](const std::string& system, const std::string& language,
                           const fs::path& predictions) {
            const auto report = evaluate(read_suggestions(abs(predictions)), dev);
            table += system + "\t" + language + "\t" + std::to_string(report.record_count);
            for (const auto& [name, value] : report.metrics) {
                table += "\t" + format_double(value);
            }
            table += "\n";
        };
        for (const auto& lang : config_.languages) {
            for (const auto& system : systems) {
                add_row(system, lang, work(pred_name("dev", lang, system)));
            }
        }
        if (config_.languages.size() == 2) {
            add_row("merged", config_.languages[0] + "+" + config_.languages[1],
                    work("pred/dev.merged.jsonl"));
        }
        write_file_atomic(abs(work("eval/dev.tsv")), table);
    };
    return stage;
}

std::string relative_key(const fs::path& path) { return path.lexically_normal().generic_string(); }

std::optional<std::string> hash_if_exists(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        return std::nullopt;
    }
    return sha256_file(path);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
    if (languages.empty()) {
        throw ValidationError("pipeline needs at least one language");
    }
    if (suggestion_limit < 1 || candidate_limit < 1) {
        throw ValidationError("suggestion and candidate limits must be >= 1");
    }
    if (candidate_limit < suggestion_limit) {
        throw ValidationError("candidate limit must be >= suggestion limit");
    }
    if (base_repeat < 1) {
        throw ValidationError("base_repeat must be >= 1");
    }
    for (const auto* path : {&vocabulary, &train, &dev}) {
        if (path->empty()) {
            throw ValidationError("pipeline config lacks a required path in [paths]");
        }
        if (!fs::exists(resolve(*path))) {
            throw ValidationError("path '" + resolve(*path).string() + "' does not exist");
        }
    }
    if (test && !fs::exists(resolve(*test))) {
        throw ValidationError("path '" + resolve(*test).string() + "' does not exist");
    }
    llm.validate();
    hyperopt.validate();
    if (!(llm_weight >= 0.0 && llm_weight <= 1.0) || !(llm_exponent > 0.0)) {
        throw ValidationError("[rank] weight must be in [0,1] and exponent > 0");
    }
}

fs::path PipelineConfig::resolve(const fs::path& path) const {
    return path.is_absolute() ? path : base_dir / path;
}

PipelineConfig parse_pipeline_config(std::string_view text, const fs::path& path) {
    const auto doc = IniDocument::parse(text, path.string());
    static const std::vector<std::string> kSections = {"paths", "pipeline", "linear",
                                                       "llm",   "hyperopt", "rank"};
    for (const auto& section : doc.sections()) {
        if (std::find(kSections.begin(), kSections.end(), section.name) == kSections.end()) {
            throw ValidationError(path.string() + ": unknown section [" + section.name + "]");
        }
    }
    PipelineConfig config;
    config.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    config.vocabulary = doc.get_or("paths", "vocabulary", "");
    config.train = doc.get_or("paths", "train", "");
    config.dev = doc.get_or("paths", "dev", "");
    if (auto test = doc.get("paths", "test")) {
        config.test = *test;
    }
    config.work = doc.get_or("paths", "work", "work");

    if (auto languages = doc.get("pipeline", "languages")) {
        config.languages = split_list(*languages);
    }
    auto non_negative = [&](const char* section, const char* key, long long fallback) {
        const auto value = doc.get_int(section, key, fallback);
        if (value < 0) {
            throw ValidationError(path.string() + ": [" + section + "] " + key +
                                  " must be non-negative");
        }
        return value;
    };
    config.seed = static_cast<std::uint64_t>(non_negative("pipeline", "seed", 42));
    config.suggestion_limit = static_cast<std::size_t>(non_negative("pipeline", "suggestion_limit", 20));
    config.candidate_limit = static_cast<std::size_t>(non_negative("pipeline", "candidate_limit", 100));
    config.base_repeat = static_cast<std::size_t>(non_negative("pipeline", "base_repeat", 2));
    config.synthetic_sets = static_cast<std::size_t>(non_negative("pipeline", "synthetic_sets", 1));

    config.linear.ngram = static_cast<int>(non_negative("linear", "ngram", 2));
    config.linear.min_df = static_cast<int>(non_negative("linear", "min_df", 5));
    config.linear.clusters = static_cast<int>(non_negative("linear", "clusters", 0));
    config.linear.beam = static_cast<int>(non_negative("linear", "beam", 10));

    config.llm.base_url = doc.get_or("llm", "endpoint", config.llm.base_url);
    config.llm.model = doc.get_or("llm", "model", config.llm.model);
    config.llm.max_parallel = static_cast<std::size_t>(non_negative("llm", "parallel", 4));
    config.llm.timeout = std::chrono::milliseconds(
        static_cast<long long>(doc.get_double("llm", "timeout", 60.0) * 1000.0));
    config.llm.temperature = doc.get_double("llm", "temperature", 0.0);
    config.llm.max_tokens = static_cast<int>(non_negative("llm", "max_tokens", 2048));
    config.alpha = doc.get_double("llm", "alpha", kDefaultAlpha);

    config.hyperopt.trials = static_cast<std::size_t>(non_negative("hyperopt", "trials", 400));
    config.hyperopt.source_exponent_min = doc.get_double("hyperopt", "source_exponent_min", 0.5);
    config.hyperopt.source_exponent_max = doc.get_double("hyperopt", "source_exponent_max", 2.0);
    config.hyperopt.llm_exponent_min = doc.get_double("hyperopt", "llm_exponent_min", 0.5);
    config.hyperopt.llm_exponent_max = doc.get_double("hyperopt", "llm_exponent_max", 12.0);
    config.hyperopt.llm_weight_min = doc.get_double("hyperopt", "llm_weight_min", 0.0);
    config.hyperopt.llm_weight_max = doc.get_double("hyperopt", "llm_weight_max", 0.5);
    config.hyperopt.include_baselines = doc.get_bool("hyperopt", "include_baselines", true);

    config.optimise_llm_term = doc.get_bool("rank", "optimise", true);
    config.llm_weight = doc.get_double("rank", "weight", 0.0);
    config.llm_exponent = doc.get_double("rank", "exponent", 1.0);
    return config;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    return parse_pipeline_config(read_file(path), path);
}

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> kStages = {"vocab",    "translate", "synthesize",
                                                     "train",    "suggest",   "hyperopt",
                                                     "fuse",     "rank",      "merge",
                                                     "eval"};
    return kStages;
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    const auto text = read_file(path);
    std::vector<ManifestEntry> entries;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) {
            return;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        auto object = json::parse(line, nullptr, false);
        if (object.is_discarded() || !object.is_object()) {
            throw ValidationError(where + ": corrupted manifest line");
        }
        try {
            ManifestEntry entry;
            entry.stage = object.at("stage").get<std::string>();
            entry.params = object.at("params").get<std::string>();
            entry.inputs = object.at("inputs").get<std::map<std::string, std::string>>();
            entry.outputs = object.at("outputs").get<std::map<std::string, std::string>>();
            entries.push_back(std::move(entry));
        } catch (const json::exception& e) {
            throw ValidationError(where + ": corrupted manifest entry: " + e.what());
        }
    });
    return entries;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& entry : entries) {
        ordered_json line;
        line["stage"] = entry.stage;
        line["params"] = entry.params;
        line["inputs"] = entry.inputs;
        line["outputs"] = entry.outputs;
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Running

RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    config.validate();
    std::ostream& log = options.log ? *options.log : std::cout;
    const auto& known = pipeline_stages();
    for (const auto& name : options.stages) {
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ValidationError("unknown stage '" + name + "'");
        }
    }

    Pipeline pipeline(config, log);
    auto plan = pipeline.plan();
    const auto selected = [&](const std::string& name) {
        return options.stages.empty() ||
               std::find(options.stages.begin(), options.stages.end(), name) !=
                   options.stages.end();
    };

    const fs::path work_dir = config.work_dir();
    const fs::path manifest_path = work_dir / kManifestName;
    std::optional<WorkLock> lock;
    if (!options.dry_run) {
        lock.emplace(work_dir / ".lock");
    }
    std::vector<ManifestEntry> manifest;
    if (fs::exists(manifest_path)) {
        manifest = read_manifest(manifest_path);
    }

    RunSummary summary;
    std::set<std::string> pending;  // outputs a dry run would have produced
    for (auto& stage : plan) {
        if (!selected(stage.name)) {
            continue;
        }
        ManifestEntry current;
        current.stage = stage.name;
        current.params = sha256_hex(stage.params);
        std::vector<std::string> missing;
        bool pending_input = false;
        for (const auto& input : stage.inputs) {
            const auto key = relative_key(input.path);
            if (pending.count(key)) {
                pending_input = true;
                continue;
            }
            auto hash = hash_if_exists(config.resolve(input.path));
            if (!hash) {
                missing.push_back("'" + key + "' (" +
                                  (input.producer == "config"
                                       ? std::string("named in the config")
                                       : "output of stage '" + input.producer + "'") +
                                  ")");
                continue;
            }
            current.inputs[key] = *hash;
        }
        if (!missing.empty()) {
            std::string list;
            for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
            throw ValidationError("stage '" + stage.name + "' needs " + list +
                                  (missing.size() == 1 ? ", which does not exist"
                                                       : ", which do not exist"));
        }

        auto recorded = std::find_if(manifest.begin(), manifest.end(),
                                     [&](const auto& e) { return e.stage == stage.name; });
        bool up_to_date = !pending_input && recorded != manifest.end() && recorded->params == current.params &&
                          recorded->inputs == current.inputs &&
                          recorded->outputs.size() == stage.outputs.size();
        if (up_to_date) {
            for (const auto& output : stage.outputs) {
                auto it = recorded->outputs.find(relative_key(output));
                auto hash = hash_if_exists(config.resolve(output));
                if (it == recorded->outputs.end() || !hash || *hash != it->second) {
                    up_to_date = false;
                    break;
                }
            }
        }
        if (up_to_date) {
            log << "[" << stage.name << "] up to date\n";
            summary.skipped.push_back(stage.name);
            continue;
        }
        if (options.dry_run) {
            log << "[" << stage.name << "] would run\n";
            for (const auto& output : stage.outputs) pending.insert(relative_key(output));
            summary.executed.push_back(stage.name);
            continue;
        }

        log << "[" << stage.name << "] running\n";
        stage.run();
        for (const auto& output : stage.outputs) {
            auto hash = hash_if_exists(config.resolve(output));
            if (!hash) {
                throw InvariantError("stage '" + stage.name + "' did not produce '" +
                                     relative_key(output) + "'");
            }
            current.outputs[relative_key(output)] = *hash;
        }
        if (recorded != manifest.end()) {
            *recorded = std::move(current);
        } else {
            manifest.push_back(std::move(current));
        }
        // keep manifest lines in stage order regardless of which subset ran
        std::stable_sort(manifest.begin(), manifest.end(), [&](const auto& a, const auto& b) {
            return std::find(known.begin(), known.end(), a.stage) <
                   std::find(known.begin(), known.end(), b.stage);
        });
        write_file_atomic(manifest_path, format_manifest(manifest));
        summary.executed.push_back(stage.name);
    }
    return summary;
}

int report_pipeline(const PipelineConfig& config, std::ostream& out) {
    const fs::path work_dir = config.work_dir();
    const fs::path manifest_path = work_dir / kManifestName;
    if (!fs::exists(manifest_path)) {
        out << "no manifest at " << manifest_path.string() << "; nothing has run yet\n";
        return 0;
    }
    const auto manifest = read_manifest(manifest_path);

    out << "Stages\n";
    for (const auto& entry : manifest) {
        bool intact = true;
        for (const auto& [path, hash] : entry.outputs) {
            auto current = hash_if_exists(config.resolve(path));
            intact = intact && current && *current == hash;
        }
        out << "  " << std::left << std::setw(12) << entry.stage
            << (intact ? "done" : "stale (outputs changed or missing)") << "\n";
    }

    const fs::path eval_path = work_dir / "eval" / "dev.tsv";
    if (fs::exists(eval_path)) {
        out << "\nDevelopment set\n";
        out << "  " << std::left << std::setw(14) << "system" << std::setw(10) << "language"
            << std::right << std::setw(8) << "F1@5" << std::setw(10) << "nDCG@20" << "\n";
        const auto text = read_file(eval_path);
        for_each_line(text, [&](std::string_view line, std::size_t line_no) {
            if (line_no == 1 || line.empty()) {
                return;
            }
            std::vector<std::string> cells;
            std::size_t start = 0;
            while (start <= line.size()) {
                auto tab = line.find('\t', start);
                if (tab == std::string_view::npos) tab = line.size();
                cells.emplace_back(line.substr(start, tab - start));
                start = tab + 1;
            }
            if (cells.size() < 7) {
                throw ValidationError(eval_path.string() + ": malformed row " +
                                      std::to_string(line_no));
            }
            out << "  " << std::left << std::setw(14) << cells[0] << std::setw(10) << cells[1]
                << std::right << std::fixed << std::setprecision(4) << std::setw(8)
                << parse_real(cells[5], "f1") << std::setw(10) << parse_real(cells[6], "ndcg")
                << "\n"
                << std::defaultfloat;
        });
    }

    const fs::path telemetry_dir = work_dir / "telemetry";
    if (fs::exists(telemetry_dir)) {
        out << "\nLLM telemetry\n";
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(telemetry_dir)) {
            if (entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            auto t = json::parse(read_file(file), nullptr, false);
            if (t.is_discarded() || !t.is_object()) {
                throw ValidationError(file.string() + ": corrupted telemetry");
            }
            out << "  " << std::left << std::setw(12) << file.stem().string()
                << "requests " << t.value("requests", 0) << ", retries " << t.value("retries", 0)
                << ", parse failures " << t.value("parse_failures", 0);
            if (t.contains("throughput") && t["throughput"].is_number()) {
                out << ", " << std::fixed << std::setprecision(2)
                    << t["throughput"].get<double>() << " records/s" << std::defaultfloat;
            }
            out << "\n";
        }
    }
    return 0;
}

}  // namespace subix

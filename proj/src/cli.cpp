#include "subix/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>

#include "subix/corpus.hpp"
#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/fusion.hpp"
#include "subix/hyperopt.hpp"
#include "subix/lexical.hpp"
#include "subix/linear.hpp"
#include "subix/llm_client.hpp"
#include "subix/llm_pipelines.hpp"
#include "subix/metrics.hpp"
#include "subix/pipeline.hpp"
#include "subix/vocabulary.hpp"

namespace subix {

namespace fs = std::filesystem;

namespace {

struct LlmFlags {
    std::string endpoint = LlmEndpoint{}.base_url;
    std::string model = LlmEndpoint{}.model;
    std::size_t parallel = LlmEndpoint{}.max_parallel;
    double timeout = 60.0;

    void attach(CLI::App* app) {
        app->add_option("--endpoint", endpoint, "Chat-completion base URL")->capture_default_str();
        app->add_option("--model", model, "Model identifier")->capture_default_str();
        app->add_option("--parallel", parallel, "Concurrent requests")->capture_default_str();
        app->add_option("--timeout", timeout, "Request timeout in seconds")->capture_default_str();
    }
    LlmEndpoint build() const {
        LlmEndpoint e;
        e.base_url = endpoint;
        e.model = model;
        e.max_parallel = parallel;
        e.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
        e.validate();
        return e;
    }
};

/// "name=path" or just "path" (name taken from the file stem).
std::pair<std::string, fs::path> named_path(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq != std::string::npos) {
        return {spec.substr(0, eq), spec.substr(eq + 1)};
    }
    fs::path path(spec);
    std::string name = path.filename().string();
    name = name.substr(0, name.find('.'));
    return {name, path};
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_file_atomic(path, text);
    }
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> items;
    std::string current;
    for (char c : text) {
        if (c == ',') {
            if (!current.empty()) items.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) items.push_back(current);
    return items;
}

}  // namespace

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multilingual subject indexing toolkit", "subix"};
    app.require_subcommand(1);
    std::function<void()> action;

    // vocab -----------------------------------------------------------------
    std::string vocab_path;
    std::string vocab_out;
    auto* vocab = app.add_subcommand("vocab", "Validate a vocabulary and print a summary");
    vocab->add_option("vocabulary", vocab_path, "Vocabulary TSV")->required();
    vocab->add_option("--out", vocab_out, "Write the normalized TSV here");
    vocab->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(vocab_path);
            out << v.size() << " subjects; languages:";
            for (const auto& lang : v.languages()) out << " " << lang;
            out << "\n";
            if (!vocab_out.empty()) write_file_atomic(vocab_out, format_vocabulary(v));
        };
    });

    // translate -------------------------------------------------------------
    std::string tr_vocab, tr_corpus, tr_target, tr_out, tr_telemetry;
    LlmFlags tr_llm;
    auto* translate = app.add_subcommand("translate", "Translate a corpus with an LLM");
    translate->add_option("--vocabulary", tr_vocab)->required();
    translate->add_option("--corpus", tr_corpus)->required();
    translate->add_option("--target", tr_target, "Target language code")->required();
    translate->add_option("--out", tr_out)->required();
    translate->add_option("--telemetry", tr_telemetry, "Write request counters here");
    tr_llm.attach(translate);
    translate->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(tr_vocab);
            if (!v.has_language(tr_target)) {
                throw ValidationError("target language '" + tr_target + "' not in vocabulary");
            }
            const auto corpus = load_corpus(tr_corpus, v);
            LlmClient client(tr_llm.build());
            const auto result = translate_corpus(client, corpus, tr_target);
            write_corpus(tr_out, result.corpus);
            if (!tr_telemetry.empty()) {
                write_file_atomic(tr_telemetry,
                                  format_telemetry(client.telemetry().snapshot(), result.stats));
            }
            out << result.corpus.size() << " records translated ("
                << result.stats.failed << " failed)\n";
        };
    });

    // synthesize ------------------------------------------------------------
    std::string sy_vocab, sy_corpus, sy_out, sy_provenance, sy_telemetry;
    std::uint64_t sy_seed = 42;
    LlmFlags sy_llm;
    auto* synthesize = app.add_subcommand("synthesize", "Generate one synthetic record per source");
    synthesize->add_option("--vocabulary", sy_vocab)->required();
    synthesize->add_option("--corpus", sy_corpus, "Training corpus")->required();
    synthesize->add_option("--out", sy_out)->required();
    synthesize->add_option("--provenance", sy_provenance, "TSV of model, source and added subject");
    synthesize->add_option("--telemetry", sy_telemetry);
    synthesize->add_option("--seed", sy_seed)->capture_default_str();
    sy_llm.attach(synthesize);
    synthesize->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(sy_vocab);
            const auto corpus = load_corpus(sy_corpus, v);
            LlmClient client(sy_llm.build());
            const auto result = synthesize_corpus(client, corpus, v, sy_seed);
            write_corpus(sy_out, result.corpus);
            if (!sy_provenance.empty()) {
                write_file_atomic(sy_provenance, format_provenance_tsv(result.provenance));
            }
            if (!sy_telemetry.empty()) {
                write_file_atomic(sy_telemetry,
                                  format_telemetry(client.telemetry().snapshot(), result.stats));
            }
            out << result.corpus.size() << " synthetic records\n";
        };
    });

    // train -----------------------------------------------------------------
    std::string tn_backend, tn_vocab, tn_language, tn_out;
    std::vector<std::string> tn_corpus, tn_extra;
    std::size_t tn_repeat = 1;
    LinearParams tn_params;
    auto* train = app.add_subcommand("train", "Build a lexical or linear model");
    train->add_option("--backend", tn_backend)->required()->check(CLI::IsMember({"lexical", "linear"}));
    train->add_option("--vocabulary", tn_vocab)->required();
    train->add_option("--language", tn_language)->required();
    train->add_option("--corpus", tn_corpus, "Base training corpus (linear)");
    train->add_option("--extra", tn_extra, "Additional training corpora, appended after the base");
    train->add_option("--base-repeat", tn_repeat)->capture_default_str();
    train->add_option("--out", tn_out, "Model file (lexical) or directory (linear)")->required();
    train->add_option("--ngram", tn_params.ngram)->capture_default_str();
    train->add_option("--min-df", tn_params.min_df)->capture_default_str();
    train->add_option("--clusters", tn_params.clusters, "0 = ceil(sqrt(subjects))")->capture_default_str();
    train->add_option("--beam", tn_params.beam)->capture_default_str();
    train->add_option("--seed", tn_params.seed)->capture_default_str();
    train->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(tn_vocab);
            if (tn_backend == "lexical") {
                const auto model = build_lexical(v, tn_language);
                for (const auto& w : model.warnings()) log::warn(w);
                save_lexical(model, tn_out);
                out << model.index().size() << " label sequences indexed\n";
                return;
            }
            if (tn_corpus.size() != 1) {
                throw ValidationError("train --backend linear needs exactly one --corpus");
            }
            const auto base = load_corpus(tn_corpus.front(), v);
            std::vector<Corpus> extras;
            for (const auto& path : tn_extra) extras.push_back(load_corpus(path, v));
            const auto merged = merge_training_sets(base, extras, tn_repeat);
            const auto model = train_linear(merged, v, tn_language, tn_params);
            save_linear(model, tn_out);
            out << merged.size() << " training records, " << model.features().size()
                << " features, " << model.tree().clusters.size() << " clusters\n";
        };
    });

    // suggest ---------------------------------------------------------------
    std::string sg_backend, sg_model, sg_vocab, sg_corpus, sg_out;
    std::size_t sg_limit = kDefaultSuggestionLimit;
    auto* suggest = app.add_subcommand("suggest", "Predict subjects for every record");
    suggest->add_option("--backend", sg_backend)->required()->check(CLI::IsMember({"lexical", "linear"}));
    suggest->add_option("--model", sg_model)->required();
    suggest->add_option("--vocabulary", sg_vocab)->required();
    suggest->add_option("--corpus", sg_corpus)->required();
    suggest->add_option("--limit", sg_limit)->capture_default_str()->check(CLI::PositiveNumber);
    suggest->add_option("--out", sg_out)->required();
    suggest->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(sg_vocab);
            const auto corpus = load_corpus(sg_corpus, v);
            PredictionSet predictions;
            if (sg_backend == "lexical") {
                const auto model = load_lexical(sg_model);
                for (const auto& r : corpus.records) predictions.push_back({r.id, model.suggest(r, sg_limit)});
            } else {
                const auto model = load_linear(sg_model);
                for (const auto& r : corpus.records) predictions.push_back({r.id, model.suggest(r, sg_limit)});
            }
            write_suggestions(sg_out, predictions, sg_limit);
        };
    });

    // fuse ------------------------------------------------------------------
    std::string fu_config, fu_out, fu_relevance;
    std::vector<std::string> fu_inputs;
    std::size_t fu_limit = 100;
    auto* fuse = app.add_subcommand("fuse", "Combine source predictions with a fusion config");
    fuse->add_option("--config", fu_config)->required();
    fuse->add_option("--input", fu_inputs, "name=predictions.jsonl, one per config source")->required();
    fuse->add_option("--relevance", fu_relevance, "Apply the LLM term with these relevance scores (single input)");
    fuse->add_option("--limit", fu_limit)->capture_default_str()->check(CLI::PositiveNumber);
    fuse->add_option("--out", fu_out)->required();
    fuse->callback([&] {
        action = [&] {
            const auto config = load_fusion_config(fu_config);
            std::map<std::string, PredictionSet> by_name;
            for (const auto& spec : fu_inputs) {
                auto [name, path] = named_path(spec);
                by_name[name] = read_suggestions(path);
            }
            if (!fu_relevance.empty()) {
                if (by_name.size() != 1) {
                    throw ValidationError("--relevance takes exactly one combined --input");
                }
                const auto relevance = parse_relevance(read_file(fu_relevance), fu_relevance);
                PredictionSet fused;
                for (const auto& record : by_name.begin()->second) {
                    static const RelevanceScores kNone;
                    auto it = relevance.find(record.record_id);
                    fused.push_back({record.record_id,
                                     fuse_llm(config, record.suggestions,
                                              it == relevance.end() ? kNone : it->second, fu_limit)});
                }
                write_suggestions(fu_out, fused, fu_limit);
                return;
            }
            std::vector<PredictionSet> sources;
            for (const auto& source : config.sources) {
                auto it = by_name.find(source.name);
                if (it == by_name.end()) {
                    throw ValidationError("no --input given for source '" + source.name + "'");
                }
                sources.push_back(it->second);
            }
            write_suggestions(fu_out, fuse_simple(config, sources, fu_limit), fu_limit);
        };
    });

    // rank ------------------------------------------------------------------
    std::string rk_vocab, rk_corpus, rk_predictions, rk_language, rk_out, rk_telemetry;
    std::size_t rk_candidates = 100;
    LlmFlags rk_llm;
    auto* rank = app.add_subcommand("rank", "Ask the LLM to score the top candidates of each record");
    rank->add_option("--vocabulary", rk_vocab)->required();
    rank->add_option("--corpus", rk_corpus)->required();
    rank->add_option("--predictions", rk_predictions, "Combined predictions")->required();
    rank->add_option("--language", rk_language, "Label language (defaults to each record's)");
    rank->add_option("--candidates", rk_candidates, "K")->capture_default_str()->check(CLI::PositiveNumber);
    rank->add_option("--out", rk_out, "Relevance JSONL")->required();
    rank->add_option("--telemetry", rk_telemetry);
    rk_llm.attach(rank);
    rank->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(rk_vocab);
            const auto corpus = load_corpus(rk_corpus, v);
            std::string language = rk_language;
            if (language.empty()) {
                language = corpus.records.empty() ? v.languages().front()
                                                  : corpus.records.front().language;
            }
            LlmClient client(rk_llm.build());
            const auto result = rank_predictions(client, corpus, read_suggestions(rk_predictions),
                                                 v, language, rk_candidates);
            write_file_atomic(rk_out, format_relevance(result.relevance));
            if (!rk_telemetry.empty()) {
                write_file_atomic(rk_telemetry,
                                  format_telemetry(client.telemetry().snapshot(), result.stats));
            }
            out << result.relevance.size() << " records ranked, " << result.parse_failures
                << " parse failures\n";
        };
    });

    // merge -----------------------------------------------------------------
    std::string mg_a, mg_b, mg_out;
    std::size_t mg_limit = kDefaultSuggestionLimit;
    auto* merge = app.add_subcommand("merge", "Sum two language pipelines' scores");
    merge->add_option("a", mg_a)->required();
    merge->add_option("b", mg_b)->required();
    merge->add_option("--limit", mg_limit)->capture_default_str()->check(CLI::PositiveNumber);
    merge->add_option("--out", mg_out)->required();
    merge->callback([&] {
        action = [&] {
            write_suggestions(mg_out, merge_bilingual(read_suggestions(mg_a), read_suggestions(mg_b), mg_limit),
                              mg_limit);
        };
    });

    // eval ------------------------------------------------------------------
    std::string ev_vocab, ev_corpus, ev_predictions, ev_tsv, ev_model;
    EvalOptions ev_options;
    std::optional<double> ev_throughput;
    double ev_alpha = kDefaultAlpha;
    auto* eval = app.add_subcommand("eval", "Score predictions against gold subjects");
    eval->add_option("--vocabulary", ev_vocab)->required();
    eval->add_option("--corpus", ev_corpus)->required();
    eval->add_option("--predictions", ev_predictions)->required();
    eval->add_option("--f1-k", ev_options.f1_k)->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_option("--ndcg-k", ev_options.ndcg_k)->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_flag("--require-coverage", ev_options.require_full_coverage,
                   "Fail when a corpus record has no prediction");
    eval->add_option("--tsv", ev_tsv, "Also write metric<TAB>value lines here");
    eval->add_option("--throughput", ev_throughput, "Records/s of the LLM run; adds the model score");
    eval->add_option("--alpha", ev_alpha)->capture_default_str();
    eval->add_option("--model", ev_model, "Model id shown with the model score");
    eval->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(ev_vocab);
            const auto corpus = load_corpus(ev_corpus, v, CorpusRole::development);
            const auto report = evaluate(read_suggestions(ev_predictions), corpus, ev_options);
            out << format_report_table(report);
            if (!ev_tsv.empty()) write_file_atomic(ev_tsv, format_report_tsv(report));
            if (ev_throughput) {
                const auto score = score_model(report.get("ndcg@" + std::to_string(ev_options.ndcg_k)),
                                               *ev_throughput, ev_alpha, ev_model);
                out << "model score" << (ev_model.empty() ? "" : " (" + ev_model + ")") << ": "
                    << std::setprecision(17) << score.score << "\n";
            }
        };
    });

    // hyperopt --------------------------------------------------------------
    std::string ho_sources, ho_dev, ho_vocab, ho_out, ho_log;
    TrialSpec ho_spec;
    auto* hyperopt = app.add_subcommand("hyperopt", "Random search over fusion weights and exponents");
    hyperopt->add_option("--sources", ho_sources, "Comma-separated [name=]predictions.jsonl")->required();
    hyperopt->add_option("--dev", ho_dev, "Development corpus")->required();
    hyperopt->add_option("--vocabulary", ho_vocab)->required();
    hyperopt->add_option("--trials", ho_spec.trials)->capture_default_str();
    hyperopt->add_option("--seed", ho_spec.seed)->capture_default_str();
    hyperopt->add_option("--out", ho_out, "Best fusion config (default: stdout)");
    hyperopt->add_option("--log", ho_log, "Trial log CSV");
    hyperopt->callback([&] {
        action = [&] {
            const auto v = load_vocabulary(ho_vocab);
            const auto dev = load_corpus(ho_dev, v, CorpusRole::development);
            std::vector<std::string> names;
            std::vector<PredictionSet> sources;
            for (const auto& spec : split_commas(ho_sources)) {
                auto [name, path] = named_path(spec);
                if (std::find(names.begin(), names.end(), name) != names.end()) {
                    throw ValidationError("source name '" + name + "' given twice");
                }
                names.push_back(name);
                sources.push_back(read_suggestions(path));
            }
            const auto result = optimise_fusion(names, sources, dev, ho_spec);
            write_or_print(ho_out, format_fusion_config(result.config), out);
            if (!ho_log.empty()) write_file_atomic(ho_log, format_fusion_trials_csv(names, result.trials));
            err << "best nDCG@" << ho_spec.ndcg_k << ": " << std::setprecision(6)
                << result.objective << "\n";
        };
    });

    // run -------------------------------------------------------------------
    std::string run_config, run_stages, run_endpoint;
    std::optional<std::uint64_t> run_seed;
    bool run_dry = false;
    auto* run = app.add_subcommand("run", "Run pipeline stages from a config file");
    run->add_option("--config", run_config)->required();
    run->add_option("--stages", run_stages, "Comma-separated subset of stages");
    run->add_option("--seed", run_seed, "Override the config seed");
    run->add_option("--endpoint", run_endpoint, "Override the LLM endpoint");
    run->add_flag("--dry-run", run_dry, "Show which stages would run");
    run->callback([&] {
        action = [&] {
            auto config = load_pipeline_config(run_config);
            if (run_seed) config.seed = *run_seed;
            if (!run_endpoint.empty()) config.llm.base_url = run_endpoint;
            RunOptions options;
            options.stages = split_commas(run_stages);
            options.dry_run = run_dry;
            options.log = &out;
            const auto summary = run_pipeline(config, options);
            out << summary.executed.size() << (run_dry ? " stage(s) would run, " : " stage(s) ran, ")
                << summary.skipped.size() << " up to date\n";
        };
    });

    // report ----------------------------------------------------------------
    std::string rp_config;
    int report_status = 0;
    auto* report = app.add_subcommand("report", "Summarize a pipeline's working directory");
    report->add_option("--config", rp_config)->required();
    report->callback([&] {
        action = [&] { report_status = report_pipeline(load_pipeline_config(rp_config), out); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }

    log::set_warning_sink([&err](const std::string& message) { err << "warning: " << message << "\n"; });
    int status = 0;
    try {
        action();
        status = report_status;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        status = static_cast<int>(ExitCode::validation);
    } catch (const TransportError& e) {
        err << "error: " << e.what() << "\n";
        status = static_cast<int>(ExitCode::transport);
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        status = static_cast<int>(ExitCode::validation);
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        status = static_cast<int>(ExitCode::invariant);
    }
    log::set_warning_sink(nullptr);
    return status;
}

}  // namespace subix

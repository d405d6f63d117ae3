#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "subix/hyperopt.hpp"
#include "subix/linear.hpp"
#include "subix/llm_client.hpp"

namespace subix {

/// Everything a pipeline run needs. Paths are resolved against the
/// directory holding the config file.
struct PipelineConfig {
    std::filesystem::path base_dir;
    std::filesystem::path vocabulary;
    std::filesystem::path train;
    std::filesystem::path dev;
    std::optional<std::filesystem::path> test;
    std::filesystem::path work = "work";

    std::vector<LanguageCode> languages = {"de", "en"};
    std::uint64_t seed = 42;
    std::size_t suggestion_limit = 20;
    std::size_t candidate_limit = 100;
    std::size_t base_repeat = 2;
    std::size_t synthetic_sets = 1;

    LinearParams linear;
    LlmEndpoint llm;
    double alpha = 0.003;
    TrialSpec hyperopt;

    bool optimise_llm_term = true;
    double llm_weight = 0.0;  ///< used when the LLM term is not optimised
    double llm_exponent = 1.0;

    void validate() const;
    std::filesystem::path resolve(const std::filesystem::path& path) const;
    std::filesystem::path work_dir() const { return resolve(work); }
};

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& path);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Stage names in execution order.
const std::vector<std::string>& pipeline_stages();

struct RunOptions {
    std::vector<std::string> stages;  ///< empty selects every stage
    bool dry_run = false;
    std::ostream* log = nullptr;
};

struct RunSummary {
    std::vector<std::string> executed;
    std::vector<std::string> skipped;  ///< already up to date
};

/// Runs the selected stages. A stage whose recorded inputs, parameters and
/// outputs all still match the manifest is skipped. Outputs are written
/// atomically and the manifest is updated after each stage.
RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Prints stage status, the metric table and LLM telemetry. Returns the
/// process exit code.
int report_pipeline(const PipelineConfig& config, std::ostream& out);

/// Manifest entry: stage -> parameter hash, input hashes, output hashes.
struct ManifestEntry {
    std::string stage;
    std::string params;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<ManifestEntry>& entries);

}  // namespace subix

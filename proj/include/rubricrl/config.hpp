#pragma once

#include "rubricrl/gateway.hpp"
#include "rubricrl/grpo.hpp"
#include "rubricrl/preference_data.hpp"
#include "rubricrl/reward.hpp"
#include "rubricrl/templates.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rubricrl {

// A run is described by one JSON document. Relative paths resolve against
// the directory holding the file. Sections only matter to the command
// that reads them; see README.md for the full layout.

struct CurateSection {
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path report;
    CurationConfig curation;
};

struct DistillSection {
    std::filesystem::path input;
    std::string teacher;
    std::filesystem::path records;
    std::filesystem::path splits;
    SplitRatios ratios;
};

enum class TrainMode { toy, export_advantages };

struct ToySection {
    std::map<std::string, std::string> rubric_templates;
    double temperature = 1.0;
    std::optional<std::filesystem::path> policy_out;
};

struct TrainSection {
    TrainMode mode = TrainMode::toy;
    std::string policy;  // endpoint name, export mode only
    std::filesystem::path samples;
    TrainConfig train;
    std::filesystem::path metrics;
    std::optional<std::filesystem::path> export_dir;
    std::optional<std::filesystem::path> checkpoint;
    bool resume = false;
    ToySection toy;
};

struct BenchmarkRef {
    std::string name;
    std::filesystem::path path;
};

struct EvalSection {
    std::vector<std::string> policies;
    std::vector<BenchmarkRef> benchmarks;
    std::filesystem::path output;
    std::optional<std::filesystem::path> text;
    std::optional<std::filesystem::path> per_sample;
};

struct TransferSection {
    std::vector<std::string> sources;
    std::vector<std::string> evaluators;
    BenchmarkRef benchmark;
    std::filesystem::path output;
    std::optional<std::filesystem::path> text;
};

struct RunConfig {
    std::filesystem::path base_dir;
    std::map<std::string, ModelEndpoint> endpoints;
    TemplatePaths template_paths;
    std::string reward = "additive";
    std::vector<std::string> proxies;
    std::uint64_t seed = 0;
    std::size_t max_workers = 4;

    std::optional<CurateSection> curate;
    std::optional<DistillSection> distill;
    std::optional<TrainSection> train;
    std::optional<EvalSection> eval;
    std::optional<TransferSection> transfer;

    // Throws ConfigError naming the missing or malformed key.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);

    // Looks up a named endpoint; ConfigError if unknown.
    const ModelEndpoint& endpoint(const std::string& name) const;

    // Resolves names, loads fixtures and checks remote endpoints so that a
    // command can fail before its first call.
    void prepare_endpoints(const std::vector<std::string>& names);
    PromptTemplates templates() const;
    FeedbackConfig feedback() const;
};

} // namespace rubricrl

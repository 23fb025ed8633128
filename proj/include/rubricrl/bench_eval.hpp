#pragma once

#include "rubricrl/gateway.hpp"
#include "rubricrl/grm_format.hpp"
#include "rubricrl/preference_data.hpp"
#include "rubricrl/templates.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rubricrl {

// Benchmark files use the preference schema; category is required here.
void validate_benchmark(const std::vector<PreferenceSample>& samples);
std::vector<PreferenceSample> load_benchmark(const std::filesystem::path& path);

struct EvalResult {
    std::string endpoint;
    std::string benchmark;
    std::size_t n = 0;
    std::map<std::string, bool> per_sample;
    std::set<std::string> flagged;
    std::map<std::string, double> per_category;
    std::map<std::string, std::size_t> category_sizes;
    double overall_acc = 0.0;
    double macro_acc = 0.0;
    std::optional<double> acc_plus;
    bool degraded = false;

    nlohmann::json to_json() const;
};

// Reduces per-sample correctness into the metrics. Every benchmark id must
// be present in `correct`.
EvalResult score_benchmark(const std::vector<PreferenceSample>& benchmark, const std::map<std::string, bool>& correct,
                           const std::set<std::string>& flagged = {});

// Fraction of query groups whose members are all correct. Samples without
// a group_id are their own group.
double acc_plus(const EvalResult& result, const std::vector<PreferenceSample>& benchmark);

struct EvalOptions {
    PromptTemplates templates = PromptTemplates::defaults();
    ParseOptions parse;
    std::string benchmark_name;
    std::size_t max_workers = 8;
    // Share of flagged samples above which the run is marked degraded.
    double degraded_share = 0.10;
};

// One greedy policy call per sample. Backend errors mark the sample
// incorrect and flagged instead of aborting.
EvalResult evaluate(Gateway& gateway, const ModelEndpoint& policy, const std::vector<PreferenceSample>& benchmark,
                    const EvalOptions& options = {});

struct TransferRecord {
    std::string evaluator;
    std::string rubric_source;
    std::string benchmark;
    double accuracy = 0.0;
    std::size_t n = 0;
    std::size_t correct = 0;
    // Samples scored without a rubric (source failed) or with a failed evaluator call.
    std::size_t flagged = 0;

    nlohmann::json to_json() const;
};

// Calls the rubric source once per sample, then hands its rubric to every
// evaluator through the proxy prompt. When the source yields no usable
// rubric the evaluators get the rubric-free prompt and the sample is
// flagged. Records come out in evaluator order.
std::vector<TransferRecord> transfer_experiment(Gateway& gateway, const ModelEndpoint& rubric_source,
                                                std::span<const ModelEndpoint> evaluators,
                                                const std::vector<PreferenceSample>& benchmark,
                                                const EvalOptions& options = {});

} // namespace rubricrl

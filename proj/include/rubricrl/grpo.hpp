#pragma once

#include "rubricrl/gateway.hpp"
#include "rubricrl/grm_format.hpp"
#include "rubricrl/preference_data.hpp"
#include "rubricrl/proxy_harness.hpp"
#include "rubricrl/reward.hpp"
#include "rubricrl/templates.hpp"
#include "rubricrl/toy_policy.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rubricrl {

inline constexpr double kAdvantageEpsilon = 1e-8;

// (r - mean) / (population std + 1e-8); exactly zero when all rewards are equal.
std::vector<double> group_advantages(std::span<const double> rewards);

struct RolloutGroup {
    std::string sample_id;
    std::vector<std::string> completions;
    std::vector<Parsed<StructuredOutput>> parsed;
    std::vector<RewardBreakdown> rewards;
    std::vector<double> advantages;
    // Per completion; empty for completions that failed to parse.
    std::vector<std::vector<TransferOutcome>> transfers;
    std::size_t proxy_calls = 0;

    std::size_t size() const { return completions.size(); }
};

struct RewardContext {
    PromptTemplates templates = PromptTemplates::defaults();
    std::vector<ModelEndpoint> proxies;
    FeedbackConfig feedback = FeedbackConfig::additive_config();
    TransferOptions transfer;
    ParseOptions parse;
};

// Scores already-drawn completions for one sample: r_acc from the parsed
// verdict, r_format from the parse, r_proxy from the proxy ensemble on the
// parsed rubric. Unparseable completions get r_proxy = -1 without a proxy
// call.
RolloutGroup score_group(Gateway& gateway, const PreferenceSample& sample, std::vector<std::string> completions,
                         const RewardContext& context);

RolloutGroup collect_group(Gateway& gateway, const PreferenceSample& sample, const ModelEndpoint& policy,
                           int group_size, const RewardContext& context);

// ------------------------------------------------------------- training

struct StepMetrics {
    int step = 0;
    double mean_acc = 0.0;
    double mean_proxy = 0.0;
    double mean_format = 0.0;
    double mean_composite = 0.0;

    bool operator==(const StepMetrics&) const = default;
};

StepMetrics summarize(int step, std::span<const RolloutGroup> groups);

std::string metrics_csv(std::span<const StepMetrics> history);

struct TrainConfig {
    int group_size = 7;
    int steps = 200;
    std::uint64_t seed = 0;
    // Samples per step, taken cyclically in file order; 0 means all.
    std::size_t batch_size = 0;
    GrpoConfig grpo;
    std::size_t max_workers = 4;
};

// Toy environment: the policy's action picks one of these rubric texts
// and a verdict, and the completion is rendered from them.
struct ToyEnvironment {
    std::vector<PreferenceSample> samples;
    std::map<std::string, std::string> rubric_templates;
    std::string evaluation = "Each criterion was applied to both responses.";

    std::string render(const ToyAction& action) const;
};

struct Checkpoint {
    int next_step = 0;
    std::uint64_t seed = 0;
    std::string rng_state;
    nlohmann::json policy;
    std::vector<StepMetrics> history;

    nlohmann::json to_json() const;
    static Checkpoint from_json(const nlohmann::json& j);
};

struct TrainHooks {
    // Called after each step's groups are scored, before the update.
    std::function<void(int step, std::span<const RolloutGroup>)> on_groups;
    // Toy mode only: called with the policy after each step's update.
    std::function<void(int step, const ToyPolicy&)> on_update;
    // Written when a backend error aborts a step; the error is rethrown.
    std::optional<std::filesystem::path> checkpoint_path;
    std::optional<Checkpoint> resume;
};

struct TrainResult {
    std::vector<StepMetrics> history;
    std::optional<ToyPolicy> policy;
};

TrainResult train_toy(Gateway& gateway, const ToyEnvironment& env, ToyPolicy policy, const RewardContext& rewards,
                      const TrainConfig& config, const TrainHooks& hooks = {});

// Remote (or scripted) policy endpoint: rewards and advantages are
// computed and handed to `on_groups` for export; no weights change here.
TrainResult train_export(Gateway& gateway, const std::vector<PreferenceSample>& samples,
                         const ModelEndpoint& policy, const RewardContext& rewards, const TrainConfig& config,
                         const TrainHooks& hooks = {});

// One line of JSON per completion.
std::string advantage_export_jsonl(int step, std::span<const RolloutGroup> groups);

} // namespace rubricrl

#pragma once

#include "rubricrl/gateway.hpp"
#include "rubricrl/grm_format.hpp"
#include "rubricrl/preference_data.hpp"
#include "rubricrl/templates.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace rubricrl {

namespace purpose {
inline constexpr const char* policy = "policy";
inline constexpr const char* proxy = "proxy";
inline constexpr const char* teacher = "teacher";
} // namespace purpose

ChatRequest make_policy_request(const PromptTemplates& templates, const PreferenceSample& sample,
                                const std::string& purpose_tag = purpose::policy);
ChatRequest make_proxy_request(const PromptTemplates& templates, const PreferenceSample& sample,
                               const Rubric& rubric);

struct TransferOutcome {
    std::string sample_id;
    std::string proxy_name;
    std::optional<Verdict> proxy_verdict;
    int transferable = 0;
    std::string raw;

    double reward() const { return 2.0 * transferable - 1.0; }
};

// Memoizes outcomes per (sample, proxy, rubric text). Off unless passed in.
class TransferCache {
public:
    std::optional<TransferOutcome> find(const std::string& sample_id, const std::string& proxy,
                                        const std::string& rubric) const;
    void store(const std::string& rubric, const TransferOutcome& outcome);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::tuple<std::string, std::string, std::string>, TransferOutcome> entries_;
};

struct TransferOptions {
    // Greedy proxy decoding keeps rewards reproducible per rubric.
    bool sampled_decoding = false;
    TransferCache* cache = nullptr;
};

// One proxy call. An unparseable proxy reply is a failed transfer; a
// backend error propagates.
TransferOutcome check_transfer(Gateway& gateway, const PromptTemplates& templates, const PreferenceSample& sample,
                               const Rubric& rubric, const ModelEndpoint& proxy, const TransferOptions& options = {});

struct EnsembleOutcome {
    std::vector<TransferOutcome> outcomes;
    double mean_reward = 0.0;
};

EnsembleOutcome check_transfer_ensemble(Gateway& gateway, const PromptTemplates& templates,
                                        const PreferenceSample& sample, const Rubric& rubric,
                                        std::span<const ModelEndpoint> proxies, const TransferOptions& options = {});

struct VerifiedInference {
    std::string sample_id;
    std::optional<Verdict> policy_verdict;
    std::optional<Verdict> proxy_verdict;
    bool agreement = false;
    std::optional<Verdict> final_verdict;
    bool valid = false;

    nlohmann::json to_json() const;
};

// The final verdict is always the policy's; the proxy only adds an
// agreement flag. No proxy call is made when the policy output does not
// parse.
VerifiedInference proxy_verified_infer(Gateway& gateway, const PromptTemplates& templates,
                                       const PreferenceSample& sample, const ModelEndpoint& policy,
                                       const ModelEndpoint& proxy);

void append_disagreement_log(const std::filesystem::path& path, const VerifiedInference& record);

} // namespace rubricrl

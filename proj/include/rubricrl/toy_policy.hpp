#pragma once

#include "rubricrl/grm_format.hpp"
#include "rubricrl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rubricrl {

// A desk-scale stand-in for the judge policy: the action is a choice of
// rubric template plus a verdict.
struct ToyAction {
    std::string rubric_template;
    Verdict verdict = Verdict::first;

    bool operator==(const ToyAction&) const = default;
};

// Tabular softmax policy, one row of logits per context.
class ToyPolicy {
public:
    ToyPolicy(std::vector<ToyAction> actions, std::vector<std::string> contexts, double temperature = 1.0);

    // Every (template, verdict) pair, templates in the given order.
    static ToyPolicy uniform(const std::vector<std::string>& templates, std::vector<std::string> contexts,
                             double temperature = 1.0);

    std::size_t num_actions() const { return actions_.size(); }
    std::size_t num_contexts() const { return contexts_.size(); }
    const std::vector<ToyAction>& actions() const { return actions_; }
    const std::vector<std::string>& contexts() const { return contexts_; }
    double temperature() const { return temperature_; }

    std::size_t context_index(const std::string& context) const;
    std::size_t action_index(const ToyAction& action) const;

    std::span<const double> logits(std::size_t context) const { return logits_[context]; }
    std::span<double> logits(std::size_t context) { return logits_[context]; }

    std::vector<double> probabilities(std::size_t context) const;
    double log_prob(std::size_t context, std::size_t action) const;
    std::size_t sample(std::size_t context, Rng& rng) const;

    // Mean over contexts of the total probability of actions using `rubric_template`.
    double template_probability(const std::string& rubric_template) const;

    nlohmann::json to_json() const;
    static ToyPolicy from_json(const nlohmann::json& j);

    bool operator==(const ToyPolicy&) const = default;

private:
    std::vector<ToyAction> actions_;
    std::vector<std::string> contexts_;
    std::map<std::string, std::size_t> context_index_;
    std::vector<std::vector<double>> logits_;
    double temperature_;
};

struct LabeledContext {
    std::size_t context = 0;
    std::size_t action = 0;
};

double mean_nll(const ToyPolicy& policy, std::span<const LabeledContext> data);

struct ColdStartConfig {
    int steps = 100;
    double learning_rate = 1.0;
};

// Full-batch gradient descent on the mean negative log-likelihood of the
// labeled actions. The step size is kept below 2 * T^2, where the loss is
// guaranteed to decrease.
ToyPolicy toy_cold_start(ToyPolicy policy, std::span<const LabeledContext> data, const ColdStartConfig& config = {});

struct ToyRollout {
    std::size_t context = 0;
    std::size_t action = 0;
    double advantage = 0.0;
};

struct GrpoConfig {
    double learning_rate = 0.1;
    double clip_ratio = 0.2;
    int inner_epochs = 1;
    // Penalty toward the reference policy; off by default.
    double kl_coef = 0.0;
};

// Clipped-ratio policy-gradient ascent. The old policy is `policy` as
// passed in; each inner epoch recomputes ratios against it and applies
// the mean gradient over all rollouts.
ToyPolicy toy_grpo_step(ToyPolicy policy, std::span<const ToyRollout> rollouts, const GrpoConfig& config,
                        const ToyPolicy* reference = nullptr);

} // namespace rubricrl

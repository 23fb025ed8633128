#include "rubricrl/toy_policy.hpp"

#include "rubricrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using json = nlohmann::json;

namespace rubricrl {

ToyPolicy::ToyPolicy(std::vector<ToyAction> actions, std::vector<std::string> contexts, double temperature)
    : actions_(std::move(actions)), contexts_(std::move(contexts)), temperature_(temperature) {
    if (actions_.empty() || contexts_.empty()) {
        throw ValidationError("toy policy needs at least one action and one context");
    }
    if (!(temperature_ > 0.0)) {
        throw ValidationError("toy policy temperature must be positive");
    }
    for (std::size_t i = 0; i < contexts_.size(); ++i) {
        if (!context_index_.emplace(contexts_[i], i).second) {
            throw ValidationError("duplicate toy context '" + contexts_[i] + "'");
        }
    }
    logits_.assign(contexts_.size(), std::vector<double>(actions_.size(), 0.0));
}

ToyPolicy ToyPolicy::uniform(const std::vector<std::string>& templates, std::vector<std::string> contexts,
                             double temperature) {
    std::vector<ToyAction> actions;
    for (const auto& t : templates) {
        actions.push_back({t, Verdict::first});
        actions.push_back({t, Verdict::second});
    }
    return ToyPolicy(std::move(actions), std::move(contexts), temperature);
}

std::size_t ToyPolicy::context_index(const std::string& context) const {
    auto it = context_index_.find(context);
    if (it == context_index_.end()) {
        throw ValidationError("unknown toy context '" + context + "'");
    }
    return it->second;
}

std::size_t ToyPolicy::action_index(const ToyAction& action) const {
    auto it = std::find(actions_.begin(), actions_.end(), action);
    if (it == actions_.end()) {
        throw ValidationError("unknown toy action");
    }
    return static_cast<std::size_t>(it - actions_.begin());
}

std::vector<double> ToyPolicy::probabilities(std::size_t context) const {
    const auto& row = logits_.at(context);
    const double top = *std::max_element(row.begin(), row.end());
    std::vector<double> p(row.size());
    double z = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        p[k] = std::exp((row[k] - top) / temperature_);
        z += p[k];
    }
    for (auto& x : p) {
        x /= z;
    }
    return p;
}

double ToyPolicy::log_prob(std::size_t context, std::size_t action) const {
    const auto& row = logits_.at(context);
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double l : row) {
        z += std::exp((l - top) / temperature_);
    }
    return (row.at(action) - top) / temperature_ - std::log(z);
}

std::size_t ToyPolicy::sample(std::size_t context, Rng& rng) const {
    const auto p = probabilities(context);
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) {
            return k;
        }
    }
    return p.size() - 1;
}

double ToyPolicy::template_probability(const std::string& rubric_template) const {
    double total = 0.0;
    for (std::size_t c = 0; c < contexts_.size(); ++c) {
        const auto p = probabilities(c);
        for (std::size_t k = 0; k < actions_.size(); ++k) {
            if (actions_[k].rubric_template == rubric_template) {
                total += p[k];
            }
        }
    }
    return total / static_cast<double>(contexts_.size());
}

json ToyPolicy::to_json() const {
    json actions = json::array();
    for (const auto& a : actions_) {
        actions.push_back({{"template", a.rubric_template}, {"verdict", to_int(a.verdict)}});
    }
    return json{{"actions", actions}, {"contexts", contexts_}, {"logits", logits_}, {"temperature", temperature_}};
}

ToyPolicy ToyPolicy::from_json(const json& j) {
    std::vector<ToyAction> actions;
    for (const auto& a : j.at("actions")) {
        auto v = verdict_from_int(a.at("verdict").get<long long>());
        if (!v) {
            throw ValidationError("toy action verdict must be 1 or 2");
        }
        actions.push_back({a.at("template").get<std::string>(), *v});
    }
    ToyPolicy p(std::move(actions), j.at("contexts").get<std::vector<std::string>>(),
                j.at("temperature").get<double>());
    auto logits = j.at("logits").get<std::vector<std::vector<double>>>();
    if (logits.size() != p.num_contexts()) {
        throw ValidationError("toy policy logits do not match contexts");
    }
    for (const auto& row : logits) {
        if (row.size() != p.num_actions()) {
            throw ValidationError("toy policy logits do not match actions");
        }
    }
    p.logits_ = std::move(logits);
    return p;
}

double mean_nll(const ToyPolicy& policy, std::span<const LabeledContext> data) {
    if (data.empty()) {
        throw ValidationError("empty dataset");
    }
    double total = 0.0;
    for (const auto& d : data) {
        total -= policy.log_prob(d.context, d.action);
    }
    return total / static_cast<double>(data.size());
}

ToyPolicy toy_cold_start(ToyPolicy policy, std::span<const LabeledContext> data, const ColdStartConfig& config) {
    if (data.empty()) {
        throw ValidationError("cold start needs a non-empty dataset");
    }
    const double t = policy.temperature();
    const double lr = std::min(config.learning_rate, 1.999 * t * t);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    std::vector<std::vector<double>> grad(policy.num_contexts(), std::vector<double>(policy.num_actions()));
    for (int step = 0; step < config.steps; ++step) {
        for (auto& row : grad) {
            std::fill(row.begin(), row.end(), 0.0);
        }
        for (const auto& d : data) {
            const auto p = policy.probabilities(d.context);
            auto& g = grad[d.context];
            for (std::size_t k = 0; k < p.size(); ++k) {
                g[k] += inv_n * (p[k] - (k == d.action ? 1.0 : 0.0)) / t;
            }
        }
        for (std::size_t c = 0; c < grad.size(); ++c) {
            auto row = policy.logits(c);
            for (std::size_t k = 0; k < row.size(); ++k) {
                row[k] -= lr * grad[c][k];
            }
        }
    }
    return policy;
}

ToyPolicy toy_grpo_step(ToyPolicy policy, std::span<const ToyRollout> rollouts, const GrpoConfig& config,
                        const ToyPolicy* reference) {
    if (rollouts.empty()) {
        return policy;
    }
    const double t = policy.temperature();
    const double inv_n = 1.0 / static_cast<double>(rollouts.size());
    const double lo = 1.0 - config.clip_ratio;
    const double hi = 1.0 + config.clip_ratio;

    std::vector<double> old_prob(rollouts.size());
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        old_prob[i] = std::exp(policy.log_prob(rollouts[i].context, rollouts[i].action));
    }
    std::set<std::size_t> touched;
    for (const auto& r : rollouts) {
        touched.insert(r.context);
    }

    std::vector<std::vector<double>> grad(policy.num_contexts(), std::vector<double>(policy.num_actions()));
    for (int epoch = 0; epoch < std::max(1, config.inner_epochs); ++epoch) {
        for (auto& row : grad) {
            std::fill(row.begin(), row.end(), 0.0);
        }
        for (std::size_t i = 0; i < rollouts.size(); ++i) {
            const auto& r = rollouts[i];
            if (r.advantage == 0.0) {
                continue;
            }
            const auto p = policy.probabilities(r.context);
            const double ratio = p[r.action] / old_prob[i];
            // min(ratio * A, clip(ratio) * A) takes the flat clipped branch here.
            const bool clipped = (r.advantage > 0.0 && ratio > hi) || (r.advantage < 0.0 && ratio < lo);
            if (clipped) {
                continue;
            }
            auto& g = grad[r.context];
            const double scale = inv_n * r.advantage * ratio / t;
            for (std::size_t k = 0; k < p.size(); ++k) {
                g[k] += scale * ((k == r.action ? 1.0 : 0.0) - p[k]);
            }
        }
        if (config.kl_coef > 0.0 && reference != nullptr) {
            for (auto c : touched) {
                const auto p = policy.probabilities(c);
                const auto q = reference->probabilities(c);
                double kl = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    kl += p[k] * (std::log(p[k]) - std::log(q[k]));
                }
                for (std::size_t k = 0; k < p.size(); ++k) {
                    grad[c][k] -= config.kl_coef * p[k] * (std::log(p[k]) - std::log(q[k]) - kl) / t;
                }
            }
        }
        for (auto c : touched) {
            auto row = policy.logits(c);
            for (std::size_t k = 0; k < row.size(); ++k) {
                row[k] += config.learning_rate * grad[c][k];
            }
        }
    }
    return policy;
}

} // namespace rubricrl

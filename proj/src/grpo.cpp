#include "rubricrl/grpo.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/parallel.hpp"
#include "rubricrl/rng.hpp"

#include <cmath>
#include <numeric>

using json = nlohmann::json;

namespace rubricrl {

std::vector<double> group_advantages(std::span<const double> rewards) {
    if (rewards.empty()) {
        throw ValidationError("group_advantages needs at least one reward");
    }
    std::vector<double> out(rewards.size(), 0.0);
    const bool all_equal =
        std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); });
    if (all_equal) {
        return out;
    }
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double denom = std::sqrt(var / n) + kAdvantageEpsilon;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        out[i] = (rewards[i] - mean) / denom;
    }
    return out;
}

RolloutGroup score_group(Gateway& gateway, const PreferenceSample& sample, std::vector<std::string> completions,
                         const RewardContext& context) {
    if (context.proxies.empty() && !context.feedback.additive) {
        throw ConfigError("reward config '" + context.feedback.name + "' needs at least one proxy");
    }
    RolloutGroup group;
    group.sample_id = sample.id;
    group.completions = std::move(completions);

    std::vector<double> composites;
    for (const auto& text : group.completions) {
        auto parsed = parse_grm_output(text, context.parse);
        const auto* output = std::get_if<StructuredOutput>(&parsed);
        const bool ok = output != nullptr;

        const double acc = accuracy_reward(ok ? std::optional(output->answer) : std::nullopt, sample.gold_verdict);
        const double fmt = format_reward(ok);
        double proxy = -1.0;
        std::vector<TransferOutcome> transfers;
        if (ok && context.proxies.empty()) {
            proxy = 0.0;
        } else if (ok) {
            auto ensemble = check_transfer_ensemble(gateway, context.templates, sample, output->rubric,
                                                    context.proxies, context.transfer);
            proxy = ensemble.mean_reward;
            group.proxy_calls += ensemble.outcomes.size();
            transfers = std::move(ensemble.outcomes);
        }
        group.rewards.push_back(make_breakdown(acc, proxy, fmt, context.feedback));
        composites.push_back(group.rewards.back().composite);
        group.parsed.push_back(std::move(parsed));
        group.transfers.push_back(std::move(transfers));
    }
    group.advantages = group_advantages(composites);
    return group;
}

RolloutGroup collect_group(Gateway& gateway, const PreferenceSample& sample, const ModelEndpoint& policy,
                           int group_size, const RewardContext& context) {
    const auto responses = gateway.complete_group(policy, make_policy_request(context.templates, sample), group_size);
    std::vector<std::string> texts;
    texts.reserve(responses.size());
    for (const auto& r : responses) {
        texts.push_back(r.content);
    }
    return score_group(gateway, sample, std::move(texts), context);
}

StepMetrics summarize(int step, std::span<const RolloutGroup> groups) {
    StepMetrics m;
    m.step = step;
    std::size_t n = 0;
    for (const auto& g : groups) {
        for (const auto& r : g.rewards) {
            m.mean_acc += r.acc;
            m.mean_proxy += r.proxy;
            m.mean_format += r.format;
            m.mean_composite += r.composite;
            ++n;
        }
    }
    if (n > 0) {
        const double inv = 1.0 / static_cast<double>(n);
        m.mean_acc *= inv;
        m.mean_proxy *= inv;
        m.mean_format *= inv;
        m.mean_composite *= inv;
    }
    return m;
}

std::string metrics_csv(std::span<const StepMetrics> history) {
    std::string out = "step,mean_acc,mean_proxy,mean_format,mean_composite\n";
    for (const auto& m : history) {
        out += std::to_string(m.step) + "," + format_double(m.mean_acc) + "," + format_double(m.mean_proxy) + "," +
               format_double(m.mean_format) + "," + format_double(m.mean_composite) + "\n";
    }
    return out;
}

std::string ToyEnvironment::render(const ToyAction& action) const {
    auto it = rubric_templates.find(action.rubric_template);
    if (it == rubric_templates.end()) {
        throw ValidationError("toy environment has no rubric template '" + action.rubric_template + "'");
    }
    StructuredOutput out;
    out.rubric.raw = it->second;
    out.evaluation = evaluation;
    out.answer = action.verdict;
    return serialize(out);
}

json Checkpoint::to_json() const {
    json h = json::array();
    for (const auto& m : history) {
        h.push_back({{"step", m.step},
                     {"mean_acc", m.mean_acc},
                     {"mean_proxy", m.mean_proxy},
                     {"mean_format", m.mean_format},
                     {"mean_composite", m.mean_composite}});
    }
    return json{{"next_step", next_step}, {"seed", seed}, {"rng_state", rng_state}, {"policy", policy}, {"history", h}};
}

Checkpoint Checkpoint::from_json(const json& j) {
    Checkpoint c;
    c.next_step = j.at("next_step").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.policy = j.at("policy");
    for (const auto& m : j.at("history")) {
        c.history.push_back({m.at("step").get<int>(), m.at("mean_acc").get<double>(), m.at("mean_proxy").get<double>(),
                             m.at("mean_format").get<double>(), m.at("mean_composite").get<double>()});
    }
    return c;
}

namespace {

std::vector<std::size_t> batch_for_step(int step, std::size_t batch_size, std::size_t n) {
    std::vector<std::size_t> idx;
    if (batch_size == 0 || batch_size >= n) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    const std::size_t start = (static_cast<std::size_t>(step) * batch_size) % n;
    for (std::size_t j = 0; j < batch_size; ++j) {
        idx.push_back((start + j) % n);
    }
    return idx;
}

void validate_train_config(const TrainConfig& config) {
    if (config.group_size < 1) {
        throw ConfigError("group size must be >= 1");
    }
    if (config.steps < 0) {
        throw ConfigError("steps must be >= 0");
    }
}

void save_checkpoint(const TrainHooks& hooks, const Checkpoint& cp) {
    if (hooks.checkpoint_path) {
        write_file_atomic(*hooks.checkpoint_path, cp.to_json().dump(2));
    }
}

} // namespace

TrainResult train_toy(Gateway& gateway, const ToyEnvironment& env, ToyPolicy policy, const RewardContext& rewards,
                      const TrainConfig& config, const TrainHooks& hooks) {
    validate_train_config(config);
    if (env.samples.empty()) {
        throw ValidationError("toy environment has no samples");
    }
    Rng rng(config.seed);
    TrainResult result;
    int start = 0;
    if (hooks.resume) {
        start = hooks.resume->next_step;
        restore_rng_state(rng, hooks.resume->rng_state);
        policy = ToyPolicy::from_json(hooks.resume->policy);
        result.history = hooks.resume->history;
    }
    const ToyPolicy reference = policy;

    std::vector<std::size_t> context_of(env.samples.size());
    for (std::size_t i = 0; i < env.samples.size(); ++i) {
        context_of[i] = policy.context_index(env.samples[i].id);
    }

    for (int step = start; step < config.steps; ++step) {
        Checkpoint cp{step, config.seed, rng_state(rng), policy.to_json(), result.history};

        const auto batch = batch_for_step(step, config.batch_size, env.samples.size());
        std::vector<std::vector<std::size_t>> actions(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            for (int g = 0; g < config.group_size; ++g) {
                actions[b].push_back(policy.sample(context_of[batch[b]], rng));
            }
        }

        std::vector<RolloutGroup> groups(batch.size());
        try {
            parallel_for(batch.size(), config.max_workers, [&](std::size_t b) {
                std::vector<std::string> texts;
                for (auto a : actions[b]) {
                    texts.push_back(env.render(policy.actions()[a]));
                }
                groups[b] = score_group(gateway, env.samples[batch[b]], std::move(texts), rewards);
            });
        } catch (const BackendError&) {
            save_checkpoint(hooks, cp);
            throw;
        }
        if (hooks.on_groups) {
            hooks.on_groups(step, groups);
        }
        result.history.push_back(summarize(step, groups));

        std::vector<ToyRollout> rollouts;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            for (std::size_t g = 0; g < actions[b].size(); ++g) {
                rollouts.push_back({context_of[batch[b]], actions[b][g], groups[b].advantages[g]});
            }
        }
        policy = toy_grpo_step(std::move(policy), rollouts, config.grpo, &reference);
        if (hooks.on_update) {
            hooks.on_update(step, policy);
        }
    }
    if (hooks.checkpoint_path) {
        save_checkpoint(hooks, Checkpoint{config.steps, config.seed, rng_state(rng), policy.to_json(), result.history});
    }
    result.policy = std::move(policy);
    return result;
}

TrainResult train_export(Gateway& gateway, const std::vector<PreferenceSample>& samples,
                         const ModelEndpoint& policy, const RewardContext& rewards, const TrainConfig& config,
                         const TrainHooks& hooks) {
    validate_train_config(config);
    if (samples.empty()) {
        throw ValidationError("no training samples");
    }
    TrainResult result;
    int start = 0;
    if (hooks.resume) {
        start = hooks.resume->next_step;
        result.history = hooks.resume->history;
    }
    for (int step = start; step < config.steps; ++step) {
        const auto batch = batch_for_step(step, config.batch_size, samples.size());
        std::vector<RolloutGroup> groups(batch.size());
        try {
            parallel_for(batch.size(), config.max_workers, [&](std::size_t b) {
                groups[b] = collect_group(gateway, samples[batch[b]], policy, config.group_size, rewards);
            });
        } catch (const BackendError&) {
            save_checkpoint(hooks, Checkpoint{step, config.seed, "", json::object(), result.history});
            throw;
        }
        if (hooks.on_groups) {
            hooks.on_groups(step, groups);
        }
        result.history.push_back(summarize(step, groups));
    }
    return result;
}

std::string advantage_export_jsonl(int step, std::span<const RolloutGroup> groups) {
    std::string out;
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto& r = g.rewards[i];
            json j{{"step", step},
                   {"sample_id", g.sample_id},
                   {"draw", i},
                   {"text_hash", sha256_hex(g.completions[i])},
                   {"r_acc", r.acc},
                   {"r_format", r.format},
                   {"r_proxy", r.proxy},
                   {"composite", r.composite},
                   {"advantage", g.advantages[i]}};
            out += j.dump();
            out += '\n';
        }
    }
    return out;
}

} // namespace rubricrl

#include "rubricrl/proxy_harness.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/reward.hpp"

#include <future>

using json = nlohmann::json;

namespace rubricrl {

namespace {

ChatRequest make_request(const PromptTemplate& tmpl, std::string user, const PreferenceSample& sample,
                         const std::string& purpose_tag) {
    ChatRequest r;
    if (!tmpl.system.empty()) {
        r.messages.push_back({Role::system, tmpl.system});
    }
    r.messages.push_back({Role::user, std::move(user)});
    if (sample.image_ref) {
        r.image_refs.push_back(*sample.image_ref);
    }
    r.key = FixtureKey{sample.id, purpose_tag, 0};
    return r;
}

json verdict_json(const std::optional<Verdict>& v) { return v ? json(to_int(*v)) : json(nullptr); }

} // namespace

ChatRequest make_policy_request(const PromptTemplates& templates, const PreferenceSample& sample,
                                const std::string& purpose_tag) {
    return make_request(templates.policy, render_policy_prompt(templates, sample), sample, purpose_tag);
}

ChatRequest make_proxy_request(const PromptTemplates& templates, const PreferenceSample& sample,
                               const Rubric& rubric) {
    return make_request(templates.proxy, render_proxy_prompt(templates, sample, rubric), sample, purpose::proxy);
}

std::optional<TransferOutcome> TransferCache::find(const std::string& sample_id, const std::string& proxy,
                                                   const std::string& rubric) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find({sample_id, proxy, rubric});
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void TransferCache::store(const std::string& rubric, const TransferOutcome& outcome) {
    std::lock_guard lock(mu_);
    entries_.insert_or_assign({outcome.sample_id, outcome.proxy_name, rubric}, outcome);
}

std::size_t TransferCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

TransferOutcome check_transfer(Gateway& gateway, const PromptTemplates& templates, const PreferenceSample& sample,
                               const Rubric& rubric, const ModelEndpoint& proxy, const TransferOptions& options) {
    if (trim(rubric.raw).empty()) {
        throw ValidationError("check_transfer needs a non-empty rubric");
    }
    if (options.cache) {
        if (auto hit = options.cache->find(sample.id, proxy.name, rubric.raw)) {
            return *hit;
        }
    }
    ChatRequest request = make_proxy_request(templates, sample, rubric);
    if (!options.sampled_decoding) {
        request.temperature = 0.0;
    }
    const ChatResponse response = gateway.complete(proxy, request);

    TransferOutcome out;
    out.sample_id = sample.id;
    out.proxy_name = proxy.name;
    out.raw = response.content;
    auto parsed = parse_proxy_output(response.content);
    if (auto* p = std::get_if<ProxyOutput>(&parsed)) {
        out.proxy_verdict = p->answer;
    }
    out.transferable = transferability(out.proxy_verdict, sample.gold_verdict);
    if (options.cache) {
        options.cache->store(rubric.raw, out);
    }
    return out;
}

EnsembleOutcome check_transfer_ensemble(Gateway& gateway, const PromptTemplates& templates,
                                        const PreferenceSample& sample, const Rubric& rubric,
                                        std::span<const ModelEndpoint> proxies, const TransferOptions& options) {
    if (proxies.empty()) {
        throw ValidationError("proxy ensemble is empty");
    }
    EnsembleOutcome out;
    if (proxies.size() == 1) {
        out.outcomes.push_back(check_transfer(gateway, templates, sample, rubric, proxies[0], options));
    } else {
        std::vector<std::future<TransferOutcome>> pending;
        for (const auto& proxy : proxies) {
            pending.push_back(std::async(std::launch::async, [&, p = &proxy] {
                return check_transfer(gateway, templates, sample, rubric, *p, options);
            }));
        }
        std::exception_ptr error;
        for (auto& f : pending) {
            try {
                out.outcomes.push_back(f.get());
            } catch (...) {
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
        if (error) {
            std::rethrow_exception(error);
        }
    }
    std::vector<double> rewards;
    rewards.reserve(out.outcomes.size());
    for (const auto& o : out.outcomes) {
        rewards.push_back(proxy_reward(o.proxy_verdict, sample.gold_verdict));
    }
    out.mean_reward = ensemble_proxy_reward(rewards);
    return out;
}

json VerifiedInference::to_json() const {
    return json{{"sample_id", sample_id},
                {"policy_verdict", verdict_json(policy_verdict)},
                {"proxy_verdict", verdict_json(proxy_verdict)},
                {"agreement", agreement},
                {"final_verdict", verdict_json(final_verdict)},
                {"valid", valid}};
}

VerifiedInference proxy_verified_infer(Gateway& gateway, const PromptTemplates& templates,
                                       const PreferenceSample& sample, const ModelEndpoint& policy,
                                       const ModelEndpoint& proxy) {
    VerifiedInference record;
    record.sample_id = sample.id;

    ChatRequest request = make_policy_request(templates, sample);
    request.temperature = 0.0;
    const ChatResponse response = gateway.complete(policy, request);
    auto parsed = parse_grm_output(response.content);
    auto* output = std::get_if<StructuredOutput>(&parsed);
    if (output == nullptr) {
        return record;
    }
    record.valid = true;
    record.policy_verdict = output->answer;
    record.final_verdict = output->answer;

    const TransferOutcome transfer = check_transfer(gateway, templates, sample, output->rubric, proxy);
    record.proxy_verdict = transfer.proxy_verdict;
    record.agreement = record.proxy_verdict == record.policy_verdict;
    return record;
}

void append_disagreement_log(const std::filesystem::path& path, const VerifiedInference& record) {
    append_line(path, record.to_json().dump());
}

} // namespace rubricrl

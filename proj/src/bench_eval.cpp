#include "rubricrl/bench_eval.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/parallel.hpp"
#include "rubricrl/proxy_harness.hpp"

using json = nlohmann::json;

namespace rubricrl {

void validate_benchmark(const std::vector<PreferenceSample>& samples) {
    if (samples.empty()) {
        throw ValidationError("benchmark is empty");
    }
    for (const auto& s : samples) {
        if (!s.category || trim(*s.category).empty()) {
            throw ValidationError("benchmark sample '" + s.id + "' has no category");
        }
    }
}

std::vector<PreferenceSample> load_benchmark(const std::filesystem::path& path) {
    auto samples = load_samples(path);
    validate_benchmark(samples);
    return samples;
}

json EvalResult::to_json() const {
    json j{{"endpoint", endpoint},
           {"benchmark", benchmark},
           {"n", n},
           {"overall_acc", overall_acc},
           {"macro_acc", macro_acc},
           {"acc_plus", acc_plus ? json(*acc_plus) : json(nullptr)},
           {"per_category", per_category},
           {"flagged", flagged.size()},
           {"degraded", degraded}};
    return j;
}

EvalResult score_benchmark(const std::vector<PreferenceSample>& benchmark, const std::map<std::string, bool>& correct,
                           const std::set<std::string>& flagged) {
    validate_benchmark(benchmark);
    EvalResult r;
    r.n = benchmark.size();
    r.flagged = flagged;
    std::map<std::string, std::size_t> hits;
    std::size_t total_hits = 0;
    for (const auto& s : benchmark) {
        auto it = correct.find(s.id);
        if (it == correct.end()) {
            throw ValidationError("no outcome for benchmark sample '" + s.id + "'");
        }
        r.per_sample[s.id] = it->second;
        ++r.category_sizes[*s.category];
        hits[*s.category] += it->second ? 1 : 0;
        total_hits += it->second ? 1 : 0;
    }
    double macro = 0.0;
    for (const auto& [cat, size] : r.category_sizes) {
        const double acc = static_cast<double>(hits[cat]) / static_cast<double>(size);
        r.per_category[cat] = acc;
        macro += acc;
    }
    r.overall_acc = static_cast<double>(total_hits) / static_cast<double>(r.n);
    r.macro_acc = macro / static_cast<double>(r.category_sizes.size());
    r.acc_plus = acc_plus(r, benchmark);
    return r;
}

double acc_plus(const EvalResult& result, const std::vector<PreferenceSample>& benchmark) {
    std::map<std::string, bool> groups;
    std::size_t singles = 0;
    std::size_t singles_correct = 0;
    for (const auto& s : benchmark) {
        auto it = result.per_sample.find(s.id);
        const bool ok = it != result.per_sample.end() && it->second;
        if (!s.group_id) {
            ++singles;
            singles_correct += ok ? 1 : 0;
            continue;
        }
        auto [g, inserted] = groups.emplace(*s.group_id, ok);
        if (!inserted) {
            g->second = g->second && ok;
        }
    }
    const std::size_t total = groups.size() + singles;
    if (total == 0) {
        return 0.0;
    }
    std::size_t good = singles_correct;
    for (const auto& [id, ok] : groups) {
        good += ok ? 1 : 0;
    }
    return static_cast<double>(good) / static_cast<double>(total);
}

EvalResult evaluate(Gateway& gateway, const ModelEndpoint& policy, const std::vector<PreferenceSample>& benchmark,
                    const EvalOptions& options) {
    validate_benchmark(benchmark);
    std::vector<char> correct(benchmark.size(), 0);
    std::vector<char> flagged(benchmark.size(), 0);
    parallel_for(benchmark.size(), options.max_workers, [&](std::size_t i) {
        const auto& sample = benchmark[i];
        ChatRequest request = make_policy_request(options.templates, sample);
        request.temperature = 0.0;
        try {
            const auto response = gateway.complete(policy, request);
            auto parsed = parse_grm_output(response.content, options.parse);
            if (auto* out = std::get_if<StructuredOutput>(&parsed)) {
                correct[i] = out->answer == sample.gold_verdict;
            }
        } catch (const BackendError& e) {
            flagged[i] = 1;
            warn("eval " + policy.name + " " + sample.id + ": " + e.what());
        }
    });

    std::map<std::string, bool> outcome;
    std::set<std::string> flagged_ids;
    for (std::size_t i = 0; i < benchmark.size(); ++i) {
        outcome[benchmark[i].id] = correct[i] != 0;
        if (flagged[i]) {
            flagged_ids.insert(benchmark[i].id);
        }
    }
    EvalResult r = score_benchmark(benchmark, outcome, flagged_ids);
    r.endpoint = policy.name;
    r.benchmark = options.benchmark_name;
    r.degraded = static_cast<double>(flagged_ids.size()) > options.degraded_share * static_cast<double>(r.n);
    return r;
}

json TransferRecord::to_json() const {
    return json{{"evaluator", evaluator}, {"rubric_source", rubric_source}, {"benchmark", benchmark},
                {"accuracy", accuracy},   {"n", n},                         {"correct", correct},
                {"flagged", flagged}};
}

std::vector<TransferRecord> transfer_experiment(Gateway& gateway, const ModelEndpoint& rubric_source,
                                                std::span<const ModelEndpoint> evaluators,
                                                const std::vector<PreferenceSample>& benchmark,
                                                const EvalOptions& options) {
    if (evaluators.empty()) {
        return {};
    }
    if (benchmark.empty()) {
        throw ValidationError("benchmark is empty");
    }
    const std::size_t n = benchmark.size();
    const std::size_t k = evaluators.size();
    std::vector<char> correct(n * k, 0);
    std::vector<char> flagged(n * k, 0);

    parallel_for(n, options.max_workers, [&](std::size_t i) {
        const auto& sample = benchmark[i];
        std::optional<Rubric> rubric;
        try {
            ChatRequest request = make_policy_request(options.templates, sample);
            request.temperature = 0.0;
            const auto response = gateway.complete(rubric_source, request);
            auto parsed = parse_grm_output(response.content, options.parse);
            if (auto* out = std::get_if<StructuredOutput>(&parsed)) {
                rubric = out->rubric;
            }
        } catch (const BackendError& e) {
            warn("rubric source " + rubric_source.name + " " + sample.id + ": " + e.what());
        }

        ChatRequest request;
        if (rubric) {
            request = make_proxy_request(options.templates, sample, *rubric);
        } else {
            const auto& tmpl = options.templates.proxy_no_rubric;
            if (!tmpl.system.empty()) {
                request.messages.push_back({Role::system, tmpl.system});
            }
            request.messages.push_back({Role::user, render_proxy_no_rubric_prompt(options.templates, sample)});
            if (sample.image_ref) {
                request.image_refs.push_back(*sample.image_ref);
            }
            request.key = FixtureKey{sample.id, purpose::proxy, 0};
        }
        request.temperature = 0.0;

        for (std::size_t e = 0; e < k; ++e) {
            const std::size_t cell = e * n + i;
            flagged[cell] = rubric ? 0 : 1;
            try {
                const auto response = gateway.complete(evaluators[e], request);
                auto parsed = parse_proxy_output(response.content);
                if (auto* out = std::get_if<ProxyOutput>(&parsed)) {
                    correct[cell] = out->answer == sample.gold_verdict;
                }
            } catch (const BackendError& err) {
                flagged[cell] = 1;
                warn("evaluator " + evaluators[e].name + " " + sample.id + ": " + err.what());
            }
        }
    });

    std::vector<TransferRecord> records;
    for (std::size_t e = 0; e < k; ++e) {
        TransferRecord r;
        r.evaluator = evaluators[e].name;
        r.rubric_source = rubric_source.name;
        r.benchmark = options.benchmark_name;
        r.n = n;
        for (std::size_t i = 0; i < n; ++i) {
            r.correct += correct[e * n + i] ? 1 : 0;
            r.flagged += flagged[e * n + i] ? 1 : 0;
        }
        r.accuracy = static_cast<double>(r.correct) / static_cast<double>(n);
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace rubricrl

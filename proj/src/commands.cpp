#include "rubricrl/commands.hpp"

#include "rubricrl/bench_eval.hpp"
#include "rubricrl/errors.hpp"
#include "rubricrl/grpo.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/parallel.hpp"
#include "rubricrl/proxy_harness.hpp"
#include "rubricrl/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace rubricrl {

namespace {

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::is_regular_file(path)) {
        throw ConfigError(what + " not found: " + path.string());
    }
}

template <typename T>
const T& require_section(const std::optional<T>& section, const char* name) {
    if (!section) {
        throw ConfigError(std::string("config has no '") + name + "' section");
    }
    return *section;
}

void say(const std::string& line) { std::cout << line << '\n'; }

std::string step_file_name(int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06d.jsonl", step);
    return buf;
}

std::vector<PreferenceSample> load_benchmark_checked(const BenchmarkRef& ref) {
    require_file(ref.path, "benchmark " + ref.name);
    return load_benchmark(ref.path);
}

} // namespace

void cmd_curate(RunConfig config, const GlobalOptions& options) {
    const auto& s = require_section(config.curate, "curate");
    require_file(s.input, "curate input");
    if (options.dry_run) {
        say("config ok");
        return;
    }
    const auto samples = load_samples(s.input);
    const auto result = curate(samples, s.curation);
    if (result.kept.empty()) {
        warn("warning: curation kept no samples");
    }
    save_samples(s.output, result.kept);
    write_file_atomic(s.report, result.report.to_json().dump(2) + "\n");
    say("curated " + std::to_string(result.report.input) + " -> " + std::to_string(result.report.kept));
}

void cmd_distill(RunConfig config, const GlobalOptions& options, Gateway& gateway) {
    const auto& s = require_section(config.distill, "distill");
    require_file(s.input, "distill input");
    config.prepare_endpoints({s.teacher});
    const auto templates = config.templates();
    const auto samples = load_samples(s.input);
    const std::uint64_t seed = options.seed.value_or(config.seed);
    {
        // Ratio errors surface before any teacher call.
        const double sum = s.ratios.proxy_sft + s.ratios.proxy_rl + s.ratios.grm_sft;
        if (s.ratios.proxy_sft < 0 || s.ratios.proxy_rl < 0 || s.ratios.grm_sft < 0 || sum > 1.0 + 1e-9) {
            throw ConfigError("distill ratios must be non-negative and sum to at most 1");
        }
    }
    if (options.dry_run) {
        say("config ok");
        return;
    }

    const auto& teacher = config.endpoint(s.teacher);
    std::vector<std::optional<DistilledRecord>> records(samples.size());
    std::vector<std::exception_ptr> failures(samples.size());
    parallel_for(samples.size(), config.max_workers, [&](std::size_t i) {
        try {
            ChatRequest request = make_policy_request(templates, samples[i], purpose::teacher);
            request.temperature = 0.0;
            auto response = gateway.complete(teacher, request);
            records[i] = make_distilled_record(samples[i], std::move(response.content));
        } catch (const BackendError&) {
            failures[i] = std::current_exception();
        }
    });

    std::string lines;
    std::vector<DistilledRecord> done;
    for (auto& r : records) {
        if (r) {
            lines += r->to_json().dump() + "\n";
            done.push_back(std::move(*r));
        }
    }
    write_file_atomic(s.records, lines);
    for (const auto& f : failures) {
        if (f) {
            warn("distill stopped: kept " + std::to_string(done.size()) + " of " + std::to_string(samples.size()) +
                 " records");
            std::rethrow_exception(f);
        }
    }

    const auto split = split_by_teacher_verdict(done, samples);
    const auto allocation = allocate_splits(split.correct, split.hard, s.ratios, seed);
    write_file_atomic(s.splits, allocation.to_json().dump(2) + "\n");
    say("distilled " + std::to_string(done.size()) + " records, " + std::to_string(split.correct.size()) +
        " correct");
}

void cmd_train(RunConfig config, const GlobalOptions& options, Gateway& gateway) {
    const auto& s = require_section(config.train, "train");
    require_file(s.samples, "train samples");
    TrainConfig tc = s.train;
    tc.seed = options.seed.value_or(config.seed);
    tc.max_workers = config.max_workers;
    if (tc.group_size < 1 || tc.steps < 0) {
        throw ConfigError("train: group_size must be >= 1 and steps >= 0");
    }

    std::vector<std::string> names = config.proxies;
    if (s.mode == TrainMode::export_advantages) {
        if (s.policy.empty()) {
            throw ConfigError("train: export mode needs a policy endpoint");
        }
        names.push_back(s.policy);
    }
    config.prepare_endpoints(names);
    if (s.mode == TrainMode::export_advantages && !s.export_dir) {
        const bool remote = config.endpoint(s.policy).kind == EndpointKind::remote;
        throw ConfigError(std::string("train: ") + (remote ? "a remote policy" : "export mode") +
                          " needs export_dir; weights are updated elsewhere");
    }
    if (s.mode == TrainMode::toy && !s.policy.empty() && config.endpoint(s.policy).kind == EndpointKind::remote) {
        throw ConfigError("train: toy mode cannot drive a remote policy; use mode 'export'");
    }
    if (s.mode == TrainMode::toy && s.toy.rubric_templates.empty()) {
        throw ConfigError("train: toy mode needs toy.rubric_templates");
    }

    RewardContext ctx;
    ctx.templates = config.templates();
    ctx.feedback = config.feedback();
    for (const auto& p : config.proxies) {
        ctx.proxies.push_back(config.endpoint(p));
    }
    if (ctx.proxies.empty() && !ctx.feedback.additive) {
        throw ConfigError("reward config '" + ctx.feedback.name + "' needs at least one proxy");
    }
    const auto samples = load_samples(s.samples);

    TrainHooks hooks;
    hooks.checkpoint_path = s.checkpoint;
    if (s.resume && s.checkpoint && fs::exists(*s.checkpoint)) {
        try {
            hooks.resume = Checkpoint::from_json(json::parse(read_text_file(*s.checkpoint)));
        } catch (const json::exception& e) {
            throw DataError("bad checkpoint " + s.checkpoint->string() + ": " + e.what());
        }
    }
    if (s.export_dir) {
        hooks.on_groups = [dir = *s.export_dir](int step, std::span<const RolloutGroup> groups) {
            fs::create_directories(dir);
            write_file_atomic(dir / step_file_name(step), advantage_export_jsonl(step, groups));
        };
    }
    if (options.dry_run) {
        say("config ok");
        return;
    }

    TrainResult result;
    if (s.mode == TrainMode::toy) {
        ToyEnvironment env;
        env.samples = samples;
        env.rubric_templates = s.toy.rubric_templates;
        std::vector<std::string> template_names;
        std::vector<std::string> contexts;
        for (const auto& [name, text] : env.rubric_templates) {
            template_names.push_back(name);
        }
        for (const auto& sample : samples) {
            contexts.push_back(sample.id);
        }
        auto policy = ToyPolicy::uniform(template_names, contexts, s.toy.temperature);
        result = train_toy(gateway, env, std::move(policy), ctx, tc, hooks);
        if (s.toy.policy_out && result.policy) {
            write_file_atomic(*s.toy.policy_out, result.policy->to_json().dump(2) + "\n");
        }
    } else {
        result = train_export(gateway, samples, config.endpoint(s.policy), ctx, tc, hooks);
    }
    write_file_atomic(s.metrics, metrics_csv(result.history));
    say("trained " + std::to_string(result.history.size()) + " steps");
}

void cmd_eval(RunConfig config, const GlobalOptions& options, Gateway& gateway) {
    const auto& s = require_section(config.eval, "eval");
    if (s.policies.empty() || s.benchmarks.empty()) {
        throw ConfigError("eval: needs at least one policy and one benchmark");
    }
    config.prepare_endpoints(s.policies);
    EvalOptions eo;
    eo.templates = config.templates();
    eo.max_workers = config.max_workers;
    std::vector<std::vector<PreferenceSample>> benches;
    for (const auto& b : s.benchmarks) {
        benches.push_back(load_benchmark_checked(b));
    }
    if (options.dry_run) {
        say("config ok");
        return;
    }

    std::vector<EvalResult> results;
    std::string per_sample;
    for (const auto& name : s.policies) {
        for (std::size_t b = 0; b < benches.size(); ++b) {
            eo.benchmark_name = s.benchmarks[b].name;
            auto r = evaluate(gateway, config.endpoint(name), benches[b], eo);
            if (r.degraded) {
                warn("warning: " + name + " on " + eo.benchmark_name + " is degraded (" +
                     std::to_string(r.flagged.size()) + " of " + std::to_string(r.n) + " samples flagged)");
            }
            for (const auto& [id, ok] : r.per_sample) {
                per_sample += json{{"endpoint", name},
                                   {"benchmark", eo.benchmark_name},
                                   {"id", id},
                                   {"correct", ok},
                                   {"flagged", r.flagged.count(id) > 0}}
                                  .dump() +
                              "\n";
            }
            results.push_back(std::move(r));
        }
    }
    const auto table = eval_table(results);
    write_file_atomic(s.output, render_csv(table));
    if (s.text) {
        write_file_atomic(*s.text, render_text(table));
    }
    if (s.per_sample) {
        write_file_atomic(*s.per_sample, per_sample);
    }
    std::cout << render_text(table);
}

void cmd_transfer(RunConfig config, const GlobalOptions& options, Gateway& gateway) {
    const auto& s = require_section(config.transfer, "transfer");
    if (s.sources.empty()) {
        throw ConfigError("transfer: needs at least one rubric source");
    }
    std::vector<std::string> names = s.sources;
    names.insert(names.end(), s.evaluators.begin(), s.evaluators.end());
    config.prepare_endpoints(names);
    EvalOptions eo;
    eo.templates = config.templates();
    eo.max_workers = config.max_workers;
    eo.benchmark_name = s.benchmark.name;
    const auto bench = load_benchmark_checked(s.benchmark);
    if (options.dry_run) {
        say("config ok");
        return;
    }

    std::vector<ModelEndpoint> evaluators;
    for (const auto& e : s.evaluators) {
        evaluators.push_back(config.endpoint(e));
    }
    std::vector<TransferRecord> records;
    for (const auto& src : s.sources) {
        auto part = transfer_experiment(gateway, config.endpoint(src), evaluators, bench, eo);
        records.insert(records.end(), part.begin(), part.end());
    }
    const auto table = transfer_table(records);
    write_file_atomic(s.output, render_csv(table));
    if (s.text) {
        write_file_atomic(*s.text, render_text(table));
    }
    std::cout << render_text(table);
}

int run_command(const std::string& command, const std::string& config_path, const GlobalOptions& options,
                Gateway& gateway) {
    try {
        RunConfig config = RunConfig::load(config_path);
        if (command == "curate") {
            cmd_curate(std::move(config), options);
        } else if (command == "distill") {
            cmd_distill(std::move(config), options, gateway);
        } else if (command == "train") {
            cmd_train(std::move(config), options, gateway);
        } else if (command == "eval") {
            cmd_eval(std::move(config), options, gateway);
        } else if (command == "transfer") {
            cmd_transfer(std::move(config), options, gateway);
        } else {
            throw ConfigError("unknown command '" + command + "'");
        }
        return exit_code::ok;
    } catch (const ConfigError& e) {
        warn(std::string("config error: ") + e.what());
        return exit_code::config;
    } catch (const BackendError& e) {
        warn(std::string("backend error: ") + e.what());
        return exit_code::backend;
    } catch (const DataError& e) {
        warn(std::string("data error: ") + e.what());
        return exit_code::data;
    } catch (const std::exception& e) {
        warn(std::string("error: ") + e.what());
        return exit_code::internal;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Rubric-based generative reward model pipeline"};
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    app.add_option("--config", config_path, "Run config (JSON)")->required();
    app.add_option("--seed", seed, "Override the config seed");
    app.add_flag("--dry-run", dry_run, "Validate the config and inputs, then stop");
    app.require_subcommand(1);
    app.fallthrough();
    std::string command;
    for (const char* name : {"curate", "distill", "train", "eval", "transfer"}) {
        app.add_subcommand(name, std::string("Run the ") + name + " stage")->callback([&command, name] {
            command = name;
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::config;
    }
    Gateway gateway;
    return run_command(command, config_path, GlobalOptions{seed, dry_run}, gateway);
}

} // namespace rubricrl

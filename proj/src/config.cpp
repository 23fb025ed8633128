#include "rubricrl/config.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace rubricrl {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return it->get<T>();
}

const json& require_key(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        throw ConfigError(where + ": missing '" + key + "'");
    }
    return *it;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path path_at(const json& j, const char* key, const fs::path& base, const std::string& where) {
    return resolve(base, require_key(j, key, where).get<std::string>());
}

std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return resolve(base, it->get<std::string>());
}

std::chrono::milliseconds ms(const json& j, const char* key, std::chrono::milliseconds fallback) {
    return std::chrono::milliseconds(get_or<long long>(j, key, fallback.count()));
}

ModelEndpoint endpoint_from_json(const std::string& name, const json& j, const fs::path& base) {
    const std::string where = "endpoint '" + name + "'";
    const auto kind = get_or<std::string>(j, "kind", "scripted");
    ModelEndpoint e;
    if (kind == "scripted") {
        e.kind = EndpointKind::scripted;
        e.temperature = 0.0;
        e.fixture_path = path_at(j, "fixture", base, where);
    } else if (kind == "remote") {
        e.kind = EndpointKind::remote;
        e.base_url = require_key(j, "base_url", where).get<std::string>();
        e.model_id = require_key(j, "model", where).get<std::string>();
        e.api_key_env = get_or<std::string>(j, "api_key_env", "");
    } else {
        throw ConfigError(where + ": kind must be 'scripted' or 'remote'");
    }
    e.name = name;
    e.temperature = get_or(j, "temperature", e.temperature);
    e.max_tokens = get_or(j, "max_tokens", e.max_tokens);
    e.timeout = ms(j, "timeout_ms", e.timeout);
    e.max_retries = get_or(j, "max_retries", e.max_retries);
    e.max_in_flight = get_or(j, "max_in_flight", e.max_in_flight);
    e.backoff_initial = ms(j, "backoff_initial_ms", e.backoff_initial);
    e.backoff_max = ms(j, "backoff_max_ms", e.backoff_max);
    e.backoff_jitter = ms(j, "backoff_jitter_ms", e.backoff_jitter);
    return e;
}

std::vector<std::string> names_at(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        return {};
    }
    if (it->is_string()) {
        return {it->get<std::string>()};
    }
    return it->get<std::vector<std::string>>();
}

BenchmarkRef benchmark_from_json(const json& j, const fs::path& base, const std::string& where) {
    BenchmarkRef b;
    b.path = path_at(j, "path", base, where);
    b.name = get_or<std::string>(j, "name", b.path.stem().string());
    return b;
}

RunConfig parse(const json& j, const fs::path& base) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig c;
    c.base_dir = base;
    if (auto it = j.find("endpoints"); it != j.end()) {
        for (const auto& [name, value] : it->items()) {
            c.endpoints.emplace(name, endpoint_from_json(name, value, base));
        }
    }
    if (auto it = j.find("templates"); it != j.end()) {
        const auto& t = *it;
        auto slot = [&](const char* key) { return optional_path(t, key, base).value_or(fs::path()); };
        c.template_paths.policy_system = slot("policy_system");
        c.template_paths.policy_user = slot("policy_user");
        c.template_paths.proxy_system = slot("proxy_system");
        c.template_paths.proxy_user = slot("proxy_user");
        c.template_paths.proxy_no_rubric_user = slot("proxy_no_rubric_user");
    }
    if (auto it = j.find("reward"); it != j.end()) {
        c.reward = get_or<std::string>(*it, "config", c.reward);
        c.proxies = names_at(*it, "proxies");
    }
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.max_workers = get_or<std::size_t>(j, "max_workers", c.max_workers);
    if (c.max_workers == 0) {
        throw ConfigError("max_workers must be positive");
    }

    if (auto it = j.find("curate"); it != j.end()) {
        const auto& s = *it;
        CurateSection cs;
        cs.input = path_at(s, "input", base, "curate");
        cs.output = path_at(s, "output", base, "curate");
        cs.report = path_at(s, "report", base, "curate");
        auto& cc = cs.curation;
        cc.min_response_tokens = get_or(s, "min_response_tokens", cc.min_response_tokens);
        cc.max_length_ratio = get_or(s, "max_length_ratio", cc.max_length_ratio);
        cc.difficulty_floor = get_or(s, "difficulty_floor", cc.difficulty_floor);
        cc.similarity_threshold = get_or(s, "similarity_threshold", cc.similarity_threshold);
        cc.shingle_size = get_or(s, "shingle_size", cc.shingle_size);
        c.curate = std::move(cs);
    }
    if (auto it = j.find("distill"); it != j.end()) {
        const auto& s = *it;
        DistillSection ds;
        ds.input = path_at(s, "input", base, "distill");
        ds.teacher = require_key(s, "teacher", "distill").get<std::string>();
        ds.records = path_at(s, "records", base, "distill");
        ds.splits = path_at(s, "splits", base, "distill");
        if (auto r = s.find("ratios"); r != s.end()) {
            ds.ratios.proxy_sft = get_or(*r, "proxy_sft", ds.ratios.proxy_sft);
            ds.ratios.proxy_rl = get_or(*r, "proxy_rl", ds.ratios.proxy_rl);
            ds.ratios.grm_sft = get_or(*r, "grm_sft", ds.ratios.grm_sft);
        }
        c.distill = std::move(ds);
    }
    if (auto it = j.find("train"); it != j.end()) {
        const auto& s = *it;
        TrainSection ts;
        const auto mode = get_or<std::string>(s, "mode", "toy");
        if (mode == "toy") {
            ts.mode = TrainMode::toy;
        } else if (mode == "export") {
            ts.mode = TrainMode::export_advantages;
        } else {
            throw ConfigError("train: mode must be 'toy' or 'export'");
        }
        ts.policy = get_or<std::string>(s, "policy", "");
        ts.samples = path_at(s, "samples", base, "train");
        ts.metrics = path_at(s, "metrics", base, "train");
        ts.export_dir = optional_path(s, "export_dir", base);
        ts.checkpoint = optional_path(s, "checkpoint", base);
        ts.resume = get_or(s, "resume", false);
        auto& tc = ts.train;
        tc.group_size = get_or(s, "group_size", tc.group_size);
        tc.steps = get_or(s, "steps", tc.steps);
        tc.batch_size = get_or(s, "batch_size", tc.batch_size);
        tc.grpo.learning_rate = get_or(s, "learning_rate", tc.grpo.learning_rate);
        tc.grpo.clip_ratio = get_or(s, "clip_ratio", tc.grpo.clip_ratio);
        tc.grpo.inner_epochs = get_or(s, "inner_epochs", tc.grpo.inner_epochs);
        tc.grpo.kl_coef = get_or(s, "kl_coef", tc.grpo.kl_coef);
        if (auto t = s.find("toy"); t != s.end()) {
            ts.toy.rubric_templates = get_or(*t, "rubric_templates", ts.toy.rubric_templates);
            ts.toy.temperature = get_or(*t, "temperature", ts.toy.temperature);
            ts.toy.policy_out = optional_path(*t, "policy_out", base);
        }
        c.train = std::move(ts);
    }
    if (auto it = j.find("eval"); it != j.end()) {
        const auto& s = *it;
        EvalSection es;
        es.policies = names_at(s, "policies");
        for (const auto& b : require_key(s, "benchmarks", "eval")) {
            es.benchmarks.push_back(benchmark_from_json(b, base, "eval benchmark"));
        }
        es.output = path_at(s, "output", base, "eval");
        es.text = optional_path(s, "text", base);
        es.per_sample = optional_path(s, "per_sample", base);
        c.eval = std::move(es);
    }
    if (auto it = j.find("transfer"); it != j.end()) {
        const auto& s = *it;
        TransferSection xs;
        xs.sources = names_at(s, "sources");
        xs.evaluators = names_at(s, "evaluators");
        xs.benchmark = benchmark_from_json(require_key(s, "benchmark", "transfer"), base, "transfer benchmark");
        xs.output = path_at(s, "output", base, "transfer");
        xs.text = optional_path(s, "text", base);
        c.transfer = std::move(xs);
    }
    return c;
}

} // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
    try {
        return parse(j, base_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

RunConfig RunConfig::load(const fs::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, fs::absolute(path).parent_path());
}

const ModelEndpoint& RunConfig::endpoint(const std::string& name) const {
    auto it = endpoints.find(name);
    if (it == endpoints.end()) {
        throw ConfigError("unknown endpoint '" + name + "'");
    }
    return it->second;
}

void RunConfig::prepare_endpoints(const std::vector<std::string>& names) {
    for (const auto& name : names) {
        endpoint(name);
    }
    for (const auto& name : names) {
        auto& e = endpoints.at(name);
        e.validate();
        e.load_fixture();
    }
}

PromptTemplates RunConfig::templates() const {
    auto t = load_templates(template_paths);
    t.validate();
    return t;
}

FeedbackConfig RunConfig::feedback() const {
    try {
        return FeedbackConfig::preset(reward);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

} // namespace rubricrl

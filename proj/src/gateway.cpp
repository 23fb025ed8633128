#include "rubricrl/gateway.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <future>
#include <thread>

using json = nlohmann::json;

namespace rubricrl {

ModelEndpoint ModelEndpoint::scripted(std::string name, ScriptedFixture fixture) {
    ModelEndpoint e;
    e.name = std::move(name);
    e.kind = EndpointKind::scripted;
    e.temperature = 0.0;
    e.fixture = std::make_shared<const ScriptedFixture>(std::move(fixture));
    return e;
}

ModelEndpoint ModelEndpoint::remote(std::string name, std::string base_url, std::string model_id) {
    ModelEndpoint e;
    e.name = std::move(name);
    e.kind = EndpointKind::remote;
    e.base_url = std::move(base_url);
    e.model_id = std::move(model_id);
    return e;
}

void ModelEndpoint::validate() const {
    const std::string where = "endpoint '" + name + "': ";
    if (name.empty()) {
        throw ConfigError("endpoint without a name");
    }
    if (temperature < 0.0) {
        throw ConfigError(where + "temperature must be >= 0");
    }
    if (max_tokens <= 0 || max_in_flight <= 0) {
        throw ConfigError(where + "max_tokens and max_in_flight must be positive");
    }
    if (max_retries < 0 || max_retries > 20) {
        throw ConfigError(where + "max_retries must be in [0, 20]");
    }
    if (timeout.count() <= 0) {
        throw ConfigError(where + "timeout must be positive");
    }
    if (backoff_initial.count() < 0 || backoff_max < backoff_initial || backoff_jitter.count() < 0) {
        throw ConfigError(where + "inconsistent backoff settings");
    }
    if (kind == EndpointKind::remote) {
        if (base_url.empty() || model_id.empty()) {
            throw ConfigError(where + "remote endpoints need base_url and model_id");
        }
        if (!base_url.starts_with("http://") && !base_url.starts_with("https://")) {
            throw ConfigError(where + "base_url must start with http:// or https://");
        }
        if (!api_key_env.empty() && std::getenv(api_key_env.c_str()) == nullptr) {
            throw ConfigError(where + "environment variable " + api_key_env + " is not set");
        }
    } else if (!fixture && fixture_path.empty()) {
        throw ConfigError(where + "scripted endpoints need a fixture");
    }
}

void ModelEndpoint::load_fixture() {
    if (kind == EndpointKind::scripted && !fixture) {
        fixture = std::make_shared<const ScriptedFixture>(ScriptedFixture::load(fixture_path));
    }
}

std::string ChatRequest::prompt_text() const {
    std::string out;
    for (const auto& m : messages) {
        out += m.content;
        out.push_back('\n');
    }
    return out;
}

json build_request_body(const ModelEndpoint& endpoint, const ChatRequest& request) {
    json messages = json::array();
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        const auto& m = request.messages[i];
        json msg{{"role", m.role == Role::system ? "system" : "user"}};
        const bool last_user = m.role == Role::user && i + 1 == request.messages.size();
        if (last_user && !request.image_refs.empty()) {
            json parts = json::array();
            for (const auto& url : request.image_refs) {
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
            }
            parts.push_back({{"type", "text"}, {"text", m.content}});
            msg["content"] = parts;
        } else {
            msg["content"] = m.content;
        }
        messages.push_back(msg);
    }
    return json{{"model", endpoint.model_id},
                {"messages", messages},
                {"temperature", request.temperature.value_or(endpoint.temperature)},
                {"max_tokens", endpoint.max_tokens}};
}

ChatResponse parse_response_body(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        throw ProtocolError("response body is not JSON", 200, 1);
    }
    const auto& choices = j.value("choices", json::array());
    if (!choices.is_array() || choices.empty() || !choices[0].contains("message")) {
        throw ProtocolError("response has no choices[0].message", 200, 1);
    }
    const auto& message = choices[0]["message"];
    ChatResponse r;
    if (auto it = message.find("content"); it != message.end() && it->is_string()) {
        r.content = it->get<std::string>();
    }
    if (auto it = choices[0].find("finish_reason"); it != choices[0].end() && it->is_string()) {
        r.finish_reason = it->get<std::string>();
    }
    return r;
}

void Gateway::Limiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
}

void Gateway::Limiter::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

Gateway::Gateway(std::shared_ptr<Transport> transport, Sleeper sleeper, std::uint64_t jitter_seed)
    : transport_(std::move(transport)), sleeper_(std::move(sleeper)), jitter_rng_(jitter_seed) {
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

Gateway::Limiter& Gateway::limiter_for(const ModelEndpoint& endpoint) {
    std::lock_guard lock(mu_);
    auto& slot = limiters_[endpoint.name];
    if (!slot) {
        slot = std::make_unique<Limiter>(endpoint.max_in_flight);
    }
    return *slot;
}

std::chrono::milliseconds Gateway::next_delay(const ModelEndpoint& endpoint, int failures,
                                              std::chrono::milliseconds previous) {
    using std::chrono::milliseconds;
    const int shift = std::min(failures - 1, 30);
    const auto exp = std::min<long long>(endpoint.backoff_max.count(), endpoint.backoff_initial.count() << shift);
    long long jitter = 0;
    if (endpoint.backoff_jitter.count() > 0) {
        std::lock_guard lock(mu_);
        jitter = static_cast<long long>(
            uniform_index(jitter_rng_, static_cast<std::uint64_t>(endpoint.backoff_jitter.count()) + 1));
    }
    return std::max(previous, milliseconds(exp + jitter));
}

ChatResponse Gateway::complete_remote(const ModelEndpoint& endpoint, const ChatRequest& request) {
    HttpRequest http;
    std::string base = endpoint.base_url;
    while (!base.empty() && base.back() == '/') {
        base.pop_back();
    }
    http.url = base + "/chat/completions";
    http.headers.emplace_back("Content-Type", "application/json");
    if (!endpoint.api_key_env.empty()) {
        const char* key = std::getenv(endpoint.api_key_env.c_str());
        if (key == nullptr) {
            throw ConfigError("environment variable " + endpoint.api_key_env + " is not set");
        }
        http.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
    http.body = build_request_body(endpoint, request).dump();
    http.timeout = endpoint.timeout;

    Limiter& limiter = limiter_for(endpoint);
    const int max_attempts = endpoint.max_retries + 1;
    std::chrono::milliseconds delay{0};
    HttpResult last;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        limiter.acquire();
        try {
            ++remote_attempts_;
            last = transport_->post(http);
        } catch (...) {
            limiter.release();
            throw;
        }
        limiter.release();

        if (last.status && *last.status >= 200 && *last.status < 300) {
            ChatResponse r;
            try {
                r = parse_response_body(last.body);
            } catch (const ProtocolError&) {
                throw ProtocolError(endpoint.name + ": malformed response", *last.status, attempt);
            }
            r.attempts = attempt;
            return r;
        }
        const bool retryable = !last.status || *last.status == 408 || *last.status == 429 || *last.status >= 500;
        if (!retryable) {
            throw ProtocolError(endpoint.name, *last.status, attempt);
        }
        if (attempt < max_attempts) {
            delay = next_delay(endpoint, attempt, delay);
            sleeper_(delay);
        }
    }
    if (last.status) {
        throw ProtocolError(endpoint.name, *last.status, max_attempts);
    }
    throw TransportError(endpoint.name + ": " + (last.error.empty() ? "no response" : last.error), max_attempts);
}

ChatResponse Gateway::complete(const ModelEndpoint& endpoint, const ChatRequest& request) {
    if (request.messages.empty()) {
        throw ValidationError("chat request has no messages");
    }
    if (endpoint.kind == EndpointKind::scripted) {
        if (!endpoint.fixture) {
            throw ConfigError("scripted endpoint '" + endpoint.name + "' has no fixture loaded");
        }
        ++scripted_calls_;
        ChatResponse r;
        r.content = endpoint.fixture->lookup(request.key, request.prompt_text());
        r.finish_reason = "stop";
        return r;
    }
    return complete_remote(endpoint, request);
}

std::vector<ChatResponse> Gateway::complete_group(const ModelEndpoint& endpoint, const ChatRequest& request,
                                                  int group_size) {
    if (group_size < 1) {
        throw ValidationError("group size must be >= 1");
    }
    auto draw_request = [&](int draw) {
        ChatRequest r = request;
        r.key.draw = draw;
        return r;
    };
    std::vector<ChatResponse> out;
    out.reserve(static_cast<std::size_t>(group_size));
    if (endpoint.kind == EndpointKind::scripted || group_size == 1) {
        for (int d = 0; d < group_size; ++d) {
            out.push_back(complete(endpoint, draw_request(d)));
        }
        return out;
    }

    if (request.temperature.value_or(endpoint.temperature) <= 0.0) {
        warn("endpoint '" + endpoint.name + "': sampling a group of " + std::to_string(group_size) +
             " at temperature 0 yields identical draws");
    }
    std::vector<std::future<ChatResponse>> pending;
    pending.reserve(static_cast<std::size_t>(group_size));
    for (int d = 0; d < group_size; ++d) {
        pending.push_back(std::async(std::launch::async, [this, &endpoint, r = draw_request(d)] {
            return complete(endpoint, r);
        }));
    }
    std::exception_ptr first_error;
    for (auto& f : pending) {
        try {
            out.push_back(f.get());
        } catch (...) {
            if (!first_error) {
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return out;
}

} // namespace rubricrl

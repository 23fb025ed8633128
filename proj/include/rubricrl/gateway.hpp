#pragma once

#include "rubricrl/fixture.hpp"
#include "rubricrl/rng.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rubricrl {

enum class EndpointKind { scripted, remote };

struct ModelEndpoint {
    std::string name;
    EndpointKind kind = EndpointKind::scripted;

    // remote
    std::string base_url;
    std::string model_id;
    std::string api_key_env;  // name of the variable holding the bearer token

    double temperature = 1.0;
    int max_tokens = 1024;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    int max_in_flight = 4;
    std::chrono::milliseconds backoff_initial{500};
    std::chrono::milliseconds backoff_max{8'000};
    std::chrono::milliseconds backoff_jitter{250};

    // scripted
    std::filesystem::path fixture_path;
    std::shared_ptr<const ScriptedFixture> fixture;

    static ModelEndpoint scripted(std::string name, ScriptedFixture fixture);
    static ModelEndpoint remote(std::string name, std::string base_url, std::string model_id);

    // Throws ConfigError.
    void validate() const;
    // Loads `fixture` from `fixture_path` if not already present.
    void load_fixture();
};

enum class Role { system, user };

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::vector<std::string> image_refs;
    FixtureKey key;
    std::optional<double> temperature;  // overrides the endpoint default

    std::string prompt_text() const;
};

struct ChatResponse {
    std::string content;
    std::string finish_reason;
    int attempts = 1;
};

// Chat-completions wire format.
nlohmann::json build_request_body(const ModelEndpoint& endpoint, const ChatRequest& request);
ChatResponse parse_response_body(std::string_view body);

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::chrono::milliseconds timeout{60'000};
};

struct HttpResult {
    std::optional<int> status;  // nullopt: timeout or connection failure
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_http_transport();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Shared entry point for every completion. Each endpoint (by name) gets its
// own in-flight bound. Safe to use from many threads.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Transport> transport = make_http_transport(), Sleeper sleeper = {},
                     std::uint64_t jitter_seed = 0);

    ChatResponse complete(const ModelEndpoint& endpoint, const ChatRequest& request);

    // Draws 0..group_size-1 of the same request, returned in draw order.
    // Fails as a whole if any draw fails.
    std::vector<ChatResponse> complete_group(const ModelEndpoint& endpoint, const ChatRequest& request,
                                             int group_size);

    std::size_t scripted_calls() const { return scripted_calls_.load(); }
    std::size_t remote_attempts() const { return remote_attempts_.load(); }

private:
    class Limiter {
    public:
        explicit Limiter(int limit) : limit_(limit) {}
        void acquire();
        void release();

    private:
        std::mutex mu_;
        std::condition_variable cv_;
        int limit_;
        int in_flight_ = 0;
    };

    Limiter& limiter_for(const ModelEndpoint& endpoint);
    ChatResponse complete_remote(const ModelEndpoint& endpoint, const ChatRequest& request);
    std::chrono::milliseconds next_delay(const ModelEndpoint& endpoint, int failures,
                                         std::chrono::milliseconds previous);

    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<Limiter>> limiters_;
    Rng jitter_rng_;
    std::atomic<std::size_t> scripted_calls_{0};
    std::atomic<std::size_t> remote_attempts_{0};
};

} // namespace rubricrl

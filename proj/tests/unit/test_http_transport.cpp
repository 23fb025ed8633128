#include <doctest.h>

#include "rubricrl/errors.hpp"
#include "rubricrl/gateway.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace rubricrl;
using namespace std::chrono_literals;

namespace {

// Local chat-completions stand-in: fails the first `failures` requests
// with 500, then echoes the last user message.
class LocalServer {
public:
    explicit LocalServer(int failures) : failures_(failures) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            auth_ = req.get_header_value("Authorization");
            if (hits_++ < failures_) {
                res.status = 500;
                res.set_content("{}", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            const auto& last = body["messages"].back()["content"];
            nlohmann::json reply{
                {"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + last.get<std::string>()}}},
                              {"finish_reason", "stop"}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_.load(); }
    std::string auth() const { return auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_;
    std::atomic<int> hits_{0};
    std::string auth_;
};

ChatRequest hello() {
    ChatRequest r;
    r.messages = {{Role::user, "hello"}};
    r.key = {"s1", "policy", 0};
    return r;
}

} // namespace

TEST_CASE("http transport talks to a chat-completions server") {
    LocalServer server(2);
    ::setenv("RUBRICRL_TEST_KEY", "secret", 1);
    auto e = ModelEndpoint::remote("local", server.base_url(), "m");
    e.api_key_env = "RUBRICRL_TEST_KEY";
    e.backoff_initial = 1ms;
    e.backoff_max = 2ms;
    e.backoff_jitter = 0ms;
    e.timeout = 5000ms;
    e.validate();
    Gateway gw;
    const auto r = gw.complete(e, hello());
    CHECK(r.content == "echo: hello");
    CHECK(r.attempts == 3);
    CHECK(server.hits() == 3);
    CHECK(server.auth() == "Bearer secret");
}

TEST_CASE("unreachable servers raise a transport error") {
    // Grab a free port, then close it again.
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto e = ModelEndpoint::remote("gone", "http://127.0.0.1:" + std::to_string(port) + "/v1", "m");
    e.max_retries = 1;
    e.backoff_initial = 1ms;
    e.backoff_max = 1ms;
    e.backoff_jitter = 0ms;
    e.timeout = 500ms;
    Gateway gw;
    try {
        gw.complete(e, hello());
        FAIL("expected a transport error");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 2);
    }
}

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "streamkv/agent/remote_backend.hpp"
#include "streamkv/error.hpp"

using namespace streamkv;
using namespace streamkv::agent;
using nlohmann::json;

namespace {

// Local completion server whose reply body is chosen per test.
class FakeServer {
public:
    FakeServer() {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_body = json::parse(req.body);
            last_auth = req.get_header_value("Authorization");
            res.status = status;
            res.set_content(reply, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path = "/v1/completions") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    std::string reply = R"({"completion": "ok"})";
    int status = 200;
    json last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("http completion client") {
    FakeServer server;
    HttpClientOptions opts;
    opts.endpoint = server.url();
    opts.api_key = "k-123";
    opts.model = "planner";
    opts.max_tokens = 64;
    opts.timeout_seconds = 5;
    HttpCompletionClient client(opts);

    SUBCASE("request carries model, prompt, max_tokens and the bearer key") {
        CHECK(client.complete("hello") == "ok");
        CHECK(server.last_body["model"] == "planner");
        CHECK(server.last_body["prompt"] == "hello");
        CHECK(server.last_body["max_tokens"] == 64);
        CHECK(server.last_auth == "Bearer k-123");
    }
    SUBCASE("alternative reply fields") {
        server.reply = R"({"text": "from text"})";
        CHECK(client.complete("p") == "from text");
        server.reply = R"({"choices": [{"text": "from choices"}]})";
        CHECK(client.complete("p") == "from choices");
    }
    SUBCASE("bad replies are protocol errors") {
        server.reply = R"({"nothing": 1})";
        CHECK_THROWS_AS(client.complete("p"), ProtocolError);
        server.reply = "not json";
        CHECK_THROWS_AS(client.complete("p"), ProtocolError);
        server.reply = R"({"completion": "x"})";
        server.status = 500;
        CHECK_THROWS_AS(client.complete("p"), ProtocolError);
    }
    SUBCASE("unknown path") {
        opts.endpoint = server.url("/missing");
        CHECK_THROWS_AS(HttpCompletionClient(opts).complete("p"), ProtocolError);
    }
}

TEST_CASE("endpoint validation") {
    HttpClientOptions opts;
    opts.endpoint = "https://example.invalid/v1";
    CHECK_THROWS_AS(HttpCompletionClient{opts}, ConfigError);
    opts.endpoint = "localhost:8080";
    CHECK_THROWS_AS(HttpCompletionClient{opts}, ConfigError);
}

TEST_CASE("client from environment") {
    ::unsetenv("STREAMAGENT_LLM_ENDPOINT");
    CHECK_THROWS_AS(client_from_env(), ConfigError);
    FakeServer server;
    server.reply = R"({"completion": "env ok"})";
    ::setenv("STREAMAGENT_LLM_ENDPOINT", server.url().c_str(), 1);
    ::setenv("STREAMAGENT_LLM_KEY", "env-key", 1);
    auto client = client_from_env();
    CHECK(client->complete("p") == "env ok");
    CHECK(server.last_auth == "Bearer env-key");
    ::unsetenv("STREAMAGENT_LLM_ENDPOINT");
    ::unsetenv("STREAMAGENT_LLM_KEY");
}

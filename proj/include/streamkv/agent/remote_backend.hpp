// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>

#include "streamkv/agent/backend.hpp"

namespace streamkv::agent {

// Plain text completion. Throws ProtocolError on transport or format failure.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpClientOptions {
    std::string endpoint;  // http://host[:port]/path
    std::string api_key;
    std::string model = "default";
    int max_tokens = 512;
    int timeout_seconds = 60;
};

// POSTs {"model", "prompt", "max_tokens"} as JSON and reads the completion
// from "completion", "text" or choices[0].text. Only plain http is supported.
class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(HttpClientOptions options);
    std::string complete(const std::string& prompt) override;

private:
    HttpClientOptions options_;
    std::string base_;
    std::string path_;
};

// Reads STREAMAGENT_LLM_ENDPOINT (required) and STREAMAGENT_LLM_KEY.
// Throws ConfigError when the endpoint is unset.
std::unique_ptr<CompletionClient> client_from_env();

// Trailing yes/no of a trigger completion; nullopt when neither appears.
std::optional<bool> parse_trigger(const std::string& completion);

// Planner that fills the shipped prompt templates and asks a completion
// service. Each request is retried twice before the step fails safe.
class RemoteBackend : public PlannerBackend {
public:
    explicit RemoteBackend(std::unique_ptr<CompletionClient> client, int retries = 2);

    std::string name() const override { return "http"; }

    MemoryState update_memory(const MemoryState& prev, const ClipAnnotations& clip) override;
    std::vector<Plan> generate_plans(const AgentState& state, const ScenarioQuestion& question, const Plan* prior,
                                     std::size_t k) override;
    std::optional<bool> sufficient(const AgentState& state, const ScenarioQuestion& question,
                                   const Plan& best) override;
    std::vector<ToolCall> select_tools(const AgentState& state, const Plan& best,
                                       const ScenarioQuestion& question) override;

private:
    std::optional<std::string> ask(const std::string& prompt);

    std::unique_ptr<CompletionClient> client_;
    int retries_;
};

}  // namespace streamkv::agent

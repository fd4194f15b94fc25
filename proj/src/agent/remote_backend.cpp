// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/remote_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "streamkv/agent/prompts.hpp"
#include "streamkv/agent/tools.hpp"
#include "streamkv/error.hpp"

namespace streamkv::agent {

HttpCompletionClient::HttpCompletionClient(HttpClientOptions options) : options_(std::move(options)) {
    const std::string& url = options_.endpoint;
    const auto scheme = url.find("://");
    if (scheme == std::string::npos || url.substr(0, scheme) != "http") {
        throw ConfigError("completion endpoint must be an http:// URL: " + url);
    }
    const auto slash = url.find('/', scheme + 3);
    base_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
    httplib::Client client(base_);
    client.set_connection_timeout(options_.timeout_seconds);
    client.set_read_timeout(options_.timeout_seconds);
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
    const nlohmann::json body{{"model", options_.model}, {"prompt", prompt}, {"max_tokens", options_.max_tokens}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw ProtocolError("completion request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProtocolError("completion request returned HTTP " + std::to_string(res->status));
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("completion reply is not JSON: ") + e.what());
    }
    if (reply.contains("completion") && reply["completion"].is_string()) return reply["completion"];
    if (reply.contains("text") && reply["text"].is_string()) return reply["text"];
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty() &&
        reply["choices"][0].contains("text") && reply["choices"][0]["text"].is_string()) {
        return reply["choices"][0]["text"];
    }
    throw ProtocolError("completion reply has no text field");
}

std::unique_ptr<CompletionClient> client_from_env() {
    const char* endpoint = std::getenv("STREAMAGENT_LLM_ENDPOINT");
    if (!endpoint || !*endpoint) throw ConfigError("STREAMAGENT_LLM_ENDPOINT is not set");
    HttpClientOptions opts;
    opts.endpoint = endpoint;
    if (const char* key = std::getenv("STREAMAGENT_LLM_KEY")) opts.api_key = key;
    return std::make_unique<HttpCompletionClient>(std::move(opts));
}

std::optional<bool> parse_trigger(const std::string& completion) {
    std::string lower;
    for (unsigned char c : completion) lower += static_cast<char>(std::isalpha(c) ? std::tolower(c) : ' ');
    const std::string padded = " " + lower + " ";
    const auto y = padded.rfind(" yes ");
    const auto n = padded.rfind(" no ");
    if (y == std::string::npos && n == std::string::npos) return std::nullopt;
    if (n == std::string::npos) return true;
    if (y == std::string::npos) return false;
    return y > n;
}

RemoteBackend::RemoteBackend(std::unique_ptr<CompletionClient> client, int retries)
    : client_(std::move(client)), retries_(retries) {
    if (!client_) throw ConfigError("remote backend needs a completion client");
}

std::optional<std::string> RemoteBackend::ask(const std::string& prompt) {
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        try {
            return client_->complete(prompt);
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    warn("completion failed after " + std::to_string(retries_ + 1) + " attempts: " + last_error);
    return std::nullopt;
}

MemoryState RemoteBackend::update_memory(const MemoryState& prev, const ClipAnnotations& clip) {
    MemoryState next = compact_memory(prev, clip);
    PromptSlots slots;
    slots.memory = prev.summary + "\nCurrent clip (t=" + std::to_string(clip.t) + "): " + render_events(clip.events);
    if (auto reply = ask(fill_prompt(prompt_template(PromptKind::kIncrementalMemory), slots))) {
        next.summary = *reply;
        next.token_count = count_tokens(next.summary);
    } else {
        warn("memory caption unavailable; kept the compacted summary");
    }
    return next;
}

std::vector<Plan> RemoteBackend::generate_plans(const AgentState& state, const ScenarioQuestion& question,
                                                const Plan* prior, std::size_t k) {
    std::vector<Plan> plans;
    const std::size_t total = std::max<std::size_t>(k, std::size(kAllModes));
    for (std::size_t i = 0; i < total; ++i) {
        const PlanMode mode = kAllModes[i % std::size(kAllModes)];
        PromptSlots slots;
        slots.question = question.text;
        slots.memory = state.memory.summary;
        if (!state.observation_summary.empty()) slots.memory += "\nTool results: " + state.observation_summary;
        std::string prompt = fill_prompt(prompt_template(PromptKind::kFuturePlan), slots);
        prompt += "\nPlanning mode: " + std::string(to_string(mode));
        if (prior) prompt += "\nPrevious best plan:\n" + render_plan(*prior);
        auto body = ask(prompt);
        if (!body) throw PlanningError(std::string("no ") + to_string(mode) + " plan");
        Plan p;
        p.mode = mode;
        p.text = *body;
        slots.plan_list = "Plan 1 (" + std::string(to_string(mode)) + "):\n" + p.text;
        auto evaluation = ask(fill_prompt(prompt_template(PromptKind::kHeuristicEvaluation), slots));
        if (!evaluation) throw PlanningError(std::string("no evaluation of the ") + to_string(mode) + " plan");
        const Evaluation ev = parse_evaluation(*evaluation);
        p.g = ev.g;
        p.u = ev.u;
        plans.push_back(std::move(p));
    }
    return plans;
}

std::optional<bool> RemoteBackend::sufficient(const AgentState& state, const ScenarioQuestion& question,
                                              const Plan& best) {
    PromptSlots slots;
    slots.question = question.text;
    slots.memory = state.memory.summary;
    slots.plan = render_plan(best);
    auto reply = ask(fill_prompt(prompt_template(PromptKind::kTrigger), slots));
    if (!reply) return std::nullopt;
    auto verdict = parse_trigger(*reply);
    if (!verdict) warn("trigger reply has no yes/no verdict");
    return verdict;
}

std::vector<ToolCall> RemoteBackend::select_tools(const AgentState& state, const Plan& best,
                                                  const ScenarioQuestion& question) {
    PromptSlots slots;
    slots.question = question.text;
    slots.memory = state.memory.summary;
    slots.plan = render_plan(best);
    auto reply = ask(fill_prompt(prompt_template(PromptKind::kActionPlan), slots));
    if (!reply) return {NoTool{}};
    std::vector<std::string> warnings;
    ToolCall call = parse_tool_reply(*reply, warnings);
    for (auto& w : warnings) warn(std::move(w));
    return {call};
}

}  // namespace streamkv::agent

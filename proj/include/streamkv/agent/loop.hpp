// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The per-timestep decision loop: perceive the clip (plus last step's tool
// results), update memory, plan, decide, and either respond or pick tools
// for the next clip.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamkv/agent/backend.hpp"
#include "streamkv/agent/memory.hpp"
#include "streamkv/agent/plan.hpp"
#include "streamkv/agent/tools.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv::agent {

// kNoPlan is the baseline: no planning or tools, and it responds as soon as
// any event of an answer kind has been seen.
enum class Strategy { kPlanned, kNoPlan };

const char* to_string(Strategy strategy);

struct LoopConfig {
    double lambda = 1.0;
    std::size_t k = 3;
    Strategy strategy = Strategy::kPlanned;
};

struct Response {
    std::string answer;
    std::int64_t t = 0;
    bool forced = false;

    bool operator==(const Response&) const = default;
};

struct StepRecord {
    std::int64_t t = 0;
    ClipAnnotations annotations;
    MemoryState memory;
    std::vector<Plan> plans;
    std::optional<Plan> best;
    std::string decision;  // "wait" or "respond"
    std::vector<ToolCall> tools;
    std::vector<ToolResult> tool_results;  // results consumed at this step
    std::vector<std::string> warnings;
};

struct Transcript {
    std::string scenario;
    Strategy strategy = Strategy::kPlanned;
    std::string backend;
    double lambda = 1.0;
    std::vector<StepRecord> steps;
    std::optional<Response> response;

    // "answer=<answer> at t=<t>"
    std::string final_line() const;
};

// Runs the stream until the single response. Scenario violations raise
// IngestionError before any step; backend failures at a step resolve to Wait
// and No Tool. A response is always produced by the last clip.
Transcript run_stream(const Scenario& scenario, PlannerBackend& backend, const LoopConfig& config);

nlohmann::json to_json(const Transcript& transcript);
// Human-readable step log ending with final_line().
std::string render_transcript(const Transcript& transcript);

// Recomputes every m_t from the stored m_{t-1} and clip annotations with the
// deterministic compaction; returns the first timestamp that differs.
std::optional<std::int64_t> first_markov_mismatch(const Transcript& transcript);

}  // namespace streamkv::agent

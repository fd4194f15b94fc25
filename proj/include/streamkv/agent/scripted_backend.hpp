// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "streamkv/agent/backend.hpp"

namespace streamkv::agent {

// Deterministic planner driven by the scenario's declared candidate futures.
class ScriptedBackend : public PlannerBackend {
public:
    std::string name() const override { return "scripted"; }

    MemoryState update_memory(const MemoryState& prev, const ClipAnnotations& clip) override;

    // One plan per non-absent future, ordered by mode; for k above that count
    // the futures are repeated round-robin.
    std::vector<Plan> generate_plans(const AgentState& state, const ScenarioQuestion& question, const Plan* prior,
                                     std::size_t k) override;

    // Every required evidence kind has been observed.
    std::optional<bool> sufficient(const AgentState& state, const ScenarioQuestion& question,
                                   const Plan& best) override;

    std::vector<ToolCall> select_tools(const AgentState& state, const Plan& best,
                                       const ScenarioQuestion& question) override;
};

}  // namespace streamkv::agent

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "streamkv/agent/memory.hpp"
#include "streamkv/agent/plan.hpp"
#include "streamkv/agent/types.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv::agent {

// The planner the decision loop consults at every step. Implementations may
// throw PlanningError from generate_plans; the loop treats that as Wait.
class PlannerBackend {
public:
    virtual ~PlannerBackend() = default;

    virtual std::string name() const = 0;

    virtual MemoryState update_memory(const MemoryState& prev, const ClipAnnotations& clip) = 0;

    // At least one plan per available mode; prior is the previous step's best
    // plan, if any.
    virtual std::vector<Plan> generate_plans(const AgentState& state, const ScenarioQuestion& question,
                                             const Plan* prior, std::size_t k) = 0;

    // true: respond now; false: keep watching; nullopt: reply not understood.
    virtual std::optional<bool> sufficient(const AgentState& state, const ScenarioQuestion& question,
                                           const Plan& best) = 0;

    virtual std::vector<ToolCall> select_tools(const AgentState& state, const Plan& best,
                                               const ScenarioQuestion& question) = 0;

    // Warnings raised since the last call.
    std::vector<std::string> take_warnings() {
        std::vector<std::string> out;
        out.swap(warnings_);
        return out;
    }

protected:
    void warn(std::string message) { warnings_.push_back(std::move(message)); }

private:
    std::vector<std::string> warnings_;
};

}  // namespace streamkv::agent

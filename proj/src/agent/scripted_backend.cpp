// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/scripted_backend.hpp"

#include <algorithm>
#include <iterator>

#include "streamkv/agent/tools.hpp"
#include "streamkv/error.hpp"

namespace streamkv::agent {

MemoryState ScriptedBackend::update_memory(const MemoryState& prev, const ClipAnnotations& clip) {
    return compact_memory(prev, clip);
}

std::vector<Plan> ScriptedBackend::generate_plans(const AgentState& state, const ScenarioQuestion& question,
                                                  const Plan* /*prior*/, std::size_t k) {
    // Slots rotate through the modes; a mode without a usable future leaves
    // its slots empty rather than borrowing another mode's.
    std::vector<std::vector<const CandidateFuture*>> by_mode(std::size(kAllModes));
    std::size_t deepest = 0;
    for (std::size_t m = 0; m < by_mode.size(); ++m) {
        for (const CandidateFuture& f : question.futures) {
            if (f.mode == kAllModes[m] && !f.absent) by_mode[m].push_back(&f);
        }
        deepest = std::max(deepest, by_mode[m].size());
    }
    if (deepest == 0) throw PlanningError("scenario declares no available candidate future");
    const std::size_t slots = std::max(k, by_mode.size() * deepest);
    std::vector<Plan> plans;
    for (std::size_t i = 0; i < slots; ++i) {
        const auto& pool = by_mode[i % by_mode.size()];
        if (pool.empty()) continue;
        const CandidateFuture& f = *pool[(i / by_mode.size()) % pool.size()];
        Plan p;
        p.mode = f.mode;
        p.g = f.g;
        p.u = f.u;
        p.watch_targets = f.watch_targets;
        for (const TrajectoryItem& item : f.trajectory) {
            if (item.t >= state.t) p.trajectory.push_back(item);
        }
        plans.push_back(std::move(p));
    }
    return plans;
}

std::optional<bool> ScriptedBackend::sufficient(const AgentState& state, const ScenarioQuestion& question,
                                                const Plan& /*best*/) {
    return std::all_of(question.required_evidence_events.begin(), question.required_evidence_events.end(),
                       [&](const std::string& kind) { return state.memory.observed(kind); });
}

std::vector<ToolCall> ScriptedBackend::select_tools(const AgentState& /*state*/, const Plan& best,
                                                    const ScenarioQuestion& /*question*/) {
    return tools_for_plan(best);
}

}  // namespace streamkv::agent

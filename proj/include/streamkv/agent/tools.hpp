// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "streamkv/agent/memory.hpp"
#include "streamkv/agent/plan.hpp"
#include "streamkv/agent/types.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv::agent {

// Region target -> Zoom In, count target -> Object Traction, caption target
// -> Detailed Caption. A plan without targets yields a single No Tool.
std::vector<ToolCall> tools_for_plan(const Plan& plan);

// Parses an action reply such as {'Action': {'tool_name': 'Zoom In', 'bbox':
// [..]}}. Single quotes and the known tool-name spellings are accepted. Any
// failure, including an invalid bbox, yields No Tool and appends a warning.
ToolCall parse_tool_reply(const std::string& reply, std::vector<std::string>& warnings);

struct ToolResult {
    ToolCall call;
    std::vector<ObservedEvent> events;

    bool operator==(const ToolResult&) const = default;
};

// Executes calls against the scripted clip: region tools reveal events gated
// by that tool whose region centre lies inside the call's bbox; Object
// Traction reveals its gated events and reports the tracked object count.
std::vector<ToolResult> run_scripted_tools(const std::vector<ToolCall>& calls, const ScenarioClip& clip,
                                           std::int64_t t);

// S_{t+1} from the memory and the tool results. results[i] must answer
// issued[i]; otherwise ProtocolError.
AgentState apply_tool_results(const AgentState& state, const std::vector<ToolCall>& issued,
                              const std::vector<ToolResult>& results);

}  // namespace streamkv::agent

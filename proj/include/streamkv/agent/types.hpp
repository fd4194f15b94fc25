// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace streamkv::agent {

enum class PlanMode { kReactive, kProactive, kSpeculative };

inline constexpr PlanMode kAllModes[] = {PlanMode::kReactive, PlanMode::kProactive, PlanMode::kSpeculative};

const char* to_string(PlanMode mode);
// Accepts "reactive", "proactive", "speculative" (any case). Throws UsageError.
PlanMode parse_mode(const std::string& text);
// Lower rank wins ties: Reactive, then Proactive, then Speculative.
int mode_priority(PlanMode mode);

// Normalised box, 0 <= min < max <= 1 on both axes.
struct BBox {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 1.0;
    double ymax = 1.0;

    bool valid() const;
    // Empty string when valid, else the violated constraint.
    std::string violation() const;
    bool contains_center_of(const BBox& other) const;

    bool operator==(const BBox&) const = default;
};

struct NamedBox {
    std::string name;
    BBox box;

    bool operator==(const NamedBox&) const = default;
};

struct NoTool {
    bool operator==(const NoTool&) const = default;
};
struct ZoomIn {
    BBox bbox;
    bool operator==(const ZoomIn&) const = default;
};
struct ObjectTraction {
    std::vector<NamedBox> objects;
    bool operator==(const ObjectTraction&) const = default;
};
struct DetailedCaption {
    BBox bbox;
    bool operator==(const DetailedCaption&) const = default;
};

using ToolCall = std::variant<NoTool, ZoomIn, ObjectTraction, DetailedCaption>;

const char* tool_name(const ToolCall& call);
// Throws UsageError when any bbox of the call is invalid.
void validate(const ToolCall& call);
std::string describe(const ToolCall& call);

// An event the agent has perceived, from the clip itself or through a tool.
struct ObservedEvent {
    std::int64_t t = 0;
    std::string kind;
    std::string payload;
    std::string value;
    std::string source = "clip";

    bool operator==(const ObservedEvent&) const = default;
};

}  // namespace streamkv::agent

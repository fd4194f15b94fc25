// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "streamkv/error.hpp"

namespace streamkv::agent {

const char* to_string(PlanMode mode) {
    switch (mode) {
        case PlanMode::kReactive:
            return "reactive";
        case PlanMode::kProactive:
            return "proactive";
        case PlanMode::kSpeculative:
            return "speculative";
    }
    return "unknown";
}

PlanMode parse_mode(const std::string& text) {
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (PlanMode m : kAllModes) {
        if (lower == to_string(m)) return m;
    }
    throw UsageError("unknown plan mode '" + text + "' (reactive, proactive, speculative)");
}

int mode_priority(PlanMode mode) { return static_cast<int>(mode); }

std::string BBox::violation() const {
    for (double v : {xmin, ymin, xmax, ymax}) {
        if (!(v >= 0.0 && v <= 1.0)) return "bbox coordinates must lie in [0, 1]";
    }
    if (!(xmin < xmax)) return "bbox xmin must be < xmax";
    if (!(ymin < ymax)) return "bbox ymin must be < ymax";
    return {};
}

bool BBox::valid() const { return violation().empty(); }

bool BBox::contains_center_of(const BBox& other) const {
    const double cx = 0.5 * (other.xmin + other.xmax);
    const double cy = 0.5 * (other.ymin + other.ymax);
    return cx >= xmin && cx <= xmax && cy >= ymin && cy <= ymax;
}

const char* tool_name(const ToolCall& call) {
    struct Visitor {
        const char* operator()(const NoTool&) const { return "No Tool"; }
        const char* operator()(const ZoomIn&) const { return "Zoom In"; }
        const char* operator()(const ObjectTraction&) const { return "Object Traction"; }
        const char* operator()(const DetailedCaption&) const { return "Detailed Caption"; }
    };
    return std::visit(Visitor{}, call);
}

namespace {

void check_box(const BBox& b, const std::string& what) {
    if (const std::string why = b.violation(); !why.empty()) throw UsageError(what + ": " + why);
}

std::string box_text(const BBox& b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%g, %g, %g, %g]", b.xmin, b.ymin, b.xmax, b.ymax);
    return buf;
}

}  // namespace

void validate(const ToolCall& call) {
    if (const auto* z = std::get_if<ZoomIn>(&call)) check_box(z->bbox, "Zoom In");
    if (const auto* c = std::get_if<DetailedCaption>(&call)) check_box(c->bbox, "Detailed Caption");
    if (const auto* o = std::get_if<ObjectTraction>(&call)) {
        for (const NamedBox& nb : o->objects) check_box(nb.box, "Object Traction '" + nb.name + "'");
    }
}

std::string describe(const ToolCall& call) {
    std::string out = tool_name(call);
    if (const auto* z = std::get_if<ZoomIn>(&call)) out += " " + box_text(z->bbox);
    if (const auto* c = std::get_if<DetailedCaption>(&call)) out += " " + box_text(c->bbox);
    if (const auto* o = std::get_if<ObjectTraction>(&call)) {
        for (const NamedBox& nb : o->objects) out += " " + nb.name + "=" + box_text(nb.box);
    }
    return out;
}

}  // namespace streamkv::agent

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/tools.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "streamkv/error.hpp"

namespace streamkv::agent {

std::vector<ToolCall> tools_for_plan(const Plan& plan) {
    std::vector<ToolCall> calls;
    for (const WatchTarget& w : plan.watch_targets) {
        switch (w.kind) {
            case WatchTarget::Kind::kRegion:
                calls.emplace_back(ZoomIn{w.bbox});
                break;
            case WatchTarget::Kind::kCount:
                calls.emplace_back(ObjectTraction{w.objects});
                break;
            case WatchTarget::Kind::kCaption:
                calls.emplace_back(DetailedCaption{w.bbox});
                break;
        }
    }
    if (calls.empty()) calls.emplace_back(NoTool{});
    return calls;
}

namespace {

std::string normalise_name(const std::string& name) {
    std::string out;
    for (unsigned char c : name) {
        if (std::isalpha(c)) out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::optional<BBox> parse_box(const std::string& numbers) {
    static const std::regex num(R"([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)");
    std::vector<double> v;
    for (auto it = std::sregex_iterator(numbers.begin(), numbers.end(), num); it != std::sregex_iterator(); ++it) {
        v.push_back(std::stod(it->str()));
    }
    if (v.size() != 4) return std::nullopt;
    return BBox{v[0], v[1], v[2], v[3]};
}

}  // namespace

ToolCall parse_tool_reply(const std::string& reply, std::vector<std::string>& warnings) {
    static const std::regex name_re(R"(['"]?tool_name['"]?\s*:\s*['"]([^'"]+)['"])");
    static const std::regex bbox_re(R"(['"]?bbox['"]?\s*:\s*\[([^\]]*)\])");
    static const std::regex object_re(R"(['"]([^'"]+?):?['"]\s*:?\s*\[([^\]]*)\])");
    std::smatch m;
    if (!std::regex_search(reply, m, name_re)) {
        warnings.push_back("tool reply has no tool_name; using No Tool");
        return NoTool{};
    }
    const std::string name = normalise_name(m[1].str());
    ToolCall call;
    if (name == "notool") {
        return NoTool{};
    } else if (name == "zoomin" || name == "detailedcaption") {
        BBox box;  // whole frame unless a bbox is given
        std::smatch b;
        if (std::regex_search(reply, b, bbox_re)) {
            auto parsed = parse_box(b[1].str());
            if (!parsed) {
                warnings.push_back("tool reply bbox is not four numbers; using No Tool");
                return NoTool{};
            }
            box = *parsed;
        }
        if (name == "zoomin") {
            call = ZoomIn{box};
        } else {
            call = DetailedCaption{box};
        }
    } else if (name == "objecttraction" || name == "objecttracing" || name == "objecttractuib") {
        ObjectTraction ot;
        for (auto it = std::sregex_iterator(reply.begin(), reply.end(), object_re); it != std::sregex_iterator(); ++it) {
            const std::string label = (*it)[1].str();
            if (normalise_name(label) == "bbox") continue;
            auto parsed = parse_box((*it)[2].str());
            if (!parsed) {
                warnings.push_back("object '" + label + "' has a malformed bbox; using No Tool");
                return NoTool{};
            }
            ot.objects.push_back({label, *parsed});
        }
        call = std::move(ot);
    } else {
        warnings.push_back("unknown tool '" + m[1].str() + "'; using No Tool");
        return NoTool{};
    }
    try {
        validate(call);
    } catch (const UsageError& e) {
        warnings.push_back(std::string(e.what()) + "; using No Tool");
        return NoTool{};
    }
    return call;
}

std::vector<ToolResult> run_scripted_tools(const std::vector<ToolCall>& calls, const ScenarioClip& clip,
                                           std::int64_t t) {
    std::vector<ToolResult> results;
    for (const ToolCall& call : calls) {
        ToolResult r{call, {}};
        auto reveal = [&](const char* gate, const std::function<bool(const ScenarioEvent&)>& hit) {
            for (const ScenarioEvent& e : clip.events) {
                if (e.gated_by_tool && *e.gated_by_tool == gate && hit(e)) {
                    r.events.push_back({t, e.kind, e.payload, e.value, gate});
                }
            }
        };
        if (const auto* z = std::get_if<ZoomIn>(&call)) {
            reveal("zoom_in", [&](const ScenarioEvent& e) { return e.region && z->bbox.contains_center_of(*e.region); });
        } else if (const auto* c = std::get_if<DetailedCaption>(&call)) {
            reveal("detailed_caption",
                   [&](const ScenarioEvent& e) { return e.region && c->bbox.contains_center_of(*e.region); });
        } else if (const auto* o = std::get_if<ObjectTraction>(&call)) {
            reveal("object_traction", [&](const ScenarioEvent& e) {
                if (!e.region) return true;
                return std::any_of(o->objects.begin(), o->objects.end(),
                                   [&](const NamedBox& nb) { return nb.box.contains_center_of(*e.region); });
            });
            std::string names;
            for (const NamedBox& nb : o->objects) names += (names.empty() ? "" : ", ") + nb.name;
            r.events.push_back({t, "object_count", "tracked " + names, std::to_string(o->objects.size()),
                                "object_traction"});
        }
        results.push_back(std::move(r));
    }
    return results;
}

AgentState apply_tool_results(const AgentState& state, const std::vector<ToolCall>& issued,
                              const std::vector<ToolResult>& results) {
    if (issued.size() != results.size()) {
        throw ProtocolError("tool results: " + std::to_string(results.size()) + " results for " +
                            std::to_string(issued.size()) + " calls");
    }
    AgentState next;
    next.memory = state.memory;
    next.t = state.t + 1;
    for (std::size_t i = 0; i < issued.size(); ++i) {
        if (!(results[i].call == issued[i])) {
            throw ProtocolError("tool results: result " + std::to_string(i) + " answers " +
                                describe(results[i].call) + " but " + describe(issued[i]) + " was issued");
        }
        for (const ObservedEvent& e : results[i].events) next.observation.push_back(e);
    }
    next.observation_summary = next.observation.empty() ? std::string() : render_events(next.observation);
    return next;
}

}  // namespace streamkv::agent

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized scenarios and a fault-injecting planner shared by the agent
// tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamkv/agent/backend.hpp"
#include "streamkv/agent/scripted_backend.hpp"
#include "streamkv/error.hpp"
#include "streamkv/scenario.hpp"

namespace fixtures {

using namespace streamkv;
using namespace streamkv::agent;

inline bool bbox_ok(const BBox& b) {
    return 0.0 <= b.xmin && b.xmin < b.xmax && b.xmax <= 1.0 && 0.0 <= b.ymin && b.ymin < b.ymax && b.ymax <= 1.0;
}

inline bool call_ok(const ToolCall& c) {
    if (const auto* z = std::get_if<ZoomIn>(&c)) return bbox_ok(z->bbox);
    if (const auto* d = std::get_if<DetailedCaption>(&c)) return bbox_ok(d->bbox);
    if (const auto* o = std::get_if<ObjectTraction>(&c)) {
        return std::all_of(o->objects.begin(), o->objects.end(), [](const NamedBox& n) { return bbox_ok(n.box); });
    }
    return true;
}

inline BBox random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.45);
    BBox b;
    b.xmin = u(rng);
    b.ymin = u(rng);
    b.xmax = b.xmin + 0.1 + u(rng);
    b.ymax = b.ymin + 0.1 + u(rng);
    return b;
}

inline Scenario random_scenario(std::mt19937_64& rng) {
    static const char* kinds[] = {"alpha", "beta", "gamma", "delta"};
    static const char* gates[] = {"zoom_in", "object_traction", "detailed_caption"};
    Scenario s;
    s.name = "random";
    const std::size_t horizon = 1 + rng() % 10;
    std::vector<std::string> seen;
    for (std::size_t t = 1; t <= horizon; ++t) {
        ScenarioClip clip;
        clip.clip_id = t * 3;
        clip.n_frames = 1 + rng() % 3;
        clip.token_seed = rng();
        const std::size_t n_events = rng() % 3;
        for (std::size_t e = 0; e < n_events; ++e) {
            ScenarioEvent event;
            event.t = static_cast<std::int64_t>(t);
            event.frame = rng() % clip.n_frames;
            event.kind = kinds[rng() % 4];
            event.value = std::to_string(rng() % 5);
            if (rng() % 3 == 0) {
                event.gated_by_tool = gates[rng() % 3];
                event.region = random_box(rng);
            }
            seen.push_back(event.kind);
            clip.events.push_back(std::move(event));
        }
        s.clips.push_back(std::move(clip));
    }
    if (seen.empty()) {
        s.clips[0].events.push_back(ScenarioEvent{1, 0, "alpha", "", "1", std::nullopt, std::nullopt});
        seen.push_back("alpha");
    }
    ScenarioQuestion& q = s.question;
    q.text = "random question";
    q.asked_at = 1 + static_cast<std::int64_t>(rng() % horizon);
    if (rng() % 2) q.required_evidence_events.push_back(seen[rng() % seen.size()]);
    q.answer.kind = rng() % 2 ? AnswerRule::Kind::kCount : AnswerRule::Kind::kLatest;
    q.answer.kinds = {seen[rng() % seen.size()]};
    q.focus_kind = q.answer.kinds[0];
    for (PlanMode mode : kAllModes) {
        CandidateFuture f;
        f.mode = mode;
        f.g = static_cast<double>(rng() % 6);
        f.u = static_cast<double>(rng() % 6);
        f.absent = mode != PlanMode::kReactive && rng() % 4 == 0;
        const auto n_targets = rng() % 3;
        for (std::size_t i = 0; i < n_targets; ++i) {
            WatchTarget w;
            w.kind = static_cast<WatchTarget::Kind>(rng() % 3);
            w.bbox = random_box(rng);
            if (w.kind == WatchTarget::Kind::kCount) w.objects = {{"a", random_box(rng)}, {"b", random_box(rng)}};
            f.watch_targets.push_back(w);
        }
        f.trajectory.push_back({static_cast<std::int64_t>(horizon), "something happens"});
        q.futures.push_back(std::move(f));
    }
    return s;
}

// Wraps the scripted backend and injects every failure mode a planner can
// produce: exceptions, missing verdicts, invalid boxes and empty plan lists.
class FaultyBackend : public PlannerBackend {
public:
    explicit FaultyBackend(std::uint64_t seed) : rng_(seed) {}
    std::string name() const override { return "faulty"; }
    MemoryState update_memory(const MemoryState& prev, const ClipAnnotations& clip) override {
        if (roll()) throw std::runtime_error("memory backend down");
        return inner_.update_memory(prev, clip);
    }
    std::vector<Plan> generate_plans(const AgentState& state, const ScenarioQuestion& q, const Plan* prior,
                                     std::size_t k) override {
        if (roll()) throw PlanningError("planner down");
        if (roll()) return {};
        return inner_.generate_plans(state, q, prior, k);
    }
    std::optional<bool> sufficient(const AgentState& state, const ScenarioQuestion& q, const Plan& best) override {
        if (roll()) throw std::runtime_error("trigger down");
        if (roll()) {
            warn("garbled trigger");
            return std::nullopt;
        }
        return inner_.sufficient(state, q, best);
    }
    std::vector<ToolCall> select_tools(const AgentState& state, const Plan& best, const ScenarioQuestion& q) override {
        if (roll()) throw std::runtime_error("tool policy down");
        if (roll()) return {ZoomIn{BBox{0.8, 0.2, 0.3, 0.9}}, DetailedCaption{BBox{-1, 0, 2, 1}}};
        if (roll()) return {};
        return inner_.select_tools(state, best, q);
    }

private:
    bool roll() { return rng_() % 4 == 0; }
    std::mt19937_64 rng_;
    ScriptedBackend inner_;
};

}  // namespace fixtures

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/memory.hpp"

#include <algorithm>
#include <sstream>

#include "streamkv/error.hpp"

namespace streamkv::agent {

const KindTally* MemoryState::tally(const std::string& kind) const {
    auto it = std::lower_bound(tallies.begin(), tallies.end(), kind,
                               [](const KindTally& k, const std::string& key) { return k.kind < key; });
    return (it != tallies.end() && it->kind == kind) ? &*it : nullptr;
}

std::string render_summary(const std::vector<KindTally>& tallies) {
    if (tallies.empty()) return "nothing observed yet";
    std::string out;
    for (const KindTally& k : tallies) {
        if (!out.empty()) out += "; ";
        out += k.kind + " x" + std::to_string(k.count) + " (last at t=" + std::to_string(k.latest_t);
        if (!k.latest.empty()) out += ": " + k.latest;
        out += ")";
    }
    return out;
}

std::string render_events(const std::vector<ObservedEvent>& events) {
    if (events.empty()) return "no notable events";
    std::string out;
    for (const ObservedEvent& e : events) {
        if (!out.empty()) out += "; ";
        out += e.kind;
        if (!e.payload.empty()) out += ": " + e.payload;
        if (!e.value.empty()) out += " [" + e.value + "]";
        if (e.source != "clip") out += " (via " + e.source + ")";
    }
    return out;
}

std::size_t count_tokens(const std::string& text) {
    std::istringstream in(text);
    std::size_t n = 0;
    for (std::string word; in >> word;) ++n;
    return n;
}

MemoryState compact_memory(const MemoryState& prev, const ClipAnnotations& clip) {
    if (clip.t != prev.t + 1) {
        throw OrderingError("memory update expects t=" + std::to_string(prev.t + 1) + ", got t=" +
                            std::to_string(clip.t));
    }
    MemoryState next;
    next.t = clip.t;
    next.tallies = prev.tallies;
    for (const ObservedEvent& e : clip.events) {
        auto it = std::lower_bound(next.tallies.begin(), next.tallies.end(), e.kind,
                                   [](const KindTally& k, const std::string& key) { return k.kind < key; });
        if (it == next.tallies.end() || it->kind != e.kind) it = next.tallies.insert(it, KindTally{e.kind, 0, {}, 0});
        ++it->count;
        it->latest = e.value.empty() ? e.payload : e.value;
        it->latest_t = clip.t;
    }
    next.summary = render_summary(next.tallies);
    next.token_count = count_tokens(next.summary);
    return next;
}

std::string answer_from_memory(const MemoryState& memory, const AnswerRule& rule) {
    if (rule.kind == AnswerRule::Kind::kCount) {
        std::size_t total = 0;
        for (const std::string& kind : rule.kinds) {
            if (const KindTally* k = memory.tally(kind)) total += k->count;
        }
        return std::to_string(total);
    }
    const KindTally* best = nullptr;
    for (const std::string& kind : rule.kinds) {
        const KindTally* k = memory.tally(kind);
        if (k && (!best || k->latest_t > best->latest_t)) best = k;
    }
    return best ? best->latest : "unknown";
}

ClipAnnotations visible_annotations(const ScenarioClip& clip, std::int64_t t) {
    ClipAnnotations a;
    a.t = t;
    std::vector<const ScenarioEvent*> events;
    for (const ScenarioEvent& e : clip.events) {
        if (!e.gated_by_tool) events.push_back(&e);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ScenarioEvent* x, const ScenarioEvent* y) { return x->frame < y->frame; });
    for (const ScenarioEvent* e : events) a.events.push_back({t, e->kind, e->payload, e->value, "clip"});
    return a;
}

}  // namespace streamkv::agent

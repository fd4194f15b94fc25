// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Markov memory: m_t is computed from m_{t-1} and the current clip's
// annotations only, never from the wider history.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "streamkv/agent/types.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv::agent {

// What the agent perceived of one clip: its visible events plus whatever the
// tools issued at the previous step revealed.
struct ClipAnnotations {
    std::int64_t t = 0;
    std::vector<ObservedEvent> events;

    bool operator==(const ClipAnnotations&) const = default;
};

struct KindTally {
    std::string kind;
    std::size_t count = 0;
    std::string latest;  // value, or payload when the event has no value
    std::int64_t latest_t = 0;

    bool operator==(const KindTally&) const = default;
};

struct MemoryState {
    std::int64_t t = 0;
    std::string summary;
    std::size_t token_count = 0;
    std::vector<KindTally> tallies;  // sorted by kind

    const KindTally* tally(const std::string& kind) const;
    bool observed(const std::string& kind) const { return tally(kind) != nullptr; }

    bool operator==(const MemoryState&) const = default;
};

struct AgentState {
    MemoryState memory;
    std::int64_t t = 0;
    std::vector<ObservedEvent> observation;  // latest tool results
    std::string observation_summary;
};

// Deterministic compaction: folds the clip's events into per-kind tallies and
// re-renders the summary from them. Throws OrderingError unless
// clip.t == prev.t + 1.
MemoryState compact_memory(const MemoryState& prev, const ClipAnnotations& clip);

std::string render_summary(const std::vector<KindTally>& tallies);
std::string render_events(const std::vector<ObservedEvent>& events);
std::size_t count_tokens(const std::string& text);

// The response function: a count over, or the latest value among, the
// rule's event kinds as remembered so far.
std::string answer_from_memory(const MemoryState& memory, const AnswerRule& rule);

// Events of the clip that need no tool, in frame order.
ClipAnnotations visible_annotations(const ScenarioClip& clip, std::int64_t t);

}  // namespace streamkv::agent

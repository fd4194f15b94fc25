// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scenario files (JSON, "schema": 1) describe a synthetic stream: clips with
// annotated events, one question, the candidate futures a scripted planner
// may propose, and the expected outcomes. See scenarios/README.md for the
// field reference.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamkv/agent/types.hpp"
#include "streamkv/model.hpp"

namespace streamkv {

inline constexpr int kScenarioSchema = 1;

struct ScenarioEvent {
    std::int64_t t = 0;
    std::size_t frame = 0;  // frame index inside the clip
    std::string kind;
    std::string payload;
    std::string value;
    std::optional<agent::BBox> region;
    // "zoom_in", "object_traction" or "detailed_caption": the event is only
    // perceived when that tool inspects the clip.
    std::optional<std::string> gated_by_tool;

    bool operator==(const ScenarioEvent&) const = default;
};

struct ScenarioClip {
    std::uint64_t clip_id = 0;
    std::size_t n_frames = 0;
    std::uint64_t token_seed = 0;
    std::vector<ScenarioEvent> events;

    bool operator==(const ScenarioClip&) const = default;
};

struct WatchTarget {
    enum class Kind { kRegion, kCount, kCaption };
    Kind kind = Kind::kRegion;
    agent::BBox bbox;
    std::vector<agent::NamedBox> objects;  // kCount only

    bool operator==(const WatchTarget&) const = default;
};

struct TrajectoryItem {
    std::int64_t t = 0;
    std::string text;

    bool operator==(const TrajectoryItem&) const = default;
};

struct CandidateFuture {
    agent::PlanMode mode = agent::PlanMode::kReactive;
    std::vector<TrajectoryItem> trajectory;
    double g = 0.0;
    double u = 0.0;
    std::vector<WatchTarget> watch_targets;
    bool absent = false;

    bool operator==(const CandidateFuture&) const = default;
};

struct AnswerRule {
    enum class Kind { kCount, kLatest };
    Kind kind = Kind::kCount;
    std::vector<std::string> kinds;

    bool operator==(const AnswerRule&) const = default;
};

struct ScenarioQuestion {
    std::string text;
    std::int64_t asked_at = 1;
    std::vector<std::string> required_evidence_events;
    std::string ground_truth;
    AnswerRule answer;
    // Event kind whose signature seeds the question tokens; defaults to the
    // first answer kind.
    std::string focus_kind;
    std::vector<CandidateFuture> futures;

    bool operator==(const ScenarioQuestion&) const = default;
};

struct ExpectedOutcome {
    std::string answer;
    std::int64_t t = 0;

    bool operator==(const ExpectedOutcome&) const = default;
};

struct ConfigOverrides {
    std::optional<std::string> preset;
    std::optional<std::size_t> n_layers;
    std::optional<std::size_t> d_model;
    std::optional<std::size_t> n_heads;
    std::optional<std::size_t> n_kv_heads;
    std::optional<std::size_t> d_head;
    std::optional<std::size_t> tokens_per_frame;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> chunk_size;
    std::optional<double> event_strength;
    std::optional<double> noise_scale;

    bool operator==(const ConfigOverrides&) const = default;
};

struct Scenario {
    int schema = kScenarioSchema;
    std::string name;
    std::string description;
    ConfigOverrides config;
    std::vector<ScenarioClip> clips;
    ScenarioQuestion question;
    std::optional<ExpectedOutcome> expect_planned;
    std::optional<ExpectedOutcome> expect_baseline;

    std::int64_t horizon() const { return static_cast<std::int64_t>(clips.size()); }
    // Clip at stream timestamp t (1-based).
    const ScenarioClip& clip_at(std::int64_t t) const { return clips.at(static_cast<std::size_t>(t - 1)); }
    std::string focus_kind() const;

    bool operator==(const Scenario&) const = default;
};

// Named model geometries: "desk" (default, tiny), "small", "paper".
struct ModelPreset {
    ModelConfig model;
    std::size_t chunk_size = 16;
};
ModelPreset model_preset(const std::string& name);

struct StreamSettings {
    ModelConfig model;
    std::size_t chunk_size = 16;
    double event_strength = 4.0;
    double noise_scale = 0.25;
};

// Preset, then scenario overrides. The result is validated.
StreamSettings resolve_settings(const Scenario& scenario);

// Throws IngestionError naming the offending field path (and the line for
// JSON syntax errors).
Scenario parse_scenario(const std::string& text);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& scenario);
// Cross-field checks shared by the loaders; throws IngestionError.
void validate_scenario(const Scenario& scenario);

}  // namespace streamkv

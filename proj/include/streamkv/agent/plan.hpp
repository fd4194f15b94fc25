// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "streamkv/agent/types.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv::agent {

struct Plan {
    PlanMode mode = PlanMode::kReactive;
    std::vector<TrajectoryItem> trajectory;
    double g = 0.0;  // current-state quality, [0, 5]
    double u = 0.0;  // future utility, [0, 5]
    double f = 0.0;  // g + lambda * u
    std::vector<WatchTarget> watch_targets;
    std::string text;  // free-form plan body (remote backend)

    bool operator==(const Plan&) const = default;
};

double score_plan(const Plan& plan, double lambda);

struct Evaluation {
    double g = 0.0;
    double u = 0.0;
};

// Reads the first "Current State Analysis (Step 1) Score: [X/5]" and
// "Future Planning (Step 2) Score: [Y/5]" pair. Throws PlanningError when
// either is missing or out of [0, 5].
Evaluation parse_evaluation(const std::string& text);

// Argmax of g + lambda * u; ties go to the higher-priority mode, then to the
// earlier plan. Empty input is a PlanningError.
const Plan& select_plan(const std::vector<Plan>& plans, double lambda);

// Text rendering used in prompts and transcripts.
std::string render_plan(const Plan& plan);

}  // namespace streamkv::agent

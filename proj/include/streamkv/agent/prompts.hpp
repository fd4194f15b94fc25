// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace streamkv::agent {

enum class PromptKind { kIncrementalMemory, kFuturePlan, kHeuristicEvaluation, kTrigger, kActionPlan };

// The template text exactly as shipped in resources/prompts.
const char* prompt_template(PromptKind kind);

struct PromptSlots {
    std::string question;
    std::string memory;
    std::string plan;
    std::string plan_list;
};

// Replaces {question}, {memory}, {plan} and {plan_list}, and turns doubled
// braces into single ones. Other braces are left alone.
std::string fill_prompt(const std::string& tmpl, const PromptSlots& slots);

}  // namespace streamkv::agent

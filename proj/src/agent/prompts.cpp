// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/prompts.hpp"

#include "streamkv/prompt_data.hpp"

namespace streamkv::agent {

const char* prompt_template(PromptKind kind) {
    switch (kind) {
        case PromptKind::kIncrementalMemory:
            return embedded::incremental_memory;
        case PromptKind::kFuturePlan:
            return embedded::future_plan;
        case PromptKind::kHeuristicEvaluation:
            return embedded::heuristic_evaluation;
        case PromptKind::kTrigger:
            return embedded::trigger;
        case PromptKind::kActionPlan:
            return embedded::action_plan;
    }
    return "";
}

std::string fill_prompt(const std::string& tmpl, const PromptSlots& slots) {
    const std::pair<const char*, const std::string*> names[] = {
        {"{question}", &slots.question}, {"{memory}", &slots.memory}, {"{plan_list}", &slots.plan_list},
        {"{plan}", &slots.plan}};
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.compare(i, 2, "{{") == 0 || tmpl.compare(i, 2, "}}") == 0) {
            out += tmpl[i];
            i += 2;
            continue;
        }
        bool replaced = false;
        if (tmpl[i] == '{') {
            for (const auto& [name, value] : names) {
                const std::string key = name;
                if (tmpl.compare(i, key.size(), key) == 0) {
                    out += *value;
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out += tmpl[i++];
    }
    return out;
}

}  // namespace streamkv::agent

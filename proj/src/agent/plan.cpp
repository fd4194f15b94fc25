// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/plan.hpp"

#include <regex>
#include <sstream>

#include "streamkv/error.hpp"

namespace streamkv::agent {

double score_plan(const Plan& plan, double lambda) { return plan.g + lambda * plan.u; }

namespace {

double read_score(const std::string& text, const std::regex& re, const char* what) {
    std::smatch m;
    if (!std::regex_search(text, m, re)) throw PlanningError(std::string("evaluation: no ") + what + " score");
    const double v = std::stod(m[1].str());
    if (v < 0.0 || v > 5.0) throw PlanningError(std::string("evaluation: ") + what + " score outside [0, 5]");
    return v;
}

}  // namespace

Evaluation parse_evaluation(const std::string& text) {
    static const std::regex current(R"(Current\s+State\s+Analysis\s*\(Step\s*1\)\s*Score:\s*\[?\s*([0-9]+(?:\.[0-9]+)?)\s*/\s*5)",
                                    std::regex::icase);
    static const std::regex future(R"(Future\s+Planning\s*\(Step\s*2\)\s*Score:\s*\[?\s*([0-9]+(?:\.[0-9]+)?)\s*/\s*5)",
                                   std::regex::icase);
    return {read_score(text, current, "current-state"), read_score(text, future, "future-planning")};
}

const Plan& select_plan(const std::vector<Plan>& plans, double lambda) {
    if (plans.empty()) throw PlanningError("no plans to select from");
    const Plan* best = &plans.front();
    double best_f = score_plan(*best, lambda);
    for (const Plan& p : plans) {
        const double f = score_plan(p, lambda);
        if (f > best_f || (f == best_f && mode_priority(p.mode) < mode_priority(best->mode))) {
            best = &p;
            best_f = f;
        }
    }
    return *best;
}

std::string render_plan(const Plan& plan) {
    std::ostringstream out;
    out << to_string(plan.mode) << " plan (G=" << plan.g << ", U=" << plan.u << ")";
    for (const TrajectoryItem& item : plan.trajectory) out << "\n  t=" << item.t << ": " << item.text;
    if (!plan.text.empty()) out << "\n" << plan.text;
    return out.str();
}

}  // namespace streamkv::agent

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/agent/loop.hpp"

#include <algorithm>
#include <sstream>

#include "streamkv/error.hpp"

namespace streamkv::agent {

using nlohmann::json;

const char* to_string(Strategy strategy) { return strategy == Strategy::kPlanned ? "planned" : "no-plan"; }

std::string Transcript::final_line() const {
    if (!response) return "no answer";
    return "answer=" + response->answer + " at t=" + std::to_string(response->t);
}

namespace {

bool any_answer_evidence(const MemoryState& memory, const AnswerRule& rule) {
    return std::any_of(rule.kinds.begin(), rule.kinds.end(), [&](const std::string& k) { return memory.observed(k); });
}

std::vector<ToolCall> checked_tools(std::vector<ToolCall> calls, std::vector<std::string>& warnings) {
    if (calls.empty()) calls.emplace_back(NoTool{});
    for (ToolCall& c : calls) {
        try {
            validate(c);
        } catch (const UsageError& e) {
            warnings.push_back(std::string(e.what()) + "; replaced by No Tool");
            c = NoTool{};
        }
    }
    return calls;
}

}  // namespace

Transcript run_stream(const Scenario& scenario, PlannerBackend& backend, const LoopConfig& config) {
    validate_scenario(scenario);
    Transcript tr;
    tr.scenario = scenario.name;
    tr.strategy = config.strategy;
    tr.backend = backend.name();
    tr.lambda = config.lambda;

    const ScenarioQuestion& question = scenario.question;
    const std::int64_t horizon = scenario.horizon();
    MemoryState memory;
    AgentState state;
    std::vector<ToolCall> pending;
    std::optional<Plan> prior;

    for (std::int64_t t = 1; t <= horizon && !tr.response; ++t) {
        StepRecord rec;
        rec.t = t;
        std::vector<std::string> warnings;
        const ScenarioClip& clip = scenario.clip_at(t);

        // Tools chosen at t-1 inspect clip t.
        rec.tool_results = run_scripted_tools(pending, clip, t);
        state = apply_tool_results(state, pending, rec.tool_results);
        pending.clear();

        ClipAnnotations ann = visible_annotations(clip, t);
        ann.events.insert(ann.events.end(), state.observation.begin(), state.observation.end());
        try {
            memory = backend.update_memory(memory, ann);
        } catch (const std::exception& e) {
            warnings.push_back(std::string("memory update failed: ") + e.what() + "; used compaction");
            memory = compact_memory(memory, ann);
        }
        state.memory = memory;
        rec.annotations = std::move(ann);
        rec.memory = memory;
        rec.decision = "wait";

        const bool last = t == horizon;
        bool respond = false;
        bool forced = false;
        if (t >= question.asked_at) {
            if (config.strategy == Strategy::kNoPlan) {
                respond = any_answer_evidence(memory, question.answer);
            } else {
                try {
                    rec.plans = backend.generate_plans(state, question, prior ? &*prior : nullptr, config.k);
                } catch (const std::exception& e) {
                    warnings.push_back(std::string("planning failed: ") + e.what() + "; waiting");
                    rec.plans.clear();
                }
                for (Plan& p : rec.plans) p.f = score_plan(p, config.lambda);
                if (!rec.plans.empty()) {
                    rec.best = select_plan(rec.plans, config.lambda);
                    prior = rec.best;
                    std::optional<bool> verdict;
                    try {
                        verdict = backend.sufficient(state, question, *rec.best);
                    } catch (const std::exception& e) {
                        warnings.push_back(std::string("trigger failed: ") + e.what());
                    }
                    if (!verdict) warnings.push_back("no usable trigger verdict; waiting");
                    respond = verdict.value_or(false);
                    if (!respond && !last) {
                        try {
                            pending = backend.select_tools(state, *rec.best, question);
                        } catch (const std::exception& e) {
                            warnings.push_back(std::string("tool selection failed: ") + e.what());
                            pending.clear();
                        }
                    }
                }
                if (!respond && !last) {
                    for (auto& w : backend.take_warnings()) warnings.push_back(std::move(w));
                    pending = checked_tools(std::move(pending), warnings);
                    rec.tools = pending;
                }
            }
            if (!respond && last) {
                respond = true;
                forced = true;
            }
        }
        if (respond) {
            rec.decision = "respond";
            tr.response = Response{answer_from_memory(memory, question.answer), t, forced};
        }
        for (auto& w : backend.take_warnings()) warnings.push_back(std::move(w));
        rec.warnings = std::move(warnings);
        tr.steps.push_back(std::move(rec));
    }
    return tr;
}

namespace {

json events_json(const std::vector<ObservedEvent>& events) {
    json out = json::array();
    for (const ObservedEvent& e : events) {
        out.push_back({{"t", e.t}, {"kind", e.kind}, {"payload", e.payload}, {"value", e.value}, {"source", e.source}});
    }
    return out;
}

json memory_json(const MemoryState& m) {
    json tallies = json::array();
    for (const KindTally& k : m.tallies) {
        tallies.push_back({{"kind", k.kind}, {"count", k.count}, {"latest", k.latest}, {"latest_t", k.latest_t}});
    }
    return {{"t", m.t}, {"summary", m.summary}, {"token_count", m.token_count}, {"tallies", tallies}};
}

json plan_json(const Plan& p) {
    json traj = json::array();
    for (const TrajectoryItem& item : p.trajectory) traj.push_back({{"t", item.t}, {"text", item.text}});
    return {{"mode", to_string(p.mode)}, {"g", p.g}, {"u", p.u}, {"f", p.f}, {"trajectory", traj}};
}

}  // namespace

json to_json(const Transcript& tr) {
    json steps = json::array();
    for (const StepRecord& s : tr.steps) {
        json plans = json::array();
        for (const Plan& p : s.plans) plans.push_back(plan_json(p));
        json tools = json::array();
        for (const ToolCall& c : s.tools) tools.push_back(describe(c));
        json results = json::array();
        for (const ToolResult& r : s.tool_results) {
            results.push_back({{"tool", describe(r.call)}, {"events", events_json(r.events)}});
        }
        steps.push_back({{"t", s.t},
                         {"annotations", events_json(s.annotations.events)},
                         {"memory", memory_json(s.memory)},
                         {"plans", plans},
                         {"best", s.best ? json(to_string(s.best->mode)) : json(nullptr)},
                         {"decision", s.decision},
                         {"tools", tools},
                         {"tool_results", results},
                         {"warnings", s.warnings}});
    }
    json out{{"scenario", tr.scenario},
             {"strategy", to_string(tr.strategy)},
             {"backend", tr.backend},
             {"lambda", tr.lambda},
             {"steps", steps},
             {"final", tr.final_line()}};
    out["response"] = tr.response ? json{{"answer", tr.response->answer}, {"t", tr.response->t},
                                         {"forced", tr.response->forced}}
                                  : json(nullptr);
    return out;
}

std::string render_transcript(const Transcript& tr) {
    std::ostringstream out;
    out << "scenario " << tr.scenario << " (" << to_string(tr.strategy) << ", " << tr.backend
        << ", lambda=" << tr.lambda << ")\n";
    for (const StepRecord& s : tr.steps) {
        out << "t=" << s.t << " " << s.decision;
        if (s.best) out << " best=" << to_string(s.best->mode) << " F=" << s.best->f;
        if (!s.tools.empty()) {
            out << " tools=[";
            for (std::size_t i = 0; i < s.tools.size(); ++i) out << (i ? "; " : "") << describe(s.tools[i]);
            out << "]";
        }
        out << " | " << s.memory.summary << "\n";
        for (const std::string& w : s.warnings) out << "  warning: " << w << "\n";
    }
    out << tr.final_line() << "\n";
    return out.str();
}

std::optional<std::int64_t> first_markov_mismatch(const Transcript& tr) {
    MemoryState prev;
    for (const StepRecord& s : tr.steps) {
        if (!(compact_memory(prev, s.annotations) == s.memory)) return s.t;
        prev = s.memory;
    }
    return std::nullopt;
}

}  // namespace streamkv::agent

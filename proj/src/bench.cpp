// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/bench.hpp"

#include <chrono>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include "streamkv/agent/loop.hpp"
#include "streamkv/agent/scripted_backend.hpp"
#include "streamkv/error.hpp"
#include "streamkv/kv_store.hpp"
#include "streamkv/prefill.hpp"
#include "streamkv/recall.hpp"
#include "streamkv/stream_gen.hpp"

namespace streamkv {

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{"scenario",   "chunk_size", "hot_budget",       "alpha",
                                               "t",          "layer",      "selected_frames",  "recalled_entries",
                                               "hot_bytes",  "cold_bytes", "cold_reads",       "decision",
                                               "wall_ms"};
    return cols;
}

namespace {

std::string budget_label(std::uint64_t b) {
    return b == std::numeric_limits<std::uint64_t>::max() ? "unbounded" : std::to_string(b);
}

}  // namespace

std::vector<MetricsRow> run_bench(const Scenario& scenario, const BenchConfig& config) {
    if (config.alphas.empty()) throw UsageError("bench: no alpha values");
    RecallConfig probe{config.alphas.front(), config.max_frames};
    for (double a : config.alphas) {
        probe.alpha = a;
        probe.validate();
    }
    const StreamSettings settings = resolve_settings(scenario);
    const ProjectionWeights weights = init_weights(settings.model);
    const std::vector<Clip> clips = generate_stream(scenario, weights, settings);

    agent::ScriptedBackend backend;
    const agent::Transcript transcript = agent::run_stream(scenario, backend, {config.lambda, 3, agent::Strategy::kPlanned});
    auto decision_at = [&](std::int64_t t) {
        return transcript.response && transcript.response->t == t ? "respond" : "wait";
    };

    std::vector<std::size_t> chunk_sizes = config.chunk_sizes;
    if (chunk_sizes.empty()) chunk_sizes.push_back(settings.chunk_size);
    std::vector<std::uint64_t> budgets = config.hot_budgets;
    if (budgets.empty()) budgets.push_back(std::numeric_limits<std::uint64_t>::max());

    std::vector<MetricsRow> rows;
    for (std::size_t chunk : chunk_sizes) {
        for (std::uint64_t budget : budgets) {
            const auto dir = config.cold_dir / (scenario.name + "_c" + std::to_string(chunk) + "_b" + budget_label(budget));
            std::filesystem::remove_all(dir);
            TieredKvStore store(settings.model, dir);
            PrefillState state = PrefillState::for_config(settings.model);
            for (const Clip& clip : clips) {
                prefill_clip(store, state, clip, chunk, weights);
                store.maybe_offload(TierPolicy{budget});
                const UsageReport usage = store.usage_report();
                const std::int64_t q_pos = store.last_position().value_or(-1) + 1;
                const TokenBlock question = question_tokens(scenario, settings.model, q_pos);
                const QueryDescriptor qd = query_descriptor(question, weights);
                for (double alpha : config.alphas) {
                    const std::size_t reads_before = store.cold_reads();
                    const auto start = std::chrono::steady_clock::now();
                    const RecallResult result = recall(store, qd, RecallConfig{alpha, config.max_frames});
                    answer_attention(result, question, weights);
                    const double ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                    const std::size_t reads = store.cold_reads() - reads_before;
                    for (std::size_t layer = 0; layer < result.layers.size(); ++layer) {
                        MetricsRow row;
                        row.scenario = scenario.name;
                        row.chunk_size = chunk;
                        row.hot_budget = budget;
                        row.alpha = alpha;
                        row.t = clip.timestamp;
                        row.layer = layer;
                        row.selected_frames = result.layers[layer].frame_ids.size();
                        row.recalled_entries = result.layers[layer].kv.size();
                        row.hot_bytes = usage.hot_bytes;
                        row.cold_bytes = usage.cold_bytes;
                        row.cold_reads = reads;
                        row.decision = decision_at(clip.timestamp);
                        row.wall_ms = ms;
                        rows.push_back(std::move(row));
                    }
                }
            }
        }
    }
    return rows;
}

void write_csv_header(std::ostream& out) {
    const auto& cols = metrics_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
}

void write_csv_row(std::ostream& out, const MetricsRow& r) {
    out << r.scenario << "," << r.chunk_size << "," << budget_label(r.hot_budget) << "," << r.alpha << "," << r.t
        << "," << r.layer << "," << r.selected_frames << "," << r.recalled_entries << "," << r.hot_bytes << ","
        << r.cold_bytes << "," << r.cold_reads << "," << r.decision << "," << r.wall_ms << "\n";
}

std::vector<std::string> monotonicity_violations(const std::vector<MetricsRow>& rows) {
    using Key = std::tuple<std::string, std::size_t, std::uint64_t, std::int64_t, std::size_t>;
    std::map<Key, std::map<double, std::size_t>> groups;
    for (const MetricsRow& r : rows) groups[{r.scenario, r.chunk_size, r.hot_budget, r.t, r.layer}][r.alpha] = r.selected_frames;
    std::vector<std::string> out;
    for (const auto& [key, by_alpha] : groups) {
        std::size_t prev = 0;
        double prev_alpha = 0.0;
        bool first = true;
        for (const auto& [alpha, count] : by_alpha) {
            if (!first && count < prev) {
                out.push_back(std::get<0>(key) + " chunk=" + std::to_string(std::get<1>(key)) + " t=" +
                              std::to_string(std::get<3>(key)) + " layer=" + std::to_string(std::get<4>(key)) +
                              ": " + std::to_string(prev) + " frames at alpha=" + std::to_string(prev_alpha) + " but " +
                              std::to_string(count) + " at alpha=" + std::to_string(alpha));
            }
            prev = count;
            prev_alpha = alpha;
            first = false;
        }
    }
    return out;
}

}  // namespace streamkv

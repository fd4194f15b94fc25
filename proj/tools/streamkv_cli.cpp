// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

// streamkv: prefill, recall, simulate, mem-report and bench front end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "streamkv/accounting.hpp"
#include "streamkv/agent/loop.hpp"
#include "streamkv/agent/remote_backend.hpp"
#include "streamkv/agent/scripted_backend.hpp"
#include "streamkv/bench.hpp"
#include "streamkv/error.hpp"
#include "streamkv/kv_store.hpp"
#include "streamkv/prefill.hpp"
#include "streamkv/recall.hpp"
#include "streamkv/reports.hpp"
#include "streamkv/scenario.hpp"
#include "streamkv/stream_gen.hpp"

namespace fs = std::filesystem;
using namespace streamkv;

namespace {

struct StreamOptions {
    std::string scenario;
    std::optional<std::size_t> chunk_size;
    std::optional<std::uint64_t> hot_budget;
    std::optional<std::uint64_t> seed;
    std::string cold_dir = (fs::temp_directory_path() / "streamkv-cold").string();
    std::string out;
};

void add_stream_options(CLI::App* cmd, StreamOptions& o) {
    cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
    cmd->add_option("--chunk-size", o.chunk_size, "Prefill chunk size in tokens (default: scenario preset)")->check(CLI::PositiveNumber);
    cmd->add_option("--hot-budget", o.hot_budget, "Hot-tier budget in bytes (default: unbounded)");
    cmd->add_option("--seed", o.seed, "Weight seed override");
    cmd->add_option("--cold-dir", o.cold_dir, "Directory for offloaded clip files");
    cmd->add_option("--out", o.out, "Write the output to this file instead of stdout");
}

Scenario load(const StreamOptions& o) {
    Scenario s = load_scenario(o.scenario);
    if (o.seed) s.config.seed = *o.seed;
    if (o.chunk_size) s.config.chunk_size = *o.chunk_size;
    return s;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw StorageError("cannot write " + out_path);
    f << text;
    if (!f) throw StorageError("write failed: " + out_path);
}

// Prefills the whole scenario stream, offloading after every clip.
struct BuiltStream {
    StreamSettings settings;
    ProjectionWeights weights;
    std::unique_ptr<TieredKvStore> store;
    std::size_t chunks = 0;
};

BuiltStream build(const Scenario& scenario, const StreamOptions& o) {
    BuiltStream b;
    b.settings = resolve_settings(scenario);
    b.weights = init_weights(b.settings.model);
    const fs::path dir = fs::path(o.cold_dir) / scenario.name;
    fs::remove_all(dir);
    b.store = std::make_unique<TieredKvStore>(b.settings.model, dir);
    PrefillState state = PrefillState::for_config(b.settings.model);
    const TierPolicy policy{o.hot_budget.value_or(std::numeric_limits<std::uint64_t>::max())};
    for (const Clip& clip : generate_stream(scenario, b.weights, b.settings)) {
        b.chunks += prefill_clip(*b.store, state, clip, b.settings.chunk_size, b.weights).chunks;
        b.store->maybe_offload(policy);
    }
    return b;
}

int cmd_prefill(const StreamOptions& o) {
    const Scenario s = load(o);
    const BuiltStream b = build(s, o);
    nlohmann::json j{{"scenario", s.name},
                     {"chunk_size", b.settings.chunk_size},
                     {"chunks", b.chunks},
                     {"clips", b.store->clip_count()},
                     {"usage", usage_json(b.store->usage_report())}};
    emit(o.out, j.dump(2) + "\n");
    return 0;
}

int cmd_recall(const StreamOptions& o, const RecallConfig& rc) {
    rc.validate();
    const Scenario s = load(o);
    const BuiltStream b = build(s, o);
    const TokenBlock question = question_tokens(s, b.settings.model, b.store->last_position().value_or(-1) + 1);
    const QueryDescriptor qd = query_descriptor(question, b.weights);
    const std::size_t reads_before = b.store->cold_reads();
    std::vector<LayerRecall> details;
    const Selection sel = select_layers(*b.store, qd, rc, &details);
    const std::size_t scoring_reads = b.store->cold_reads() - reads_before;
    RecallResult result = recall(*b.store, sel);
    for (std::size_t l = 0; l < details.size(); ++l) result.layers[l].candidate_ids = std::move(details[l].candidate_ids);
    const std::size_t recall_reads = b.store->cold_reads() - reads_before - scoring_reads;
    const auto outputs = answer_attention(result, question, b.weights);
    nlohmann::json j = recall_json(result);
    j["scenario"] = s.name;
    j["alpha"] = rc.alpha;
    j["max_frames"] = rc.max_frames;
    j["focus_kind"] = s.focus_kind();
    j["scoring_cold_reads"] = scoring_reads;
    j["recall_cold_reads"] = recall_reads;
    j["answer_tokens"] = question.size();
    j["answer_layers"] = outputs.size();
    j["usage"] = usage_json(b.store->usage_report());
    emit(o.out, j.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& planner, const std::string& mode,
                 double lambda, std::size_t k, const std::string& out) {
    const Scenario s = load_scenario(scenario_path);
    std::unique_ptr<agent::PlannerBackend> backend;
    if (planner == "scripted") {
        backend = std::make_unique<agent::ScriptedBackend>();
    } else {
        backend = std::make_unique<agent::RemoteBackend>(agent::client_from_env());
    }
    agent::LoopConfig cfg;
    cfg.lambda = lambda;
    cfg.k = k;
    cfg.strategy = mode == "planned" ? agent::Strategy::kPlanned : agent::Strategy::kNoPlan;
    const agent::Transcript tr = agent::run_stream(s, *backend, cfg);
    if (!out.empty()) emit(out, agent::to_json(tr).dump(2) + "\n");
    std::cout << agent::render_transcript(tr);
    return 0;
}

std::vector<double> parse_alphas(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw UsageError("--alphas: '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("--alphas: empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming tiered KV cache and anticipatory agent loop"};
    app.require_subcommand(1);

    StreamOptions prefill_opts;
    auto* prefill = app.add_subcommand("prefill", "Prefill a scenario stream and print tier usage");
    add_stream_options(prefill, prefill_opts);

    StreamOptions recall_opts;
    RecallConfig recall_cfg;
    auto* recall_cmd = app.add_subcommand("recall", "Score, select and recall frames for the scenario question");
    add_stream_options(recall_cmd, recall_opts);
    recall_cmd->add_option("--alpha", recall_cfg.alpha, "Selection margin")->check(CLI::NonNegativeNumber)->capture_default_str();
    recall_cmd->add_option("--max-frames", recall_cfg.max_frames, "Per-layer frame cap")->check(CLI::PositiveNumber)->capture_default_str();

    std::string sim_scenario, planner = "scripted", mode = "planned", sim_out;
    double lambda = 1.0;
    std::size_t k = 3;
    auto* simulate = app.add_subcommand("simulate", "Run the decision loop over a scenario");
    simulate->add_option("--scenario", sim_scenario, "Scenario JSON file")->required();
    simulate->add_option("--planner", planner, "Planner backend")->check(CLI::IsMember({"scripted", "http"}))->capture_default_str();
    simulate->add_option("--mode", mode, "planned or no-plan baseline")->check(CLI::IsMember({"planned", "no-plan"}))->capture_default_str();
    simulate->add_option("--lambda", lambda, "Weight of future utility in plan scores")->check(CLI::NonNegativeNumber)->capture_default_str();
    simulate->add_option("--plans", k, "Plans generated per step")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--out", sim_out, "Write the transcript JSON to this file");

    std::string preset, mem_out;
    accounting::AccountingInput geo;
    geo.chunk_size = 4096;
    auto* mem = app.add_subcommand("mem-report", "Closed-form activation and KV-cache memory");
    mem->add_option("--preset", preset, "Named geometry (qwen7b-1h)");
    mem->add_option("--batch", geo.batch);
    mem->add_option("--seq-len", geo.seq_len);
    mem->add_option("--d-model", geo.d_model);
    mem->add_option("--d-ff", geo.d_ff);
    mem->add_option("--n-heads", geo.n_heads);
    mem->add_option("--n-kv-heads", geo.n_kv_heads);
    mem->add_option("--d-head", geo.d_head);
    mem->add_option("--layers", geo.n_layers);
    mem->add_option("--visual-tokens", geo.visual_tokens);
    mem->add_option("--text-tokens", geo.text_tokens);
    mem->add_option("--chunk-size", geo.chunk_size)->check(CLI::PositiveNumber)->capture_default_str();
    mem->add_option("--out", mem_out, "Write the JSON to this file");

    std::vector<std::string> bench_scenarios;
    std::string alphas = "0,1,3,6", bench_out;
    BenchConfig bench_cfg;
    bench_cfg.cold_dir = fs::temp_directory_path() / "streamkv-bench";
    std::string bench_cold = bench_cfg.cold_dir.string();
    auto* bench = app.add_subcommand("bench", "Sweep alpha, chunk size and hot budget; write metrics CSV");
    bench->add_option("--scenario", bench_scenarios, "Scenario JSON file (repeatable)")->required();
    bench->add_option("--alphas", alphas, "Comma-separated alpha values")->capture_default_str();
    bench->add_option("--chunk-size", bench_cfg.chunk_sizes, "Chunk size (repeatable)");
    bench->add_option("--hot-budget", bench_cfg.hot_budgets, "Hot-tier budget in bytes (repeatable)");
    bench->add_option("--max-frames", bench_cfg.max_frames)->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--lambda", bench_cfg.lambda)->check(CLI::NonNegativeNumber)->capture_default_str();
    bench->add_option("--cold-dir", bench_cold);
    bench->add_option("--out", bench_out, "Write the CSV to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "streamkv: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*prefill) return cmd_prefill(prefill_opts);
        if (*recall_cmd) return cmd_recall(recall_opts, recall_cfg);
        if (*simulate) return cmd_simulate(sim_scenario, planner, mode, lambda, k, sim_out);
        if (*mem) {
            const accounting::AccountingInput in = preset.empty() ? geo : accounting::preset(preset);
            emit(mem_out, mem_report(in).dump(2) + "\n");
            return 0;
        }
        if (*bench) {
            bench_cfg.alphas = parse_alphas(alphas);
            bench_cfg.cold_dir = bench_cold;
            std::ostringstream csv;
            write_csv_header(csv);
            std::vector<std::string> violations;
            for (const std::string& path : bench_scenarios) {
                const auto rows = run_bench(load_scenario(path), bench_cfg);
                for (const MetricsRow& r : rows) write_csv_row(csv, r);
                for (auto& v : monotonicity_violations(rows)) violations.push_back(std::move(v));
            }
            emit(bench_out, csv.str());
            if (!violations.empty()) {
                std::cerr << "streamkv: selected-frame counts not monotone in alpha: " << violations.front() << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "streamkv: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "streamkv: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sweep harness: prefill a scenario's generated stream clip by clip under
// each (chunk size, hot budget), and after every clip run recall for each
// alpha, emitting one metrics row per layer.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "streamkv/scenario.hpp"

namespace streamkv {

struct BenchConfig {
    std::vector<double> alphas{0.0, 1.0, 3.0, 6.0};
    std::vector<std::size_t> chunk_sizes;   // empty: the scenario's resolved chunk size
    std::vector<std::uint64_t> hot_budgets;  // empty: unbounded
    std::size_t max_frames = 256;
    double lambda = 1.0;
    std::filesystem::path cold_dir;
};

struct MetricsRow {
    std::string scenario;
    std::size_t chunk_size = 0;
    std::uint64_t hot_budget = 0;
    double alpha = 0.0;
    std::int64_t t = 0;
    std::size_t layer = 0;
    std::size_t selected_frames = 0;
    std::size_t recalled_entries = 0;
    std::uint64_t hot_bytes = 0;
    std::uint64_t cold_bytes = 0;
    std::size_t cold_reads = 0;  // during this recall
    std::string decision;        // planned loop's decision at t
    double wall_ms = 0.0;        // recall plus answer attention, all layers
};

// Column order of the CSV output.
const std::vector<std::string>& metrics_columns();

std::vector<MetricsRow> run_bench(const Scenario& scenario, const BenchConfig& config);

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const MetricsRow& row);

// Rows whose selected_frames drop as alpha grows, with everything else fixed.
// Empty when the sweep is monotone.
std::vector<std::string> monotonicity_violations(const std::vector<MetricsRow>& rows);

}  // namespace streamkv

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic token streams for scenarios. Every token starts as seeded uniform
// noise. Each event kind K owns a signature token s_K; a question focused on K
// is made of copies of s_K. Frames carrying an event of kind K get a shift
// strength * p_K added to every token, where p_K is the minimum-norm vector
// that raises every head's frame score against s_K's query by exactly one.

#include <cstdint>
#include <string>
#include <vector>

#include "streamkv/model.hpp"
#include "streamkv/prefill.hpp"
#include "streamkv/scenario.hpp"

namespace streamkv {

// Deterministic d_model vector for an event kind.
std::vector<float> kind_signature(const std::string& kind, const ModelConfig& config);

// Minimum-norm direction p with score_{l,h}(s_K, p) = 1 for every layer and
// query head, where score is the projected-query/projected-key dot product
// scaled by 1/sqrt(d_head).
std::vector<float> kind_direction(const std::string& kind, const ProjectionWeights& weights);

// n copies of the kind signature at positions first_position, first_position+1, ...
TokenBlock kind_query_tokens(const std::string& kind, const ModelConfig& config, std::size_t n,
                             std::int64_t first_position);

// Clips with global positions (starting at 0) and global frame ids (one per
// frame, starting at 0). Clip t of the result has timestamp t (1-based).
std::vector<Clip> generate_stream(const Scenario& scenario, const ProjectionWeights& weights,
                                  const StreamSettings& settings);

// Question tokens for the scenario's focus kind, positioned after the stream.
TokenBlock question_tokens(const Scenario& scenario, const ModelConfig& config, std::int64_t first_position);

}  // namespace streamkv

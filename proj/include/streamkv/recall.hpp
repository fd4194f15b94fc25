// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Query-conditioned, layer-adaptive frame recall.
//
// Each frame is summarised by its mean key; the question by its mean projected
// query. A head scores frame j as dot(q_mean_h, k_mean_{j,kv(h)}) / sqrt(d_head)
// and keeps every frame whose score lies within alpha of that head's maximum.
// A layer recalls the union of its heads' sets. Since softmax weights scale as
// exp(score), any frame outside a head's set weighs less than exp(-alpha)
// times that head's top frame.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streamkv/kv_store.hpp"
#include "streamkv/model.hpp"

namespace streamkv {

// Mean projected query per layer, [layer][query_head][d_head].
struct QueryDescriptor {
    std::size_t n_heads = 0;
    std::size_t d_head = 0;
    std::vector<std::vector<float>> layers;

    std::span<const float> head(std::size_t layer, std::size_t h) const {
        return std::span<const float>(layers[layer]).subspan(h * d_head, d_head);
    }
};

struct RecallConfig {
    double alpha = 3.0;
    std::size_t max_frames = 256;

    void validate() const;
};

struct LayerRecall {
    std::vector<std::uint64_t> frame_ids;      // selected, temporal order
    std::vector<std::uint64_t> candidate_ids;  // every indexed frame, temporal order
    std::vector<std::vector<float>> head_scores;  // [head][candidate]
    LayerKv kv;                                // H_out for this layer
};

struct RecallResult {
    std::vector<LayerRecall> layers;

    std::size_t total_entries() const;
};

// Per-layer frame selection, before fetching KV.
struct Selection {
    std::vector<std::vector<std::uint64_t>> layers;
};

// Empty question is a UsageError.
QueryDescriptor query_descriptor(const TokenBlock& question, const ProjectionWeights& weights);

// One score per indexed frame of the layer, temporal order. Reads only the
// in-memory frame index.
std::vector<float> score_frames(const TieredKvStore& store, std::size_t layer, std::size_t head,
                                const QueryDescriptor& qd);
std::vector<float> score_frames(std::span<const FrameDescriptor> frames, std::size_t head, const QueryDescriptor& qd,
                                std::size_t layer, const ModelConfig& config);

// Margin selection over per-head scores aligned on the same frames. Returns
// frame indices in ascending (temporal) order. Heads with no scores are
// skipped. When the union exceeds max_frames, the frames with the highest
// max-over-heads score survive; ties keep the older frame.
std::vector<std::size_t> select_frames(std::span<const std::vector<float>> head_scores, const RecallConfig& config);

// Scores and selects every layer.
Selection select_layers(const TieredKvStore& store, const QueryDescriptor& qd, const RecallConfig& config,
                        std::vector<LayerRecall>* details = nullptr);

// Fetches the selected frames' KV, per layer, from whichever tier holds them.
RecallResult recall(const TieredKvStore& store, const Selection& selection);

// Convenience: score, select and fetch.
RecallResult recall(const TieredKvStore& store, const QueryDescriptor& qd, const RecallConfig& config);

// Question tokens appended after the recalled KV and attended causally over
// [H_out, question]. Question positions must follow the recalled positions.
// Nothing is written back to the store. Returns one tensor per layer.
std::vector<HeadTensor> answer_attention(const RecallResult& result, const TokenBlock& question,
                                         const ProjectionWeights& weights);

}  // namespace streamkv

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "streamkv/kv_store.hpp"
#include "streamkv/model.hpp"
#include "streamkv/working_set.hpp"

namespace streamkv {

// One timestep of the stream: a run of frames, each exactly tokens_per_frame
// tokens. Frame k carries frame id first_frame_id + k.
struct Clip {
    std::uint64_t clip_id = 0;
    std::int64_t timestamp = 0;
    std::uint64_t first_frame_id = 0;
    std::vector<TokenBlock> frames;

    std::size_t token_count() const;
    // All frames concatenated, plus the frame id of every token.
    TokenBlock tokens() const;
    std::vector<std::uint64_t> token_frame_ids() const;
};

struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const TokenRange&) const = default;
};

struct ChunkPlan {
    std::size_t chunk_size = 0;
    std::vector<TokenRange> chunks;
};

// Contiguous ranges of chunk_size tokens covering [0, n); the last may be
// shorter. chunk_size 0 is a UsageError.
ChunkPlan split_into_chunks(std::size_t n_tokens, std::size_t chunk_size);
ChunkPlan split_into_chunks(const Clip& clip, std::size_t chunk_size);

// Rolling prefill bookkeeping. prior_length counts KV already committed to the
// store by earlier clips; chunk_kv holds what the current clip has produced so
// far, one LayerKv per layer.
struct PrefillState {
    std::size_t prior_length = 0;    // l_P
    std::size_t current_length = 0;  // l_C
    std::vector<LayerKv> chunk_kv;
    std::optional<std::int64_t> last_position;

    static PrefillState for_config(const ModelConfig& config);
};

struct PrefillOptions {
    // Keep each chunk's attention output; otherwise it is computed, checked
    // for finiteness and dropped.
    bool keep_outputs = false;
    WorkingSetMeter* meter = nullptr;
};

// Attention output of one chunk, per layer.
struct ChunkOutput {
    std::vector<HeadTensor> layers;
};

// Projects the chunk's keys/values on every layer, attends the chunk's queries
// causally over [stored history, current-clip KV, chunk KV] and appends the
// chunk's KV to state.chunk_kv. history may be null for an empty past.
ChunkOutput prefill_chunk(PrefillState& state, const TokenBlock& chunk, std::span<const std::uint64_t> frame_ids,
                          const ProjectionWeights& weights, const TieredKvStore* history,
                          const PrefillOptions& options = {});

// Registers the current clip's KV with the store and folds l_C into l_P.
void finish_clip(PrefillState& state, TieredKvStore& store, std::uint64_t clip_id);

struct PrefillReport {
    std::size_t chunks = 0;
    std::size_t tokens = 0;
    std::vector<ChunkOutput> outputs;  // only with keep_outputs
};

// Prefills a whole clip chunk by chunk and commits it. An empty clip is a
// no-op; a clip id not newer than the store's last clip is an OrderingError.
PrefillReport prefill_clip(TieredKvStore& store, PrefillState& state, const Clip& clip, std::size_t chunk_size,
                           const ProjectionWeights& weights, const PrefillOptions& options = {});

}  // namespace streamkv

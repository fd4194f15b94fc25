// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/prefill.hpp"

#include <cmath>
#include <string>

#include "streamkv/error.hpp"

namespace streamkv {

std::size_t Clip::token_count() const {
    std::size_t n = 0;
    for (const TokenBlock& f : frames) n += f.size();
    return n;
}

TokenBlock Clip::tokens() const {
    TokenBlock out(frames.empty() ? 0 : frames.front().d_model());
    for (const TokenBlock& f : frames) {
        for (std::size_t i = 0; i < f.size(); ++i) out.push(f.token(i), f.positions()[i]);
    }
    return out;
}

std::vector<std::uint64_t> Clip::token_frame_ids() const {
    std::vector<std::uint64_t> ids;
    ids.reserve(token_count());
    for (std::size_t k = 0; k < frames.size(); ++k) ids.insert(ids.end(), frames[k].size(), first_frame_id + k);
    return ids;
}

ChunkPlan split_into_chunks(std::size_t n_tokens, std::size_t chunk_size) {
    if (chunk_size == 0) throw UsageError("chunk size must be >= 1");
    ChunkPlan plan;
    plan.chunk_size = chunk_size;
    for (std::size_t b = 0; b < n_tokens; b += chunk_size) plan.chunks.push_back({b, std::min(n_tokens, b + chunk_size)});
    return plan;
}

ChunkPlan split_into_chunks(const Clip& clip, std::size_t chunk_size) {
    return split_into_chunks(clip.token_count(), chunk_size);
}

PrefillState PrefillState::for_config(const ModelConfig& config) {
    PrefillState s;
    s.chunk_kv.assign(config.n_layers, LayerKv(config.kv_width()));
    return s;
}

ChunkOutput prefill_chunk(PrefillState& state, const TokenBlock& chunk, std::span<const std::uint64_t> frame_ids,
                          const ProjectionWeights& weights, const TieredKvStore* history,
                          const PrefillOptions& options) {
    const ModelConfig& cfg = weights.config;
    if (chunk.empty()) throw ShapeError("prefill: empty chunk");
    if (chunk.d_model() != cfg.d_model) throw ShapeError("prefill: token width does not match d_model");
    if (frame_ids.size() != chunk.size()) throw ShapeError("prefill: one frame id per token required");
    if (state.chunk_kv.size() != cfg.n_layers) throw ShapeError("prefill: state was built for another geometry");
    if (state.last_position && chunk.positions().front() <= *state.last_position) {
        throw OrderingError("prefill: chunk position " + std::to_string(chunk.positions().front()) +
                            " does not follow cached position " + std::to_string(*state.last_position));
    }

    const std::size_t n = chunk.size();
    const auto pos = chunk.positions();
    const MeteredAllocator<float> alloc(options.meter);
    MeteredFloats q(n * cfg.q_width(), 0.0f, alloc);
    MeteredFloats k(n * cfg.kv_width(), 0.0f, alloc);
    MeteredFloats v(n * cfg.kv_width(), 0.0f, alloc);
    const std::size_t width = cfg.kv_width();

    ChunkOutput result;
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        const LayerWeights& lw = weights.layers[layer];
        matmul_rows(chunk.data(), n, lw.wq, q);
        matmul_rows(chunk.data(), n, lw.wk, k);
        matmul_rows(chunk.data(), n, lw.wv, v);

        OnlineAttention attn(q, pos, cfg.n_heads, cfg.n_kv_heads, cfg.d_head, /*causal=*/true, options.meter);
        if (history) {
            history->visit_layer(layer, [&](std::int64_t p, std::span<const float> key, std::span<const float> value) {
                attn.consume(p, key, value);
            });
        }
        const LayerKv& current = state.chunk_kv[layer];
        for (std::size_t e = 0; e < current.size(); ++e) attn.consume(current.positions[e], current.key(e), current.value(e));
        const std::span<const float> ks(k);
        const std::span<const float> vs(v);
        for (std::size_t i = 0; i < n; ++i) attn.consume(pos[i], ks.subspan(i * width, width), vs.subspan(i * width, width));

        HeadTensor out = attn.finish();
        for (float x : out.data) {
            if (!std::isfinite(x)) throw ShapeError("prefill: non-finite attention output");
        }
        if (options.keep_outputs) result.layers.push_back(std::move(out));

        LayerKv& dst = state.chunk_kv[layer];
        for (std::size_t i = 0; i < n; ++i) dst.push(pos[i], frame_ids[i], ks.subspan(i * width, width), vs.subspan(i * width, width));
    }
    state.current_length += n;
    state.last_position = pos.back();
    return result;
}

void finish_clip(PrefillState& state, TieredKvStore& store, std::uint64_t clip_id) {
    store.begin_clip(clip_id);
    try {
        const std::size_t width = store.config().kv_width();
        for (std::size_t layer = 0; layer < state.chunk_kv.size(); ++layer) {
            const LayerKv& kv = state.chunk_kv[layer];
            std::size_t b = 0;
            while (b < kv.size()) {
                std::size_t e = b;
                while (e < kv.size() && kv.frame_ids[e] == kv.frame_ids[b]) ++e;
                store.append_kv(layer, kv.frame_ids[b],
                                std::span<const std::int64_t>(kv.positions).subspan(b, e - b),
                                std::span<const float>(kv.keys).subspan(b * width, (e - b) * width),
                                std::span<const float>(kv.values).subspan(b * width, (e - b) * width));
                b = e;
            }
        }
        store.commit_clip();
    } catch (...) {
        store.abort_clip();
        throw;
    }
    state.prior_length += state.current_length;
    state.current_length = 0;
    for (LayerKv& kv : state.chunk_kv) kv = LayerKv(kv.width);
}

PrefillReport prefill_clip(TieredKvStore& store, PrefillState& state, const Clip& clip, std::size_t chunk_size,
                           const ProjectionWeights& weights, const PrefillOptions& options) {
    const ModelConfig& cfg = weights.config;
    if (chunk_size == 0) throw UsageError("chunk size must be >= 1");
    PrefillReport report;
    if (clip.token_count() == 0) return report;
    if (auto last = store.last_clip_id(); last && clip.clip_id <= *last) {
        throw OrderingError("prefill: clip " + std::to_string(clip.clip_id) + " is not newer than stored clip " +
                            std::to_string(*last));
    }
    for (const TokenBlock& f : clip.frames) {
        if (f.size() != cfg.tokens_per_frame) {
            throw ShapeError("prefill: frame has " + std::to_string(f.size()) + " tokens, expected " +
                             std::to_string(cfg.tokens_per_frame));
        }
    }
    const TokenBlock tokens = clip.tokens();
    const std::vector<std::uint64_t> ids = clip.token_frame_ids();
    const ChunkPlan plan = split_into_chunks(tokens.size(), chunk_size);
    for (const TokenRange& r : plan.chunks) {
        ChunkOutput out = prefill_chunk(state, tokens.slice(r.begin, r.end),
                                        std::span<const std::uint64_t>(ids).subspan(r.begin, r.size()), weights, &store,
                                        options);
        if (options.keep_outputs) report.outputs.push_back(std::move(out));
    }
    finish_clip(state, store, clip.clip_id);
    report.chunks = plan.chunks.size();
    report.tokens = tokens.size();
    return report;
}

}  // namespace streamkv

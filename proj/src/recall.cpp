// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/recall.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "streamkv/error.hpp"

namespace streamkv {

void RecallConfig::validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("recall: alpha must be >= 0");
    if (max_frames == 0) throw ConfigError("recall: max_frames must be >= 1");
}

std::size_t RecallResult::total_entries() const {
    std::size_t n = 0;
    for (const LayerRecall& l : layers) n += l.kv.size();
    return n;
}

QueryDescriptor query_descriptor(const TokenBlock& question, const ProjectionWeights& weights) {
    if (question.empty()) throw UsageError("query descriptor: empty question");
    const ModelConfig& cfg = weights.config;
    QueryDescriptor qd;
    qd.n_heads = cfg.n_heads;
    qd.d_head = cfg.d_head;
    const std::size_t n = question.size();
    std::vector<float> q(n * cfg.q_width());
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        matmul_rows(question.data(), n, weights.layers[layer].wq, q);
        std::vector<double> sum(cfg.q_width(), 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t i = 0; i < cfg.q_width(); ++i) sum[i] += q[t * cfg.q_width() + i];
        }
        std::vector<float> mean(cfg.q_width());
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = static_cast<float>(sum[i] / static_cast<double>(n));
        qd.layers.push_back(std::move(mean));
    }
    return qd;
}

std::vector<float> score_frames(std::span<const FrameDescriptor> frames, std::size_t head, const QueryDescriptor& qd,
                                std::size_t layer, const ModelConfig& config) {
    if (head >= config.n_heads) throw ShapeError("score_frames: head out of range");
    if (layer >= qd.layers.size()) throw ShapeError("score_frames: layer out of range");
    const auto q = qd.head(layer, head);
    const std::size_t kvh = config.kv_head_of(head);
    const float scale = 1.0f / std::sqrt(static_cast<float>(config.d_head));
    std::vector<float> scores;
    scores.reserve(frames.size());
    for (const FrameDescriptor& f : frames) {
        const float* k = f.mean_key.data() + kvh * config.d_head;
        float dot = 0.0f;
        for (std::size_t d = 0; d < config.d_head; ++d) dot += q[d] * k[d];
        scores.push_back(dot * scale);
    }
    return scores;
}

std::vector<float> score_frames(const TieredKvStore& store, std::size_t layer, std::size_t head,
                                const QueryDescriptor& qd) {
    const auto frames = store.frame_index(layer);
    return score_frames(frames, head, qd, layer, store.config());
}

std::vector<std::size_t> select_frames(std::span<const std::vector<float>> head_scores, const RecallConfig& config) {
    config.validate();
    std::size_t n = 0;
    for (const auto& s : head_scores) n = std::max(n, s.size());
    std::vector<char> chosen(n, 0);
    std::vector<double> best(n, -std::numeric_limits<double>::infinity());
    for (const auto& s : head_scores) {
        if (s.empty()) continue;
        if (s.size() != n) throw ShapeError("select_frames: heads disagree on frame count");
        const double mx = *std::max_element(s.begin(), s.end());
        for (std::size_t j = 0; j < n; ++j) {
            if (mx - static_cast<double>(s[j]) <= config.alpha) chosen[j] = 1;
            best[j] = std::max(best[j], static_cast<double>(s[j]));
        }
    }
    std::vector<std::size_t> picked;
    for (std::size_t j = 0; j < n; ++j) {
        if (chosen[j]) picked.push_back(j);
    }
    if (picked.size() > config.max_frames) {
        std::stable_sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
        picked.resize(config.max_frames);
        std::sort(picked.begin(), picked.end());
    }
    return picked;
}

Selection select_layers(const TieredKvStore& store, const QueryDescriptor& qd, const RecallConfig& config,
                        std::vector<LayerRecall>* details) {
    const ModelConfig& cfg = store.config();
    Selection sel;
    if (details) details->assign(cfg.n_layers, LayerRecall{});
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        const auto frames = store.frame_index(layer);
        std::vector<std::vector<float>> scores;
        scores.reserve(cfg.n_heads);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) scores.push_back(score_frames(frames, h, qd, layer, cfg));
        std::vector<std::uint64_t> ids;
        for (std::size_t j : select_frames(scores, config)) ids.push_back(frames[j].frame_id);
        if (details) {
            LayerRecall& d = (*details)[layer];
            d.frame_ids = ids;
            for (const FrameDescriptor& f : frames) d.candidate_ids.push_back(f.frame_id);
            d.head_scores = std::move(scores);
        }
        sel.layers.push_back(std::move(ids));
    }
    return sel;
}

RecallResult recall(const TieredKvStore& store, const Selection& selection) {
    const ModelConfig& cfg = store.config();
    if (selection.layers.size() != cfg.n_layers) throw ShapeError("recall: selection must cover every layer");
    RecallResult result;
    result.layers.resize(cfg.n_layers);
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        LayerRecall& lr = result.layers[layer];
        lr.frame_ids = selection.layers[layer];
        if (lr.frame_ids.empty()) {
            lr.kv = LayerKv(cfg.kv_width());
        } else {
            lr.kv = store.fetch(layer, lr.frame_ids);
        }
    }
    return result;
}

RecallResult recall(const TieredKvStore& store, const QueryDescriptor& qd, const RecallConfig& config) {
    std::vector<LayerRecall> details;
    const Selection sel = select_layers(store, qd, config, &details);
    RecallResult result = recall(store, sel);
    for (std::size_t layer = 0; layer < details.size(); ++layer) {
        result.layers[layer].candidate_ids = std::move(details[layer].candidate_ids);
        result.layers[layer].head_scores = std::move(details[layer].head_scores);
    }
    return result;
}

std::vector<HeadTensor> answer_attention(const RecallResult& result, const TokenBlock& question,
                                         const ProjectionWeights& weights) {
    const ModelConfig& cfg = weights.config;
    if (question.empty()) throw UsageError("answer_attention: empty question");
    if (result.layers.size() != cfg.n_layers) throw ShapeError("answer_attention: recall result has the wrong depth");
    std::vector<HeadTensor> out;
    out.reserve(cfg.n_layers);
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        const LayerKv& recalled = result.layers[layer].kv;
        if (!recalled.empty() && question.positions().front() <= recalled.positions.back()) {
            throw OrderingError("answer_attention: question positions must follow the recalled context");
        }
        const QkvProjection qkv = project_qkv(question, layer, weights);
        LayerKv ctx = recalled;
        const std::size_t width = cfg.kv_width();
        for (std::size_t t = 0; t < question.size(); ++t) {
            ctx.push(question.positions()[t], std::numeric_limits<std::uint64_t>::max(),
                     std::span<const float>(qkv.k.data).subspan(t * width, width),
                     std::span<const float>(qkv.v.data).subspan(t * width, width));
        }
        out.push_back(attend(qkv.q, question.positions(), ctx.key_tensor(cfg.n_kv_heads),
                             ctx.value_tensor(cfg.n_kv_heads), ctx.positions, /*causal=*/true));
    }
    return out;
}

}  // namespace streamkv

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "streamkv/error.hpp"

namespace streamkv {

void ModelConfig::validate() const {
    if (n_layers == 0 || d_model == 0 || n_heads == 0 || n_kv_heads == 0 || d_head == 0 || tokens_per_frame == 0) {
        throw ConfigError("model config: all counts must be >= 1");
    }
    if (d_model != n_heads * d_head) {
        throw ConfigError("model config: d_model (" + std::to_string(d_model) + ") != n_heads * d_head (" +
                          std::to_string(n_heads * d_head) + ")");
    }
    if (n_heads % n_kv_heads != 0) {
        throw ConfigError("model config: n_heads must be a multiple of n_kv_heads");
    }
}

void TokenBlock::push(std::span<const float> token, std::int64_t position) {
    if (token.size() != d_model_) {
        throw ShapeError("token block: vector length " + std::to_string(token.size()) + " != d_model " +
                         std::to_string(d_model_));
    }
    if (!positions_.empty() && position <= positions_.back()) {
        throw OrderingError("token block: positions must be strictly increasing");
    }
    data_.insert(data_.end(), token.begin(), token.end());
    positions_.push_back(position);
}

TokenBlock TokenBlock::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw ShapeError("token block: slice out of range");
    TokenBlock out(d_model_);
    out.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(begin * d_model_),
                     data_.begin() + static_cast<std::ptrdiff_t>(end * d_model_));
    out.positions_.assign(positions_.begin() + static_cast<std::ptrdiff_t>(begin),
                          positions_.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t layer, std::uint64_t slot) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed ^ (layer * 0x9E3779B97F4A7C15ULL) ^ (slot * 0xC2B2AE3D27D4EB4FULL);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, float scale) {
    Matrix m(rows, cols);
    std::mt19937_64 gen(seed);
    for (float& x : m.data()) {
        const auto u = static_cast<float>(gen() >> 40) * (1.0f / 16777216.0f);
        x = (2.0f * u - 1.0f) * scale;
    }
    return m;
}

HeadTensor project(const TokenBlock& block, const Matrix& w, std::size_t heads, std::size_t dim) {
    HeadTensor out(block.size(), heads, dim);
    matmul_rows(block.data(), block.size(), w, out.data);
    return out;
}

}  // namespace

ProjectionWeights init_weights(const ModelConfig& config) {
    config.validate();
    ProjectionWeights w;
    w.config = config;
    const float scale = 1.0f / std::sqrt(static_cast<float>(config.d_model));
    w.layers.reserve(config.n_layers);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        LayerWeights lw;
        lw.wq = random_matrix(config.d_model, config.q_width(), mix_seed(config.seed, l, 0), scale);
        lw.wk = random_matrix(config.d_model, config.kv_width(), mix_seed(config.seed, l, 1), scale);
        lw.wv = random_matrix(config.d_model, config.kv_width(), mix_seed(config.seed, l, 2), scale);
        w.layers.push_back(std::move(lw));
    }
    return w;
}

void matmul_rows(std::span<const float> x, std::size_t n, const Matrix& w, std::span<float> out) {
    const std::size_t in = w.rows();
    const std::size_t cols = w.cols();
    if (x.size() != n * in) throw ShapeError("matmul: input is not n x d_model");
    if (out.size() != n * cols) throw ShapeError("matmul: output buffer has the wrong size");
    const std::span<const float> wd = w.data();
    for (std::size_t r = 0; r < n; ++r) {
        float* o = out.data() + r * cols;
        std::fill(o, o + cols, 0.0f);
        for (std::size_t i = 0; i < in; ++i) {
            const float xi = x[r * in + i];
            if (xi == 0.0f) continue;
            const float* wr = wd.data() + i * cols;
            for (std::size_t c = 0; c < cols; ++c) o[c] += xi * wr[c];
        }
    }
}

QkvProjection project_qkv(const TokenBlock& block, std::size_t layer, const ProjectionWeights& weights) {
    const ModelConfig& cfg = weights.config;
    if (block.empty()) throw ShapeError("project_qkv: empty token block");
    if (layer >= weights.layers.size()) throw ShapeError("project_qkv: layer index out of range");
    if (block.d_model() != cfg.d_model) throw ShapeError("project_qkv: token width does not match d_model");
    const LayerWeights& lw = weights.layers[layer];
    return QkvProjection{
        project(block, lw.wq, cfg.n_heads, cfg.d_head),
        project(block, lw.wk, cfg.n_kv_heads, cfg.d_head),
        project(block, lw.wv, cfg.n_kv_heads, cfg.d_head),
    };
}

HeadTensor attend(const HeadTensor& q, std::span<const std::int64_t> q_pos, const HeadTensor& k, const HeadTensor& v,
                  std::span<const std::int64_t> k_pos, bool causal) {
    if (k.tokens != v.tokens || k.heads != v.heads || k.dim != v.dim) throw ShapeError("attend: K/V shape mismatch");
    if (k_pos.size() != k.tokens || q_pos.size() != q.tokens) throw ShapeError("attend: position count mismatch");
    if (q.dim != k.dim) throw ShapeError("attend: head dimension mismatch");
    if (k.heads == 0 || q.heads % k.heads != 0) throw ShapeError("attend: query heads do not group onto kv heads");

    const std::size_t group = q.heads / k.heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(q.dim));
    HeadTensor out(q.tokens, q.heads, v.dim);
    std::vector<float> scores(k.tokens);
    for (std::size_t t = 0; t < q.tokens; ++t) {
        std::size_t visible = k.tokens;
        if (causal) {
            visible = static_cast<std::size_t>(std::upper_bound(k_pos.begin(), k_pos.end(), q_pos[t]) - k_pos.begin());
        }
        if (visible == 0) throw ShapeError("attend: query has no visible keys");
        for (std::size_t h = 0; h < q.heads; ++h) {
            const std::size_t kvh = h / group;
            const auto qv = q.at(t, h);
            for (std::size_t j = 0; j < visible; ++j) {
                const auto kv = k.at(j, kvh);
                float dot = 0.0f;
                for (std::size_t d = 0; d < q.dim; ++d) dot += qv[d] * kv[d];
                scores[j] = dot * scale;
            }
            const auto w = softmax(std::span<const float>(scores).first(visible));
            auto o = out.at(t, h);
            for (std::size_t j = 0; j < visible; ++j) {
                const auto vv = v.at(j, kvh);
                for (std::size_t d = 0; d < v.dim; ++d) o[d] += w[j] * vv[d];
            }
        }
    }
    return out;
}

std::vector<float> softmax(std::span<const float> scores) {
    if (scores.empty()) throw UsageError("softmax: empty input");
    double mx = -std::numeric_limits<double>::infinity();
    for (float s : scores) mx = std::max(mx, static_cast<double>(s));
    std::vector<double> e(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        e[i] = std::exp(static_cast<double>(scores[i]) - mx);
        total += e[i];
    }
    std::vector<float> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = static_cast<float>(e[i] / total);
    return out;
}

OnlineAttention::OnlineAttention(std::span<const float> queries, std::span<const std::int64_t> q_pos,
                                 std::size_t n_heads, std::size_t n_kv_heads, std::size_t d_head, bool causal,
                                 WorkingSetMeter* meter)
    : queries_(queries),
      q_pos_(q_pos),
      n_heads_(n_heads),
      n_kv_heads_(n_kv_heads),
      d_head_(d_head),
      causal_(causal),
      scale_(1.0f / std::sqrt(static_cast<float>(d_head))),
      running_max_(MeteredAllocator<float>(meter)),
      running_sum_(MeteredAllocator<float>(meter)),
      acc_(MeteredAllocator<float>(meter)) {
    if (n_kv_heads == 0 || n_heads % n_kv_heads != 0) throw ShapeError("online attention: bad head grouping");
    if (queries.size() != q_pos.size() * n_heads * d_head) throw ShapeError("online attention: query shape mismatch");
    const std::size_t lanes = q_pos.size() * n_heads;
    running_max_.assign(lanes, -std::numeric_limits<float>::infinity());
    running_sum_.assign(lanes, 0.0f);
    acc_.assign(lanes * d_head, 0.0f);
}

void OnlineAttention::consume(std::int64_t key_pos, std::span<const float> key, std::span<const float> value) {
    if (key.size() != n_kv_heads_ * d_head_ || value.size() != n_kv_heads_ * d_head_) {
        throw ShapeError("online attention: key/value width mismatch");
    }
    const std::size_t group = n_heads_ / n_kv_heads_;
    for (std::size_t t = 0; t < q_pos_.size(); ++t) {
        if (causal_ && key_pos > q_pos_[t]) continue;
        for (std::size_t h = 0; h < n_heads_; ++h) {
            const std::size_t lane = t * n_heads_ + h;
            const std::size_t kvh = h / group;
            const float* qv = queries_.data() + lane * d_head_;
            const float* kv = key.data() + kvh * d_head_;
            const float* vv = value.data() + kvh * d_head_;
            float dot = 0.0f;
            for (std::size_t d = 0; d < d_head_; ++d) dot += qv[d] * kv[d];
            const float s = dot * scale_;
            float* a = acc_.data() + lane * d_head_;
            const float m_old = running_max_[lane];
            if (s > m_old) {
                const float shrink = std::exp(m_old - s);
                running_sum_[lane] = running_sum_[lane] * shrink + 1.0f;
                for (std::size_t d = 0; d < d_head_; ++d) a[d] = a[d] * shrink + vv[d];
                running_max_[lane] = s;
            } else {
                const float w = std::exp(s - m_old);
                running_sum_[lane] += w;
                for (std::size_t d = 0; d < d_head_; ++d) a[d] += w * vv[d];
            }
        }
    }
}

HeadTensor OnlineAttention::finish() const {
    HeadTensor out(q_pos_.size(), n_heads_, d_head_);
    for (std::size_t lane = 0; lane < q_pos_.size() * n_heads_; ++lane) {
        if (running_sum_[lane] == 0.0f) throw ShapeError("online attention: query has no visible keys");
        const float inv = 1.0f / running_sum_[lane];
        for (std::size_t d = 0; d < d_head_; ++d) out.data[lane * d_head_ + d] = acc_[lane * d_head_ + d] * inv;
    }
    return out;
}

}  // namespace streamkv

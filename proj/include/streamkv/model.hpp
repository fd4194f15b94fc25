// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Toy grouped-query attention stack: seeded projection weights, per-layer
// Q/K/V projection and scaled dot-product attention. There is no layer norm,
// residual, MLP or positional encoding; every layer projects the raw token
// block, and temporal order comes only from positions and the causal mask.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streamkv/working_set.hpp"

namespace streamkv {

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t n_kv_heads = 2;
    std::size_t d_head = 8;
    std::size_t tokens_per_frame = 4;
    std::uint64_t seed = 1;

    // Throws ConfigError when a count is zero, d_model != n_heads * d_head or
    // the query heads do not divide evenly into kv-head groups.
    void validate() const;

    std::size_t group_size() const { return n_heads / n_kv_heads; }
    std::size_t q_width() const { return n_heads * d_head; }
    std::size_t kv_width() const { return n_kv_heads * d_head; }
    std::size_t kv_head_of(std::size_t query_head) const { return query_head / group_size(); }

    bool operator==(const ModelConfig&) const = default;
};

// Dense row-major matrix of 32-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

struct LayerWeights {
    Matrix wq;  // d_model x (n_heads * d_head)
    Matrix wk;  // d_model x (n_kv_heads * d_head)
    Matrix wv;  // d_model x (n_kv_heads * d_head)

    bool operator==(const LayerWeights&) const = default;
};

struct ProjectionWeights {
    ModelConfig config;
    std::vector<LayerWeights> layers;

    bool operator==(const ProjectionWeights&) const = default;
};

// A run of d_model-dimensional token vectors with strictly increasing
// stream positions.
class TokenBlock {
public:
    TokenBlock() = default;
    explicit TokenBlock(std::size_t d_model) : d_model_(d_model) {}

    // Throws ShapeError on a wrong vector length and OrderingError when the
    // position does not exceed the previous one.
    void push(std::span<const float> token, std::int64_t position);

    std::size_t size() const { return positions_.size(); }
    bool empty() const { return positions_.empty(); }
    std::size_t d_model() const { return d_model_; }

    std::span<const float> token(std::size_t i) const {
        return std::span<const float>(data_).subspan(i * d_model_, d_model_);
    }
    std::span<const float> data() const { return data_; }
    std::span<const std::int64_t> positions() const { return positions_; }

    // Tokens [begin, end) as a new block.
    TokenBlock slice(std::size_t begin, std::size_t end) const;

    bool operator==(const TokenBlock&) const = default;

private:
    std::size_t d_model_ = 0;
    std::vector<float> data_;
    std::vector<std::int64_t> positions_;
};

// Per-token, per-head vectors laid out [token][head][dim].
struct HeadTensor {
    std::size_t tokens = 0;
    std::size_t heads = 0;
    std::size_t dim = 0;
    std::vector<float> data;

    HeadTensor() = default;
    HeadTensor(std::size_t t, std::size_t h, std::size_t d) : tokens(t), heads(h), dim(d), data(t * h * d, 0.0f) {}

    std::span<float> at(std::size_t t, std::size_t h) { return std::span<float>(data).subspan((t * heads + h) * dim, dim); }
    std::span<const float> at(std::size_t t, std::size_t h) const {
        return std::span<const float>(data).subspan((t * heads + h) * dim, dim);
    }
    // All heads of one token, contiguous.
    std::span<const float> row(std::size_t t) const {
        return std::span<const float>(data).subspan(t * heads * dim, heads * dim);
    }
};

struct QkvProjection {
    HeadTensor q;
    HeadTensor k;
    HeadTensor v;
};

// Deterministic weights. Each matrix draws from its own std::mt19937_64 stream
// seeded by mixing (config.seed, layer, matrix slot); the top 24 bits of every
// draw give u in [0, 1), and the entry is (2u - 1) / sqrt(d_model).
ProjectionWeights init_weights(const ModelConfig& config);

// out[n x w.cols()] = x[n x w.rows()] * w. Shapes are checked.
void matmul_rows(std::span<const float> x, std::size_t n, const Matrix& w, std::span<float> out);

QkvProjection project_qkv(const TokenBlock& block, std::size_t layer, const ProjectionWeights& weights);

// Scaled dot-product attention with grouped kv heads. Query head h reads kv
// head h / (q.heads / k.heads). When causal, keys whose position exceeds the
// query position get zero weight; a query with no visible key is a ShapeError.
HeadTensor attend(const HeadTensor& q, std::span<const std::int64_t> q_pos, const HeadTensor& k, const HeadTensor& v,
                  std::span<const std::int64_t> k_pos, bool causal);

// Max-subtracted softmax, evaluated in double and returned as float.
std::vector<float> softmax(std::span<const float> scores);

// Single-pass (online softmax) attention for a fixed set of queries against a
// key/value stream fed one entry at a time. Scratch lives in metered buffers
// sized by the query count only, so the working set is independent of how
// many keys are consumed.
class OnlineAttention {
public:
    OnlineAttention(std::span<const float> queries, std::span<const std::int64_t> q_pos, std::size_t n_heads,
                    std::size_t n_kv_heads, std::size_t d_head, bool causal, WorkingSetMeter* meter = nullptr);

    // key/value hold n_kv_heads * d_head floats.
    void consume(std::int64_t key_pos, std::span<const float> key, std::span<const float> value);

    HeadTensor finish() const;

private:
    std::span<const float> queries_;
    std::span<const std::int64_t> q_pos_;
    std::size_t n_heads_;
    std::size_t n_kv_heads_;
    std::size_t d_head_;
    bool causal_;
    float scale_;
    MeteredFloats running_max_;
    MeteredFloats running_sum_;
    MeteredFloats acc_;
};

}  // namespace streamkv

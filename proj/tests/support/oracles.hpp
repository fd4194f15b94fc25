// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Brute-force reference implementations and fixtures shared by the tests.
// Everything here is written independently of the library kernels: plain
// loops in double precision.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "streamkv/kv_store.hpp"
#include "streamkv/model.hpp"
#include "streamkv/prefill.hpp"

namespace oracle {

using streamkv::Clip;
using streamkv::LayerKv;
using streamkv::ModelConfig;
using streamkv::ProjectionWeights;
using streamkv::TokenBlock;

inline std::vector<float> random_vec(std::mt19937_64& rng, std::size_t n, float scale = 1.0f) {
    std::uniform_real_distribution<float> dist(-scale, scale);
    std::vector<float> v(n);
    for (float& x : v) x = dist(rng);
    return v;
}

inline TokenBlock random_block(std::mt19937_64& rng, std::size_t n, std::size_t d_model, std::int64_t first = 0) {
    TokenBlock b(d_model);
    for (std::size_t i = 0; i < n; ++i) b.push(random_vec(rng, d_model), first + static_cast<std::int64_t>(i));
    return b;
}

// Random valid geometry with at most max_layers layers and d_model <= max_d.
inline ModelConfig random_config(std::mt19937_64& rng, std::size_t max_layers = 4, std::size_t max_d = 64) {
    static const std::size_t kv_options[] = {1, 2, 4};
    for (;;) {
        ModelConfig c;
        c.n_layers = 1 + rng() % max_layers;
        c.n_kv_heads = kv_options[rng() % 3];
        c.n_heads = c.n_kv_heads * (1 + rng() % 3);
        c.d_head = 2 + rng() % 8;
        c.d_model = c.n_heads * c.d_head;
        c.tokens_per_frame = 1 + rng() % 6;
        c.seed = rng();
        if (c.d_model <= max_d) return c;
    }
}

// out[n x cols] = x[n x rows] * W, accumulated in double.
inline std::vector<double> matmul(std::span<const float> x, std::size_t n, const streamkv::Matrix& w) {
    std::vector<double> out(n * w.cols(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < w.cols(); ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < w.rows(); ++k) acc += static_cast<double>(x[r * w.rows() + k]) * w(k, c);
            out[r * w.cols() + c] = acc;
        }
    }
    return out;
}

// Grouped-query softmax attention, one query row at a time, in double.
// q: [nq][n_heads*d], k/v: [nk][n_kv*d]. Returns [nq][n_heads*d].
inline std::vector<double> attention(const std::vector<double>& q, const std::vector<std::int64_t>& q_pos,
                                     const std::vector<double>& k, const std::vector<double>& v,
                                     const std::vector<std::int64_t>& k_pos, std::size_t n_heads, std::size_t n_kv,
                                     std::size_t d, bool causal) {
    const std::size_t nq = q_pos.size();
    const std::size_t nk = k_pos.size();
    const std::size_t group = n_heads / n_kv;
    std::vector<double> out(nq * n_heads * d, 0.0);
    for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t g = h / group;
            std::vector<double> s;
            std::vector<std::size_t> idx;
            for (std::size_t j = 0; j < nk; ++j) {
                if (causal && k_pos[j] > q_pos[i]) continue;
                double dot = 0.0;
                for (std::size_t e = 0; e < d; ++e) dot += q[(i * n_heads + h) * d + e] * k[(j * n_kv + g) * d + e];
                s.push_back(dot / std::sqrt(static_cast<double>(d)));
                idx.push_back(j);
            }
            const double mx = *std::max_element(s.begin(), s.end());
            double z = 0.0;
            for (double& x : s) z += (x = std::exp(x - mx));
            for (std::size_t m = 0; m < s.size(); ++m) {
                for (std::size_t e = 0; e < d; ++e) out[(i * n_heads + h) * d + e] += s[m] / z * v[(idx[m] * n_kv + g) * d + e];
            }
        }
    }
    return out;
}

inline std::vector<std::int64_t> positions_of(const TokenBlock& b) { return {b.positions().begin(), b.positions().end()}; }

// Per-layer keys and values of a whole stream, projected in one pass.
struct LayerProjection {
    std::vector<double> q, k, v;
};

inline std::vector<LayerProjection> project_stream(const TokenBlock& stream, const ProjectionWeights& w) {
    std::vector<LayerProjection> out;
    for (const auto& layer : w.layers) {
        out.push_back({matmul(stream.data(), stream.size(), layer.wq), matmul(stream.data(), stream.size(), layer.wk),
                       matmul(stream.data(), stream.size(), layer.wv)});
    }
    return out;
}

// Concatenates blocks into one stream (positions must already be increasing).
inline TokenBlock concat(const std::vector<TokenBlock>& blocks, std::size_t d_model) {
    TokenBlock out(d_model);
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.size(); ++i) out.push(b.token(i), b.positions()[i]);
    }
    return out;
}

inline double max_abs_diff(std::span<const float> a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

// Clips of random tokens, frames_per_clip frames each, continuing positions
// and frame ids from the given starting points.
inline std::vector<Clip> random_clips(std::mt19937_64& rng, const ModelConfig& cfg, std::size_t n_clips,
                                      std::size_t frames_per_clip, std::int64_t first_pos = 0,
                                      std::uint64_t first_frame = 0, std::uint64_t first_clip = 1) {
    std::vector<Clip> clips;
    std::int64_t pos = first_pos;
    std::uint64_t frame = first_frame;
    for (std::size_t c = 0; c < n_clips; ++c) {
        Clip clip;
        clip.clip_id = first_clip + c;
        clip.timestamp = static_cast<std::int64_t>(c + 1);
        clip.first_frame_id = frame;
        for (std::size_t f = 0; f < frames_per_clip; ++f) {
            clip.frames.push_back(random_block(rng, cfg.tokens_per_frame, cfg.d_model, pos));
            pos += static_cast<std::int64_t>(cfg.tokens_per_frame);
            ++frame;
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("streamkv-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Definitional filter: frame j is kept iff some head has max - s_j <= alpha.
inline std::vector<std::size_t> margin_filter(const std::vector<std::vector<float>>& scores, double alpha) {
    std::set<std::size_t> keep;
    for (const auto& s : scores) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            bool within = true;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (static_cast<double>(s[i]) - static_cast<double>(s[j]) > alpha) within = false;
            }
            if (within) keep.insert(j);
        }
    }
    return {keep.begin(), keep.end()};
}

// Every token of a frame is the same vector, so token keys equal the frame's
// mean key.
inline std::vector<Clip> repeated_token_clips(std::mt19937_64& rng, const ModelConfig& c, std::size_t n_clips,
                                              std::size_t frames_per_clip, float spread) {
    std::vector<Clip> clips;
    std::int64_t pos = 0;
    std::uint64_t frame = 0;
    for (std::size_t k = 0; k < n_clips; ++k) {
        Clip clip;
        clip.clip_id = k + 1;
        clip.timestamp = static_cast<std::int64_t>(k + 1);
        clip.first_frame_id = frame;
        for (std::size_t f = 0; f < frames_per_clip; ++f) {
            const auto tok = random_vec(rng, c.d_model, spread);
            TokenBlock b(c.d_model);
            for (std::size_t i = 0; i < c.tokens_per_frame; ++i) b.push(tok, pos++);
            clip.frames.push_back(std::move(b));
            ++frame;
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

}  // namespace oracle

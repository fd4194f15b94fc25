// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/stream_gen.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "streamkv/error.hpp"

namespace streamkv {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

float uniform_pm1(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 40) / static_cast<double>(1ull << 24);
    return static_cast<float>(2.0 * u - 1.0);
}

}  // namespace

std::vector<float> kind_signature(const std::string& kind, const ModelConfig& config) {
    std::mt19937_64 rng(fnv1a(kind) ^ config.seed);
    std::vector<float> s(config.d_model);
    for (float& x : s) x = uniform_pm1(rng);
    return s;
}

std::vector<float> kind_direction(const std::string& kind, const ProjectionWeights& weights) {
    const ModelConfig& cfg = weights.config;
    const std::vector<float> sig = kind_signature(kind, cfg);
    const std::size_t rows = cfg.n_layers * cfg.n_heads;
    Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cfg.d_model));
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_head));
    std::vector<float> q(cfg.q_width());
    for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
        const LayerWeights& w = weights.layers[layer];
        matmul_rows(sig, 1, w.wq, q);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            const std::size_t kv = cfg.kv_head_of(h);
            const auto row = static_cast<Eigen::Index>(layer * cfg.n_heads + h);
            for (std::size_t i = 0; i < cfg.d_model; ++i) {
                double acc = 0.0;
                for (std::size_t d = 0; d < cfg.d_head; ++d) {
                    acc += static_cast<double>(w.wk(i, kv * cfg.d_head + d)) * q[h * cfg.d_head + d];
                }
                g(row, static_cast<Eigen::Index>(i)) = acc * scale;
            }
        }
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows));
    const Eigen::VectorXd p = g.completeOrthogonalDecomposition().solve(ones);
    std::vector<float> out(cfg.d_model);
    for (std::size_t i = 0; i < cfg.d_model; ++i) out[i] = static_cast<float>(p(static_cast<Eigen::Index>(i)));
    return out;
}

TokenBlock kind_query_tokens(const std::string& kind, const ModelConfig& config, std::size_t n,
                             std::int64_t first_position) {
    const std::vector<float> sig = kind_signature(kind, config);
    TokenBlock block(config.d_model);
    for (std::size_t i = 0; i < n; ++i) block.push(sig, first_position + static_cast<std::int64_t>(i));
    return block;
}

std::vector<Clip> generate_stream(const Scenario& scenario, const ProjectionWeights& weights,
                                  const StreamSettings& settings) {
    const ModelConfig& cfg = weights.config;
    std::map<std::string, std::vector<float>> directions;
    std::vector<Clip> clips;
    std::int64_t position = 0;
    std::uint64_t frame_id = 0;
    for (std::size_t c = 0; c < scenario.clips.size(); ++c) {
        const ScenarioClip& sc = scenario.clips[c];
        Clip clip;
        clip.clip_id = sc.clip_id;
        clip.timestamp = static_cast<std::int64_t>(c + 1);
        clip.first_frame_id = frame_id;
        std::mt19937_64 rng(sc.token_seed);
        for (std::size_t f = 0; f < sc.n_frames; ++f) {
            std::vector<float> shift(cfg.d_model, 0.0f);
            for (const ScenarioEvent& e : sc.events) {
                if (e.frame != f) continue;
                auto it = directions.find(e.kind);
                if (it == directions.end()) it = directions.emplace(e.kind, kind_direction(e.kind, weights)).first;
                for (std::size_t i = 0; i < cfg.d_model; ++i) {
                    shift[i] += static_cast<float>(settings.event_strength) * it->second[i];
                }
            }
            TokenBlock frame(cfg.d_model);
            std::vector<float> token(cfg.d_model);
            for (std::size_t k = 0; k < cfg.tokens_per_frame; ++k) {
                for (std::size_t i = 0; i < cfg.d_model; ++i) {
                    token[i] = uniform_pm1(rng) * static_cast<float>(settings.noise_scale) + shift[i];
                }
                frame.push(token, position++);
            }
            clip.frames.push_back(std::move(frame));
            ++frame_id;
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

TokenBlock question_tokens(const Scenario& scenario, const ModelConfig& config, std::int64_t first_position) {
    const std::string kind = scenario.focus_kind();
    if (kind.empty()) throw UsageError("scenario has no focus kind for question tokens");
    return kind_query_tokens(kind, config, config.tokens_per_frame, first_position);
}

}  // namespace streamkv

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "streamkv/error.hpp"
#include "streamkv/prefill.hpp"
#include "streamkv/recall.hpp"

using namespace streamkv;

namespace {

ModelConfig recall_config() {
    ModelConfig c;
    c.n_layers = 2;
    c.d_model = 16;
    c.n_heads = 4;
    c.n_kv_heads = 2;
    c.d_head = 4;
    c.tokens_per_frame = 3;
    c.seed = 21;
    return c;
}

void prefill_all(TieredKvStore& store, const std::vector<Clip>& clips, const ProjectionWeights& w, std::size_t chunk) {
    PrefillState state = PrefillState::for_config(w.config);
    for (const Clip& clip : clips) prefill_clip(store, state, clip, chunk, w);
}

}  // namespace

TEST_CASE("query descriptor") {
    std::mt19937_64 rng(1);
    const ModelConfig c = recall_config();
    const auto w = init_weights(c);

    SUBCASE("single token: its own projected query") {
        const TokenBlock q = oracle::random_block(rng, 1, c.d_model);
        const QueryDescriptor qd = query_descriptor(q, w);
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const QkvProjection p = project_qkv(q, l, w);
            CHECK(oracle::max_abs_diff(qd.layers[l], std::vector<double>(p.q.data.begin(), p.q.data.end())) == 0.0);
        }
    }
    SUBCASE("x and -x cancel") {
        const auto x = oracle::random_vec(rng, c.d_model);
        std::vector<float> neg(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
        TokenBlock q(c.d_model);
        q.push(x, 0);
        q.push(neg, 1);
        const QueryDescriptor qd = query_descriptor(q, w);
        for (const auto& layer : qd.layers) {
            for (float v : layer) CHECK(std::abs(v) < 1e-6);
        }
    }
    SUBCASE("five tokens: explicit sum over 5") {
        const TokenBlock q = oracle::random_block(rng, 5, c.d_model);
        const QueryDescriptor qd = query_descriptor(q, w);
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const auto proj = oracle::matmul(q.data(), 5, w.layers[l].wq);
            std::vector<double> mean(c.q_width(), 0.0);
            for (std::size_t t = 0; t < 5; ++t) {
                for (std::size_t i = 0; i < c.q_width(); ++i) mean[i] += proj[t * c.q_width() + i] / 5.0;
            }
            CHECK(oracle::max_abs_diff(qd.layers[l], mean) < 1e-6);
            CHECK(qd.head(l, 3).size() == c.d_head);
        }
    }
    SUBCASE("empty question") { CHECK_THROWS_AS(query_descriptor(TokenBlock(c.d_model), w), UsageError); }
}

TEST_CASE("score_frames on engineered descriptors") {
    ModelConfig c;
    c.n_layers = 1;
    c.n_heads = 2;
    c.n_kv_heads = 1;
    c.d_head = 3;
    c.d_model = 6;
    QueryDescriptor qd;
    qd.n_heads = 2;
    qd.d_head = 3;
    qd.layers = {{1, 2, 2, 0, 0, 1}};
    std::vector<FrameDescriptor> frames(3);
    for (auto& f : frames) f.mean_key = {0, 0, 0};

    SUBCASE("orthogonal keys score zero") {
        frames[0].mean_key = {2, -1, 0};
        frames[1].mean_key = {0, 1, -1};
        for (float s : score_frames(frames, 0, qd, 0, c)) CHECK(s == 0.0f);
    }
    SUBCASE("key equal to the query gives the unique max") {
        frames[1].mean_key = {1, 2, 2};
        const auto s = score_frames(frames, 0, qd, 0, c);
        CHECK(s[1] == doctest::Approx(9.0 / std::sqrt(3.0)));
        CHECK(s[0] == 0.0f);
        CHECK(s[2] == 0.0f);
    }
    SUBCASE("empty frame list") { CHECK(score_frames(std::vector<FrameDescriptor>{}, 0, qd, 0, c).empty()); }
}

TEST_CASE("score_frames matches a per-frame dot product and never reads cold storage") {
    std::mt19937_64 rng(2);
    const ModelConfig c = recall_config();
    const auto w = init_weights(c);
    oracle::TempDir dir("score");
    TieredKvStore store(c, dir.path());
    prefill_all(store, oracle::random_clips(rng, c, 4, 3), w, 4);
    store.maybe_offload(TierPolicy{0});
    const QueryDescriptor qd = query_descriptor(oracle::random_block(rng, 3, c.d_model, 1000), w);
    const std::size_t reads = store.cold_reads();
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        const auto frames = store.frame_index(l);
        REQUIRE(frames.size() == 12);
        for (std::size_t h = 0; h < c.n_heads; ++h) {
            const auto s = score_frames(store, l, h, qd);
            for (std::size_t j = 0; j < frames.size(); ++j) {
                double dot = 0.0;
                for (std::size_t d = 0; d < c.d_head; ++d) {
                    dot += static_cast<double>(qd.head(l, h)[d]) * frames[j].mean_key[c.kv_head_of(h) * c.d_head + d];
                }
                CHECK(std::abs(s[j] - dot / std::sqrt(static_cast<double>(c.d_head))) < 1e-6);
            }
        }
    }
    RecallConfig rc;
    select_layers(store, qd, rc);
    CHECK(store.cold_reads() == reads);
}

TEST_CASE("select_frames examples") {
    RecallConfig rc;
    rc.alpha = 3;
    const std::vector<std::vector<float>> one{{10, 5, 9.5f}};
    CHECK(select_frames(one, rc) == std::vector<std::size_t>{0, 2});
    rc.alpha = 0;
    CHECK(select_frames(one, rc) == std::vector<std::size_t>{0});
    const std::vector<std::vector<float>> tie{{4, 7, 7, 1}};
    CHECK(select_frames(tie, rc) == std::vector<std::size_t>{1, 2});

    // A frame 6.1 below the max is excluded at alpha 6, and its softmax
    // weight is at most 1/403.4 of the max frame's.
    rc.alpha = 6;
    const std::vector<std::vector<float>> gap{{8.0f, 1.9f, 7.0f}};
    CHECK(select_frames(gap, rc) == std::vector<std::size_t>{0, 2});
    const auto beta = softmax(gap[0]);
    CHECK(beta[1] <= beta[0] / 403.4f);
}

TEST_CASE("select_frames equals the definitional filter on random score sets") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> alpha_dist(0.0, 8.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t heads = 1 + rng() % 4, frames = 1 + rng() % 20;
        std::vector<std::vector<float>> scores;
        for (std::size_t h = 0; h < heads; ++h) scores.push_back(oracle::random_vec(rng, frames, 10.0f));
        RecallConfig rc{alpha_dist(rng), 1000};
        CHECK(select_frames(scores, rc) == oracle::margin_filter(scores, rc.alpha));
    }
}

TEST_CASE("margin selection grows with alpha") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<float>> scores;
        for (int h = 0; h < 3; ++h) scores.push_back(oracle::random_vec(rng, 15, 6.0f));
        std::vector<std::size_t> prev;
        for (double a : {0.0, 0.5, 1.0, 2.0, 3.0, 6.0, 12.0}) {
            const auto cur = select_frames(scores, RecallConfig{a, 1000});
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = cur;
        }
    }
}

TEST_CASE("cap keeps the highest max-over-heads scores, ties toward older frames") {
    const std::vector<std::vector<float>> scores{{5, 5, 1, 5, 4}, {0, 0, 5, 0, 0}};
    const auto picked = select_frames(scores, RecallConfig{10.0, 3});
    CHECK(picked == std::vector<std::size_t>{0, 1, 2});
    const auto two = select_frames(scores, RecallConfig{10.0, 2});
    CHECK(two == std::vector<std::size_t>{0, 1});
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<float>> s{oracle::random_vec(rng, 30, 3.0f), oracle::random_vec(rng, 30, 3.0f)};
        const auto capped = select_frames(s, RecallConfig{2.0, 4});
        CHECK(capped.size() <= 4);
        CHECK(std::is_sorted(capped.begin(), capped.end()));
    }
}

TEST_CASE("recall config validation") {
    CHECK_THROWS_AS(RecallConfig({-1.0, 3}).validate(), ConfigError);
    CHECK_THROWS_AS(RecallConfig({1.0, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(RecallConfig({std::nan(""), 3}).validate(), ConfigError);
}

TEST_CASE("recall fetches the selection in temporal order") {
    std::mt19937_64 rng(6);
    const ModelConfig c = recall_config();
    const auto w = init_weights(c);
    oracle::TempDir dir("rec");
    TieredKvStore store(c, dir.path());
    prefill_all(store, oracle::random_clips(rng, c, 3, 2), w, 5);

    SUBCASE("empty selection") {
        Selection sel;
        sel.layers.assign(c.n_layers, {});
        const RecallResult r = recall(store, sel);
        CHECK(r.total_entries() == 0);
        // Answering degenerates to question-only attention.
        const TokenBlock q = oracle::random_block(rng, 1, c.d_model, 500);
        const auto out = answer_attention(r, q, w);
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const QkvProjection p = project_qkv(q, l, w);
            for (std::size_t h = 0; h < c.n_heads; ++h) {
                for (std::size_t d = 0; d < c.d_head; ++d) {
                    CHECK(std::abs(out[l].at(0, h)[d] - p.v.at(0, c.kv_head_of(h))[d]) < 1e-6);
                }
            }
        }
    }
    SUBCASE("selecting everything returns the full store") {
        Selection sel;
        for (std::size_t l = 0; l < c.n_layers; ++l) sel.layers.push_back(store.frame_ids());
        const RecallResult r = recall(store, sel);
        for (std::size_t l = 0; l < c.n_layers; ++l) CHECK(r.layers[l].kv == store.fetch_all(l));
    }
    SUBCASE("selection spanning tiers comes back position sorted") {
        store.maybe_offload(TierPolicy{2 * 2 * c.tokens_per_frame * c.n_layers * entry_bytes(c)});
        Selection sel;
        sel.layers = {{4, 0, 2}, {5, 1}};
        const RecallResult r = recall(store, sel);
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const LayerKv all = store.fetch_all(l);
            LayerKv expect(c.kv_width());
            const std::set<std::uint64_t> want(sel.layers[l].begin(), sel.layers[l].end());
            for (std::size_t i = 0; i < all.size(); ++i) {
                if (want.count(all.frame_ids[i])) expect.push(all.positions[i], all.frame_ids[i], all.key(i), all.value(i));
            }
            CHECK(r.layers[l].kv == expect);
        }
    }
    SUBCASE("question positions must follow the recalled context") {
        Selection sel;
        for (std::size_t l = 0; l < c.n_layers; ++l) sel.layers.push_back(store.frame_ids());
        const RecallResult r = recall(store, sel);
        CHECK_THROWS_AS(answer_attention(r, oracle::random_block(rng, 1, c.d_model, 3), w), OrderingError);
        CHECK_THROWS_AS(answer_attention(r, TokenBlock(c.d_model), w), UsageError);
    }
}

TEST_CASE("answering with every frame recalled equals full-cache attention") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelConfig c = oracle::random_config(rng, 3, 48);
        const auto w = init_weights(c);
        oracle::TempDir dir("exh");
        TieredKvStore store(c, dir.path());
        const auto clips = oracle::random_clips(rng, c, 1 + rng() % 4, 1 + rng() % 3);
        prefill_all(store, clips, w, 1 + rng() % 7);
        if (trial % 2) store.maybe_offload(TierPolicy{0});
        const std::int64_t qpos = *store.last_position() + 1;
        const TokenBlock q = oracle::random_block(rng, 1 + rng() % 3, c.d_model, qpos);
        const RecallResult r = recall(store, query_descriptor(q, w), RecallConfig{1e9, 100000});
        const auto out = answer_attention(r, q, w);

        std::vector<TokenBlock> parts;
        for (const Clip& cl : clips) parts.push_back(cl.tokens());
        parts.push_back(q);
        const TokenBlock full = oracle::concat(parts, c.d_model);
        const auto proj = oracle::project_stream(full, w);
        const auto pos = oracle::positions_of(full);
        const std::size_t offset = full.size() - q.size();
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const std::vector<double> qrows(proj[l].q.begin() + static_cast<std::ptrdiff_t>(offset * c.q_width()),
                                            proj[l].q.end());
            const std::vector<std::int64_t> qp(pos.begin() + static_cast<std::ptrdiff_t>(offset), pos.end());
            const auto ref =
                oracle::attention(qrows, qp, proj[l].k, proj[l].v, pos, c.n_heads, c.n_kv_heads, c.d_head, true);
            CHECK(oracle::max_abs_diff(out[l].data, ref) <= 1e-5);
        }
    }
}

TEST_CASE("dropped frames carry at most exp(-alpha) of the top token weight") {
    std::mt19937_64 rng(8);
    std::size_t dropped_checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const ModelConfig c = recall_config();
        const auto w = init_weights(c);
        oracle::TempDir dir("drop");
        TieredKvStore store(c, dir.path());
        // Identical tokens inside each frame make every token key equal its
        // frame's mean key, and a one-token question makes q equal q_mean.
        const auto clips = oracle::repeated_token_clips(rng, c, 6, 4, 6.0f);
        prefill_all(store, clips, w, 5);
        const double alpha = 0.5 + (rng() % 4);
        const TokenBlock q = oracle::random_block(rng, 1, c.d_model, *store.last_position() + 1);
        const QueryDescriptor qd = query_descriptor(q, w);
        std::vector<LayerRecall> details;
        const Selection sel = select_layers(store, qd, RecallConfig{alpha, 1000}, &details);

        std::vector<TokenBlock> parts;
        for (const Clip& cl : clips) parts.push_back(cl.tokens());
        parts.push_back(q);
        const TokenBlock full = oracle::concat(parts, c.d_model);
        const auto proj = oracle::project_stream(full, w);
        const std::size_t n = full.size();
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            const std::set<std::uint64_t> kept(sel.layers[l].begin(), sel.layers[l].end());
            const LayerKv all = store.fetch_all(l);
            for (std::size_t h = 0; h < c.n_heads; ++h) {
                const std::size_t g = c.kv_head_of(h);
                std::vector<double> logits(n);
                for (std::size_t j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (std::size_t d = 0; d < c.d_head; ++d) {
                        dot += proj[l].q[(n - 1) * c.q_width() + h * c.d_head + d] * proj[l].k[j * c.kv_width() + g * c.d_head + d];
                    }
                    logits[j] = dot / std::sqrt(static_cast<double>(c.d_head));
                }
                const double mx = *std::max_element(logits.begin(), logits.end());
                double z = 0.0;
                for (double x : logits) z += std::exp(x - mx);
                double top = 0.0;
                for (double x : logits) top = std::max(top, std::exp(x - mx) / z);
                for (std::size_t j = 0; j + 1 < n; ++j) {
                    if (kept.count(all.frame_ids[j])) continue;
                    const double wj = std::exp(logits[j] - mx) / z;
                    CHECK(wj <= std::exp(-alpha) * top * (1.0 + 1e-5));
                    ++dropped_checked;
                }
            }
        }
    }
    CHECK(dropped_checked > 0);
}

TEST_CASE("layers can recall different numbers of frames") {
    ModelConfig c;
    c.n_layers = 2;
    c.n_heads = 1;
    c.n_kv_heads = 1;
    c.d_head = 2;
    c.d_model = 2;
    c.tokens_per_frame = 1;
    oracle::TempDir dir("adapt");
    TieredKvStore store(c, dir.path());
    // Layer 0: one frame stands out. Layer 1: all frames score alike.
    const std::vector<std::vector<float>> keys0{{10, 0}, {0, 0}, {0, 0}};
    const std::vector<std::vector<float>> keys1{{1, 0}, {1, 0}, {1, 0}};
    store.begin_clip(1);
    for (std::uint64_t f = 0; f < 3; ++f) {
        const std::vector<std::int64_t> pos{static_cast<std::int64_t>(f)};
        store.append_kv(0, f, pos, keys0[f], keys0[f]);
        store.append_kv(1, f, pos, keys1[f], keys1[f]);
    }
    store.commit_clip();
    QueryDescriptor qd;
    qd.n_heads = 1;
    qd.d_head = 2;
    qd.layers = {{1, 0}, {1, 0}};
    const Selection sel = select_layers(store, qd, RecallConfig{3.0, 256});
    CHECK(sel.layers[0].size() == 1);
    CHECK(sel.layers[1].size() == 3);
}

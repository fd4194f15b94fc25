// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "streamkv/accounting.hpp"
#include "streamkv/error.hpp"

using namespace streamkv;
using namespace streamkv::accounting;

TEST_CASE("one hour of 1 FPS video on a 7B geometry") {
    const AccountingInput in = qwen7b_one_hour();
    CHECK(in.seq_len == 921600);
    CHECK(attention_activation_bytes(in) == 15'099'494'400ULL);
    CHECK(mlp_activation_bytes(in) == 94'371'840'000ULL);
    CHECK(kv_cache_bytes(in) == 52'862'910'464ULL);
    CHECK(chunk_reduction_factor(in.seq_len, 4096) == 225);
    AccountingInput c = in;
    c.chunk_size = 4096;
    CHECK(mlp_activation_bytes(chunked(c)) == 419'430'400ULL);
    CHECK(mlp_activation_bytes(in) / 225 == 419'430'400ULL);

    // The published rounded figures are binary gigabytes.
    CHECK(std::round(to_gib(attention_activation_bytes(in)) * 10) / 10 == doctest::Approx(14.1));
    CHECK(std::round(to_gib(mlp_activation_bytes(in)) * 10) / 10 == doctest::Approx(87.9));
    CHECK(std::round(to_gib(kv_cache_bytes(in)) * 10) / 10 == doctest::Approx(49.2));
    CHECK(std::round(to_gib(419'430'400ULL) * 10) / 10 == doctest::Approx(0.4));
    CHECK(to_gb(1'000'000'000ULL) == 1.0);
}

TEST_CASE("zero sizes give zero bytes") {
    AccountingInput in = qwen7b_one_hour();
    in.seq_len = 0;
    CHECK(attention_activation_bytes(in) == 0);
    CHECK(mlp_activation_bytes(in) == 0);
    in = qwen7b_one_hour();
    in.d_model = 0;
    in.d_ff = 0;
    CHECK(mlp_activation_bytes(in) == 0);
    in.visual_tokens = 0;
    in.text_tokens = 0;
    CHECK(kv_cache_bytes(in) == 0);
}

TEST_CASE("attention bytes shrink exactly with the chunk") {
    AccountingInput in = qwen7b_one_hour();
    const std::uint64_t full = attention_activation_bytes(in);
    in.seq_len /= 225;
    CHECK(attention_activation_bytes(in) * 225 == full);
    CHECK(attention_activation_bytes(in) == 67'108'864ULL);
}

TEST_CASE("calculators are exactly linear") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        AccountingInput in;
        in.batch = 1 + rng() % 8;
        in.seq_len = rng() % 100000;
        in.d_model = rng() % 8192;
        in.d_ff = rng() % 30000;
        in.n_heads = 1 + rng() % 64;
        in.n_kv_heads = 1 + rng() % 16;
        in.d_head = 1 + rng() % 256;
        in.n_layers = 1 + rng() % 80;
        in.visual_tokens = rng() % 100000;
        in.text_tokens = rng() % 1000;

        AccountingInput s2 = in;
        s2.seq_len *= 2;
        CHECK(attention_activation_bytes(s2) == 2 * attention_activation_bytes(in));
        CHECK(mlp_activation_bytes(s2) == 2 * mlp_activation_bytes(in));
        AccountingInput b2 = in;
        b2.batch *= 2;
        CHECK(attention_activation_bytes(b2) == 2 * attention_activation_bytes(in));
        CHECK(mlp_activation_bytes(b2) == 2 * mlp_activation_bytes(in));
        AccountingInput l2 = in;
        l2.n_layers *= 2;
        CHECK(kv_cache_bytes(l2) == 2 * kv_cache_bytes(in));
        AccountingInput t2 = in;
        t2.visual_tokens *= 2;
        t2.text_tokens *= 2;
        CHECK(kv_cache_bytes(t2) == 2 * kv_cache_bytes(in));

        // Independent recomputation in 128-bit.
        using u128 = unsigned __int128;
        const u128 attn = (u128(2) * in.batch * in.seq_len * in.n_heads * in.d_head +
                           u128(2) * in.batch * in.seq_len * in.n_kv_heads * in.d_head) * 2;
        CHECK(static_cast<std::uint64_t>(attn) == attention_activation_bytes(in));
    }
}

TEST_CASE("chunk reduction factor") {
    CHECK(chunk_reduction_factor(921600, 4096) == 225);
    CHECK(chunk_reduction_factor(10, 3) == 4);
    CHECK(chunk_reduction_factor(7, 7) == 1);
    CHECK(chunk_reduction_factor(3, 4096) == 1);
    CHECK_THROWS_AS(chunk_reduction_factor(10, 0), UsageError);
    AccountingInput in = qwen7b_one_hour();
    in.chunk_size = 0;
    CHECK_THROWS_AS(chunked(in), UsageError);
    in.chunk_size = 1'000'000;
    CHECK(chunked(in).seq_len == 921600);
}

TEST_CASE("overflow is reported, not wrapped") {
    AccountingInput in = qwen7b_one_hour();
    in.seq_len = std::numeric_limits<std::uint64_t>::max() / 4;
    CHECK_THROWS_AS(attention_activation_bytes(in), UsageError);
    CHECK_THROWS_AS(mlp_activation_bytes(in), UsageError);
}

TEST_CASE("presets") {
    CHECK(preset("qwen7b-1h").n_layers == 28);
    CHECK_THROWS_AS(preset("nope"), UsageError);
}

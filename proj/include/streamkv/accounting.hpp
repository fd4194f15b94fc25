// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form memory calculators for half-precision inference. All results
// are exact byte counts in unsigned 64-bit integers; operations that would
// overflow throw UsageError instead of wrapping.

#include <cstdint>
#include <string>

namespace streamkv::accounting {

struct AccountingInput {
    std::uint64_t batch = 1;             // B
    std::uint64_t seq_len = 0;           // S
    std::uint64_t d_model = 0;
    std::uint64_t d_ff = 0;
    std::uint64_t n_heads = 0;           // n_h
    std::uint64_t n_kv_heads = 0;        // n_kv
    std::uint64_t d_head = 0;
    std::uint64_t n_layers = 0;          // L
    std::uint64_t visual_tokens = 0;     // |V|
    std::uint64_t text_tokens = 0;       // |Q|
    std::uint64_t chunk_size = 0;
    std::uint64_t bytes_per_scalar = 2;  // fixed at half precision
};

// (2*B*S*n_h*d_head + 2*B*S*n_kv*d_head) * 2
std::uint64_t attention_activation_bytes(const AccountingInput& in);

// B*S*(2*d_model + 3*d_ff) * 2
std::uint64_t mlp_activation_bytes(const AccountingInput& in);

// 2 * L * (|V| + |Q|) * n_kv * d_head * 2
std::uint64_t kv_cache_bytes(const AccountingInput& in);

// ceil(S / chunk_size); chunk_size 0 is a UsageError.
std::uint64_t chunk_reduction_factor(std::uint64_t seq_len, std::uint64_t chunk_size);

// Copy of `in` with the sequence length cut to one chunk (min(S, chunk_size)),
// i.e. the per-step input of chunked prefill.
AccountingInput chunked(const AccountingInput& in);

// Geometry of a 7B-class model streaming one hour of 1 FPS video.
AccountingInput qwen7b_one_hour();

// Known preset names map to inputs; unknown names throw UsageError.
AccountingInput preset(const std::string& name);

double to_gb(std::uint64_t bytes);   // 1e9
double to_gib(std::uint64_t bytes);  // 2^30

}  // namespace streamkv::accounting

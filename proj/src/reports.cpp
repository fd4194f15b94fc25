// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/reports.hpp"

namespace streamkv {

using nlohmann::json;

namespace {

json sizes(std::uint64_t attention, std::uint64_t mlp, std::uint64_t kv, double (*unit)(std::uint64_t)) {
    json j{{"attention_activation", unit(attention)}, {"mlp_activation", unit(mlp)}};
    if (kv) j["kv_cache"] = unit(kv);
    return j;
}

}  // namespace

json mem_report(const accounting::AccountingInput& in) {
    using namespace accounting;
    const std::uint64_t attention = attention_activation_bytes(in);
    const std::uint64_t mlp = mlp_activation_bytes(in);
    const std::uint64_t kv = kv_cache_bytes(in);
    const AccountingInput chunk_in = chunked(in);
    const std::uint64_t chunk_attention = attention_activation_bytes(chunk_in);
    const std::uint64_t chunk_mlp = mlp_activation_bytes(chunk_in);
    json j;
    j["input"] = {{"batch", in.batch},
                  {"seq_len", in.seq_len},
                  {"d_model", in.d_model},
                  {"d_ff", in.d_ff},
                  {"n_heads", in.n_heads},
                  {"n_kv_heads", in.n_kv_heads},
                  {"d_head", in.d_head},
                  {"n_layers", in.n_layers},
                  {"visual_tokens", in.visual_tokens},
                  {"text_tokens", in.text_tokens},
                  {"chunk_size", in.chunk_size},
                  {"bytes_per_scalar", in.bytes_per_scalar}};
    j["attention_activation_bytes"] = attention;
    j["mlp_activation_bytes"] = mlp;
    j["kv_cache_bytes"] = kv;
    j["chunk_reduction_factor"] = chunk_reduction_factor(in.seq_len, in.chunk_size);
    j["chunked"] = {{"seq_len", chunk_in.seq_len},
                    {"attention_activation_bytes", chunk_attention},
                    {"mlp_activation_bytes", chunk_mlp}};
    j["gb"] = sizes(attention, mlp, kv, &to_gb);
    j["gib"] = sizes(attention, mlp, kv, &to_gib);
    j["chunked"]["gb"] = sizes(chunk_attention, chunk_mlp, 0, &to_gb);
    j["chunked"]["gib"] = sizes(chunk_attention, chunk_mlp, 0, &to_gib);
    return j;
}

json usage_json(const UsageReport& u) {
    return {{"hot_entries", u.hot_entries}, {"cold_entries", u.cold_entries}, {"hot_bytes", u.hot_bytes},
            {"cold_bytes", u.cold_bytes},   {"hot_clips", u.hot_clips},       {"cold_clips", u.cold_clips},
            {"frames", u.frames}};
}

json recall_json(const RecallResult& result) {
    json layers = json::array();
    for (std::size_t l = 0; l < result.layers.size(); ++l) {
        const LayerRecall& lr = result.layers[l];
        layers.push_back({{"layer", l},
                          {"candidates", lr.candidate_ids.size()},
                          {"selected_frames", lr.frame_ids},
                          {"recalled_entries", lr.kv.size()}});
    }
    return {{"layers", layers}, {"total_entries", result.total_entries()}};
}

}  // namespace streamkv

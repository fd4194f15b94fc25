// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Cold-tier clip file ("SKVC", version 1). All integers and floats are
// little-endian regardless of host:
//
//   "SKVC"  u16 version
//   u32 layer_count  u32 n_kv_heads  u32 d_head  u32 entry_count
//   entry_count x {
//     u64 position  u64 frame_id
//     f32 keys  [layer][kv_head][d_head]
//     f32 values[layer][kv_head][d_head]
//   }

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace streamkv {

inline constexpr char kColdMagic[4] = {'S', 'K', 'V', 'C'};
inline constexpr std::uint16_t kColdVersion = 1;

struct ColdClip {
    std::uint32_t layer_count = 0;
    std::uint32_t n_kv_heads = 0;
    std::uint32_t d_head = 0;
    std::vector<std::uint64_t> positions;
    std::vector<std::uint64_t> frame_ids;
    // [entry][layer][kv_head][d_head]
    std::vector<float> keys;
    std::vector<float> values;

    std::size_t entry_count() const { return positions.size(); }
    std::size_t entry_width() const { return static_cast<std::size_t>(layer_count) * n_kv_heads * d_head; }

    bool operator==(const ColdClip&) const = default;
};

std::vector<std::byte> encode_cold_clip(const ColdClip& clip);

// Throws StorageError on bad magic, unsupported version or truncation.
ColdClip decode_cold_clip(std::span<const std::byte> bytes);

std::string cold_file_name(std::uint64_t clip_id);

// Writes through a temporary file and renames it into place, so a failed write
// never leaves a partial clip file behind. Throws StorageError.
void write_cold_file(const std::filesystem::path& path, const ColdClip& clip);
ColdClip read_cold_file(const std::filesystem::path& path);

}  // namespace streamkv

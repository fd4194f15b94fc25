// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Two-tier KV store. The hot tier keeps whole clips in process memory; the
// cold tier keeps offloaded clips as one SKVC file per clip. The per-frame
// index (mean key per layer and kv head) always stays in memory, so relevance
// scoring never touches cold storage.
//
// Threading: one writer (clip registration, offload) and any number of
// readers. Readers see whole clips only: a clip becomes visible at
// commit_clip(), and an offload flips a clip's tier atomically.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "streamkv/cold_file.hpp"
#include "streamkv/model.hpp"
#include "streamkv/rw_mutex.hpp"

namespace streamkv {

enum class Tier { kHot, kCold };

const char* to_string(Tier tier);

// Key/value entries of one layer, laid out [entry][kv_head][d_head].
struct LayerKv {
    std::size_t width = 0;  // n_kv_heads * d_head
    std::vector<std::int64_t> positions;
    std::vector<std::uint64_t> frame_ids;
    std::vector<float> keys;
    std::vector<float> values;

    LayerKv() = default;
    explicit LayerKv(std::size_t w) : width(w) {}

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    std::span<const float> key(std::size_t i) const { return std::span<const float>(keys).subspan(i * width, width); }
    std::span<const float> value(std::size_t i) const {
        return std::span<const float>(values).subspan(i * width, width);
    }

    void push(std::int64_t position, std::uint64_t frame_id, std::span<const float> key, std::span<const float> value);
    void append(const LayerKv& other);

    // Keys/values as HeadTensors for the reference attention kernel.
    HeadTensor key_tensor(std::size_t n_kv_heads) const;
    HeadTensor value_tensor(std::size_t n_kv_heads) const;

    bool operator==(const LayerKv&) const = default;
};

// Snapshot of one frame's index record for one layer.
struct FrameDescriptor {
    std::uint64_t frame_id = 0;
    std::uint64_t clip_id = 0;
    std::int64_t first_position = 0;
    std::int64_t end_position = 0;  // exclusive
    Tier tier = Tier::kHot;
    std::vector<float> mean_key;  // [kv_head][d_head]
};

struct TierPolicy {
    std::uint64_t hot_budget_bytes = std::numeric_limits<std::uint64_t>::max();
};

struct OffloadReport {
    std::vector<std::uint64_t> clips_moved;
    std::uint64_t bytes_moved = 0;
    std::uint64_t hot_bytes_after = 0;
};

struct UsageReport {
    std::uint64_t hot_entries = 0;  // (layer, position) pairs
    std::uint64_t cold_entries = 0;
    std::uint64_t hot_bytes = 0;
    std::uint64_t cold_bytes = 0;
    std::uint64_t hot_clips = 0;
    std::uint64_t cold_clips = 0;
    std::uint64_t frames = 0;

    bool operator==(const UsageReport&) const = default;
};

// Bytes for one (layer, position) entry: keys and values, 32-bit scalars.
std::uint64_t entry_bytes(const ModelConfig& config);

class TieredKvStore {
public:
    TieredKvStore(ModelConfig config, std::filesystem::path cold_dir);

    TieredKvStore(const TieredKvStore&) = delete;
    TieredKvStore& operator=(const TieredKvStore&) = delete;

    const ModelConfig& config() const { return config_; }
    const std::filesystem::path& cold_dir() const { return cold_dir_; }

    // Writer side. A clip is staged with begin_clip/append_kv and published by
    // commit_clip. clip_id must exceed every committed clip id.
    void begin_clip(std::uint64_t clip_id);
    // Appends entries of one frame to one layer of the staged clip. keys and
    // values hold positions.size() * n_kv_heads * d_head floats. Positions
    // must continue the layer's sequence; frame ids must not go backwards.
    void append_kv(std::size_t layer, std::uint64_t frame_id, std::span<const std::int64_t> positions,
                   std::span<const float> keys, std::span<const float> values);
    // Throws ShapeError when the staged layers disagree on positions.
    void commit_clip();
    void abort_clip();
    bool staging() const;

    // Moves the oldest hot clips to the cold tier until hot usage fits the
    // budget or nothing hot remains. On a write failure the failing clip stays
    // hot and StorageError propagates.
    OffloadReport maybe_offload(const TierPolicy& policy);

    // Entries of the given frames in position order, from either tier.
    // Unknown frame ids throw LookupError.
    LayerKv fetch(std::size_t layer, std::span<const std::uint64_t> frame_ids) const;
    LayerKv fetch_all(std::size_t layer) const;

    // Frame index of one layer in temporal order; never reads cold storage.
    std::vector<FrameDescriptor> frame_index(std::size_t layer) const;
    std::vector<std::uint64_t> frame_ids() const;

    // Streams every committed entry of a layer in position order.
    void visit_layer(std::size_t layer,
                     const std::function<void(std::int64_t, std::span<const float>, std::span<const float>)>& fn) const;

    UsageReport usage_report() const;
    std::size_t cold_reads() const { return cold_reads_.load(); }
    std::size_t clip_count() const;
    std::optional<std::uint64_t> last_clip_id() const;
    std::optional<std::int64_t> last_position() const;
    std::uint64_t total_appended_entries() const { return appended_entries_.load(); }

private:
    struct FrameRecord {
        std::uint64_t frame_id = 0;
        std::uint64_t clip_id = 0;
        std::int64_t first_position = 0;
        std::int64_t end_position = 0;
        // Per layer: running mean key and the count it averages.
        std::vector<std::vector<float>> mean_key;
        std::vector<std::size_t> count;
    };

    struct ClipRecord {
        std::uint64_t clip_id = 0;
        Tier tier = Tier::kHot;
        std::size_t entries_per_layer = 0;
        std::vector<std::uint64_t> frames;
        std::vector<LayerKv> layers;  // empty once cold
        std::filesystem::path cold_path;
    };

    ColdClip to_cold(const ClipRecord& clip) const;
    LayerKv layer_from_cold(const ClipRecord& clip, std::size_t layer) const;
    const ClipRecord& clip_of(std::uint64_t clip_id) const;
    void check_layer(std::size_t layer) const;

    ModelConfig config_;
    std::filesystem::path cold_dir_;

    mutable RwMutex mu_;
    std::vector<ClipRecord> clips_;
    std::map<std::uint64_t, FrameRecord> frames_;

    // Staging area, touched only by the writer.
    std::optional<ClipRecord> staged_;
    std::map<std::uint64_t, FrameRecord> staged_frames_;

    mutable std::atomic<std::size_t> cold_reads_{0};
    std::atomic<std::uint64_t> appended_entries_{0};
};

}  // namespace streamkv

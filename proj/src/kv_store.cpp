// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/kv_store.hpp"

#include <algorithm>
#include <mutex>
#include <shared_mutex>
#include <set>
#include <string>
#include <system_error>

#include "streamkv/error.hpp"

namespace streamkv {

const char* to_string(Tier tier) { return tier == Tier::kHot ? "hot" : "cold"; }

void LayerKv::push(std::int64_t position, std::uint64_t frame_id, std::span<const float> key,
                   std::span<const float> value) {
    if (key.size() != width || value.size() != width) throw ShapeError("layer kv: entry width mismatch");
    positions.push_back(position);
    frame_ids.push_back(frame_id);
    keys.insert(keys.end(), key.begin(), key.end());
    values.insert(values.end(), value.begin(), value.end());
}

void LayerKv::append(const LayerKv& other) {
    if (other.empty()) return;
    if (width != other.width) throw ShapeError("layer kv: width mismatch on append");
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());
    frame_ids.insert(frame_ids.end(), other.frame_ids.begin(), other.frame_ids.end());
    keys.insert(keys.end(), other.keys.begin(), other.keys.end());
    values.insert(values.end(), other.values.begin(), other.values.end());
}

HeadTensor LayerKv::key_tensor(std::size_t n_kv_heads) const {
    HeadTensor t(size(), n_kv_heads, n_kv_heads ? width / n_kv_heads : 0);
    t.data = keys;
    return t;
}

HeadTensor LayerKv::value_tensor(std::size_t n_kv_heads) const {
    HeadTensor t(size(), n_kv_heads, n_kv_heads ? width / n_kv_heads : 0);
    t.data = values;
    return t;
}

std::uint64_t entry_bytes(const ModelConfig& config) {
    return static_cast<std::uint64_t>(config.n_kv_heads) * config.d_head * 2u * sizeof(float);
}

TieredKvStore::TieredKvStore(ModelConfig config, std::filesystem::path cold_dir)
    : config_(config), cold_dir_(std::move(cold_dir)) {
    config_.validate();
}

void TieredKvStore::check_layer(std::size_t layer) const {
    if (layer >= config_.n_layers) throw ShapeError("kv store: layer " + std::to_string(layer) + " out of range");
}

bool TieredKvStore::staging() const { return staged_.has_value(); }

void TieredKvStore::begin_clip(std::uint64_t clip_id) {
    if (staged_) throw OrderingError("kv store: a clip is already staged");
    if (auto last = last_clip_id(); last && clip_id <= *last) {
        throw OrderingError("kv store: clip " + std::to_string(clip_id) + " is not newer than clip " +
                            std::to_string(*last));
    }
    ClipRecord rec;
    rec.clip_id = clip_id;
    rec.layers.assign(config_.n_layers, LayerKv(config_.kv_width()));
    staged_ = std::move(rec);
    staged_frames_.clear();
}

void TieredKvStore::append_kv(std::size_t layer, std::uint64_t frame_id, std::span<const std::int64_t> positions,
                              std::span<const float> keys, std::span<const float> values) {
    if (!staged_) throw OrderingError("kv store: append_kv without begin_clip");
    check_layer(layer);
    const std::size_t width = config_.kv_width();
    if (keys.size() != positions.size() * width || values.size() != positions.size() * width) {
        throw ShapeError("kv store: keys/values must hold n_kv_heads * d_head floats per position");
    }
    if (positions.empty()) return;

    LayerKv& lkv = staged_->layers[layer];
    std::optional<std::int64_t> last;
    if (!lkv.empty()) {
        last = lkv.positions.back();
    } else {
        last = last_position();
    }
    for (std::int64_t p : positions) {
        if (last && p <= *last) throw OrderingError("kv store: positions must increase monotonically");
        last = p;
    }
    if (!lkv.empty() && frame_id < lkv.frame_ids.back()) throw OrderingError("kv store: frame ids went backwards");
    {
        std::shared_lock lock(mu_);
        if (frames_.count(frame_id)) {
            throw OrderingError("kv store: frame " + std::to_string(frame_id) + " belongs to a committed clip");
        }
    }

    auto [it, inserted] = staged_frames_.try_emplace(frame_id);
    FrameRecord& fr = it->second;
    if (inserted) {
        fr.frame_id = frame_id;
        fr.clip_id = staged_->clip_id;
        fr.first_position = positions.front();
        fr.end_position = positions.back() + 1;
        fr.mean_key.assign(config_.n_layers, std::vector<float>(width, 0.0f));
        fr.count.assign(config_.n_layers, 0);
        staged_->frames.push_back(frame_id);
    }
    fr.first_position = std::min(fr.first_position, positions.front());
    fr.end_position = std::max(fr.end_position, positions.back() + 1);

    std::vector<float>& mean = fr.mean_key[layer];
    std::size_t& n = fr.count[layer];
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto k = keys.subspan(i * width, width);
        lkv.push(positions[i], frame_id, k, values.subspan(i * width, width));
        ++n;
        const float inv = 1.0f / static_cast<float>(n);
        for (std::size_t d = 0; d < width; ++d) mean[d] += (k[d] - mean[d]) * inv;
    }
}

void TieredKvStore::commit_clip() {
    if (!staged_) throw OrderingError("kv store: commit_clip without begin_clip");
    ClipRecord& rec = *staged_;
    const std::size_t n = rec.layers.front().size();
    for (const LayerKv& l : rec.layers) {
        if (l.positions != rec.layers.front().positions) {
            throw ShapeError("kv store: staged layers disagree on positions");
        }
    }
    if (n == 0) {
        abort_clip();
        return;
    }
    rec.entries_per_layer = n;
    {
        std::unique_lock lock(mu_);
        clips_.push_back(std::move(rec));
        frames_.merge(staged_frames_);
    }
    appended_entries_.fetch_add(static_cast<std::uint64_t>(n) * config_.n_layers);
    staged_.reset();
    staged_frames_.clear();
}

void TieredKvStore::abort_clip() {
    staged_.reset();
    staged_frames_.clear();
}

ColdClip TieredKvStore::to_cold(const ClipRecord& clip) const {
    ColdClip cold;
    cold.layer_count = static_cast<std::uint32_t>(config_.n_layers);
    cold.n_kv_heads = static_cast<std::uint32_t>(config_.n_kv_heads);
    cold.d_head = static_cast<std::uint32_t>(config_.d_head);
    const std::size_t n = clip.entries_per_layer;
    const std::size_t width = config_.kv_width();
    const LayerKv& first = clip.layers.front();
    cold.positions.reserve(n);
    cold.keys.reserve(n * width * config_.n_layers);
    cold.values.reserve(n * width * config_.n_layers);
    for (std::size_t e = 0; e < n; ++e) {
        cold.positions.push_back(static_cast<std::uint64_t>(first.positions[e]));
        cold.frame_ids.push_back(first.frame_ids[e]);
        for (const LayerKv& l : clip.layers) {
            const auto k = l.key(e);
            cold.keys.insert(cold.keys.end(), k.begin(), k.end());
        }
        for (const LayerKv& l : clip.layers) {
            const auto v = l.value(e);
            cold.values.insert(cold.values.end(), v.begin(), v.end());
        }
    }
    return cold;
}

LayerKv TieredKvStore::layer_from_cold(const ClipRecord& clip, std::size_t layer) const {
    cold_reads_.fetch_add(1);
    const ColdClip cold = read_cold_file(clip.cold_path);
    if (cold.layer_count != config_.n_layers || cold.n_kv_heads != config_.n_kv_heads ||
        cold.d_head != config_.d_head) {
        throw StorageError("kv store: cold file geometry does not match the store: " + clip.cold_path.string());
    }
    const std::size_t width = config_.kv_width();
    const std::size_t stride = cold.entry_width();
    LayerKv out(width);
    for (std::size_t e = 0; e < cold.entry_count(); ++e) {
        const std::size_t off = e * stride + layer * width;
        out.push(static_cast<std::int64_t>(cold.positions[e]), cold.frame_ids[e],
                 std::span<const float>(cold.keys).subspan(off, width),
                 std::span<const float>(cold.values).subspan(off, width));
    }
    return out;
}

OffloadReport TieredKvStore::maybe_offload(const TierPolicy& policy) {
    OffloadReport report;
    const std::uint64_t per_clip_entry = entry_bytes(config_) * config_.n_layers;
    for (;;) {
        std::size_t victim = clips_.size();
        std::uint64_t hot = 0;
        {
            std::shared_lock lock(mu_);
            for (std::size_t i = 0; i < clips_.size(); ++i) {
                if (clips_[i].tier != Tier::kHot) continue;
                hot += clips_[i].entries_per_layer * per_clip_entry;
                if (victim == clips_.size()) victim = i;
            }
        }
        report.hot_bytes_after = hot;
        if (hot <= policy.hot_budget_bytes || victim == clips_.size()) break;

        // Only the writer mutates clips_, so the victim cannot change under us.
        ColdClip cold;
        std::filesystem::path path;
        {
            std::shared_lock lock(mu_);
            cold = to_cold(clips_[victim]);
            path = cold_dir_ / cold_file_name(clips_[victim].clip_id);
        }
        std::error_code ec;
        std::filesystem::create_directories(cold_dir_, ec);
        if (ec) throw StorageError("kv store: cannot create cold dir " + cold_dir_.string() + ": " + ec.message());
        write_cold_file(path, cold);

        const std::uint64_t moved = clips_[victim].entries_per_layer * per_clip_entry;
        {
            std::unique_lock lock(mu_);
            ClipRecord& rec = clips_[victim];
            rec.tier = Tier::kCold;
            rec.cold_path = path;
            rec.layers.clear();
            rec.layers.shrink_to_fit();
            report.clips_moved.push_back(rec.clip_id);
        }
        report.bytes_moved += moved;
    }
    return report;
}

const TieredKvStore::ClipRecord& TieredKvStore::clip_of(std::uint64_t clip_id) const {
    auto it = std::lower_bound(clips_.begin(), clips_.end(), clip_id,
                               [](const ClipRecord& c, std::uint64_t id) { return c.clip_id < id; });
    if (it == clips_.end() || it->clip_id != clip_id) throw LookupError("kv store: unknown clip " + std::to_string(clip_id));
    return *it;
}

LayerKv TieredKvStore::fetch(std::size_t layer, std::span<const std::uint64_t> frame_ids) const {
    check_layer(layer);
    std::shared_lock lock(mu_);
    const std::set<std::uint64_t> wanted(frame_ids.begin(), frame_ids.end());
    std::set<std::uint64_t> clip_ids;
    for (std::uint64_t f : wanted) {
        auto it = frames_.find(f);
        if (it == frames_.end()) throw LookupError("kv store: unknown frame " + std::to_string(f));
        clip_ids.insert(it->second.clip_id);
    }
    LayerKv out(config_.kv_width());
    for (std::uint64_t cid : clip_ids) {
        const ClipRecord& clip = clip_of(cid);
        LayerKv cold_copy;
        const LayerKv* src = nullptr;
        if (clip.tier == Tier::kHot) {
            src = &clip.layers[layer];
        } else {
            cold_copy = layer_from_cold(clip, layer);
            src = &cold_copy;
        }
        for (std::size_t e = 0; e < src->size(); ++e) {
            if (wanted.count(src->frame_ids[e])) out.push(src->positions[e], src->frame_ids[e], src->key(e), src->value(e));
        }
    }
    return out;
}

LayerKv TieredKvStore::fetch_all(std::size_t layer) const {
    check_layer(layer);
    LayerKv out(config_.kv_width());
    std::shared_lock lock(mu_);
    for (const ClipRecord& clip : clips_) {
        if (clip.tier == Tier::kHot) {
            out.append(clip.layers[layer]);
        } else {
            out.append(layer_from_cold(clip, layer));
        }
    }
    return out;
}

void TieredKvStore::visit_layer(
    std::size_t layer, const std::function<void(std::int64_t, std::span<const float>, std::span<const float>)>& fn) const {
    check_layer(layer);
    std::shared_lock lock(mu_);
    for (const ClipRecord& clip : clips_) {
        LayerKv cold_copy;
        const LayerKv* src = &cold_copy;
        if (clip.tier == Tier::kHot) {
            src = &clip.layers[layer];
        } else {
            cold_copy = layer_from_cold(clip, layer);
        }
        for (std::size_t e = 0; e < src->size(); ++e) fn(src->positions[e], src->key(e), src->value(e));
    }
}

std::vector<FrameDescriptor> TieredKvStore::frame_index(std::size_t layer) const {
    check_layer(layer);
    std::shared_lock lock(mu_);
    std::vector<FrameDescriptor> out;
    out.reserve(frames_.size());
    for (const auto& [id, fr] : frames_) {
        FrameDescriptor d;
        d.frame_id = id;
        d.clip_id = fr.clip_id;
        d.first_position = fr.first_position;
        d.end_position = fr.end_position;
        d.tier = clip_of(fr.clip_id).tier;
        d.mean_key = fr.mean_key[layer];
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<std::uint64_t> TieredKvStore::frame_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::uint64_t> out;
    out.reserve(frames_.size());
    for (const auto& kv : frames_) out.push_back(kv.first);
    return out;
}

UsageReport TieredKvStore::usage_report() const {
    std::shared_lock lock(mu_);
    UsageReport r;
    const std::uint64_t eb = entry_bytes(config_);
    for (const ClipRecord& clip : clips_) {
        const std::uint64_t entries = static_cast<std::uint64_t>(clip.entries_per_layer) * config_.n_layers;
        if (clip.tier == Tier::kHot) {
            r.hot_entries += entries;
            r.hot_bytes += entries * eb;
            ++r.hot_clips;
        } else {
            r.cold_entries += entries;
            r.cold_bytes += entries * eb;
            ++r.cold_clips;
        }
    }
    r.frames = frames_.size();
    return r;
}

std::size_t TieredKvStore::clip_count() const {
    std::shared_lock lock(mu_);
    return clips_.size();
}

std::optional<std::uint64_t> TieredKvStore::last_clip_id() const {
    std::shared_lock lock(mu_);
    if (clips_.empty()) return std::nullopt;
    return clips_.back().clip_id;
}

std::optional<std::int64_t> TieredKvStore::last_position() const {
    std::shared_lock lock(mu_);
    if (clips_.empty()) return std::nullopt;
    const auto it = frames_.rbegin();
    return it->second.end_position - 1;
}

}  // namespace streamkv

// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/cold_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include "streamkv/error.hpp"

namespace streamkv {

namespace {

class Writer {
public:
    explicit Writer(std::vector<std::byte>& out) : out_(out) {}

    template <class T>
    void uint(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
    void f32(float f) { uint(std::bit_cast<std::uint32_t>(f)); }
    void raw(const char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out_.push_back(static_cast<std::byte>(p[i]));
    }

private:
    std::vector<std::byte>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> in) : in_(in) {}

    template <class T>
    T uint() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }
    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw StorageError("cold file: truncated");
    }
    std::span<const std::byte> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_cold_clip(const ColdClip& clip) {
    const std::size_t n = clip.entry_count();
    const std::size_t width = clip.entry_width();
    if (clip.frame_ids.size() != n || clip.keys.size() != n * width || clip.values.size() != n * width) {
        throw ShapeError("cold file: clip arrays disagree with header geometry");
    }
    std::vector<std::byte> out;
    out.reserve(22 + n * (16 + 8 * width));
    Writer w(out);
    w.raw(kColdMagic, 4);
    w.uint<std::uint16_t>(kColdVersion);
    w.uint<std::uint32_t>(clip.layer_count);
    w.uint<std::uint32_t>(clip.n_kv_heads);
    w.uint<std::uint32_t>(clip.d_head);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(n));
    for (std::size_t e = 0; e < n; ++e) {
        w.uint<std::uint64_t>(clip.positions[e]);
        w.uint<std::uint64_t>(clip.frame_ids[e]);
        for (std::size_t i = 0; i < width; ++i) w.f32(clip.keys[e * width + i]);
        for (std::size_t i = 0; i < width; ++i) w.f32(clip.values[e * width + i]);
    }
    return out;
}

ColdClip decode_cold_clip(std::span<const std::byte> bytes) {
    Reader r(bytes);
    const auto magic = r.take(4);
    if (std::memcmp(magic.data(), kColdMagic, 4) != 0) throw StorageError("cold file: bad magic");
    const auto version = r.uint<std::uint16_t>();
    if (version != kColdVersion) throw StorageError("cold file: unsupported version " + std::to_string(version));
    ColdClip clip;
    clip.layer_count = r.uint<std::uint32_t>();
    clip.n_kv_heads = r.uint<std::uint32_t>();
    clip.d_head = r.uint<std::uint32_t>();
    const std::size_t n = r.uint<std::uint32_t>();
    const std::size_t width = clip.entry_width();
    if (r.remaining() != n * (16 + 8 * width)) throw StorageError("cold file: size does not match header");
    clip.positions.resize(n);
    clip.frame_ids.resize(n);
    clip.keys.resize(n * width);
    clip.values.resize(n * width);
    for (std::size_t e = 0; e < n; ++e) {
        clip.positions[e] = r.uint<std::uint64_t>();
        clip.frame_ids[e] = r.uint<std::uint64_t>();
        for (std::size_t i = 0; i < width; ++i) clip.keys[e * width + i] = r.f32();
        for (std::size_t i = 0; i < width; ++i) clip.values[e * width + i] = r.f32();
    }
    return clip;
}

std::string cold_file_name(std::uint64_t clip_id) { return "clip_" + std::to_string(clip_id) + ".skvc"; }

void write_cold_file(const std::filesystem::path& path, const ColdClip& clip) {
    const auto bytes = encode_cold_clip(clip);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (f) f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (f) f.flush();
        if (!f) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw StorageError("cold file: cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StorageError("cold file: cannot rename into " + path.string());
    }
}

ColdClip read_cold_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError("cold file: cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw StorageError("cold file: read failed for " + path.string());
    return decode_cold_clip(std::as_bytes(std::span<const char>(buf)));
}

}  // namespace streamkv

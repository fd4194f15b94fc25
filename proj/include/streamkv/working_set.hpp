// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <vector>

namespace streamkv {

// Byte counter for transient buffers. Prefill routes its per-chunk scratch
// through MeteredAllocator so tests can bound the peak working set.
class WorkingSetMeter {
public:
    void on_alloc(std::size_t bytes) noexcept {
        const std::size_t now = current_.fetch_add(bytes) + bytes;
        std::size_t prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        allocations_.fetch_add(1);
    }
    void on_free(std::size_t bytes) noexcept { current_.fetch_sub(bytes); }

    std::size_t current() const noexcept { return current_.load(); }
    std::size_t peak() const noexcept { return peak_.load(); }
    std::size_t allocations() const noexcept { return allocations_.load(); }

    void reset_peak() noexcept { peak_.store(current_.load()); }

private:
    std::atomic<std::size_t> current_{0};
    std::atomic<std::size_t> peak_{0};
    std::atomic<std::size_t> allocations_{0};
};

template <class T>
class MeteredAllocator {
public:
    using value_type = T;

    MeteredAllocator() noexcept = default;
    explicit MeteredAllocator(WorkingSetMeter* meter) noexcept : meter_(meter) {}
    template <class U>
    MeteredAllocator(const MeteredAllocator<U>& other) noexcept : meter_(other.meter()) {}

    T* allocate(std::size_t n) {
        T* p = std::allocator<T>{}.allocate(n);
        if (meter_) meter_->on_alloc(n * sizeof(T));
        return p;
    }
    void deallocate(T* p, std::size_t n) noexcept {
        if (meter_) meter_->on_free(n * sizeof(T));
        std::allocator<T>{}.deallocate(p, n);
    }

    WorkingSetMeter* meter() const noexcept { return meter_; }

    template <class U>
    bool operator==(const MeteredAllocator<U>& other) const noexcept {
        return meter_ == other.meter();
    }

private:
    WorkingSetMeter* meter_ = nullptr;
};

using MeteredFloats = std::vector<float, MeteredAllocator<float>>;

}  // namespace streamkv

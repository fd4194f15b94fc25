// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <mutex>

namespace streamkv {

// Shared mutex that blocks new readers once a writer is waiting. The glibc
// rwlock behind std::shared_mutex prefers readers, which lets a steady stream
// of recall queries starve the prefill thread. Not recursive for readers.
class RwMutex {
public:
    void lock() {
        std::unique_lock g(m_);
        ++writers_waiting_;
        cv_.wait(g, [&] { return !writer_active_ && readers_ == 0; });
        --writers_waiting_;
        writer_active_ = true;
    }
    void unlock() {
        {
            std::lock_guard g(m_);
            writer_active_ = false;
        }
        cv_.notify_all();
    }
    void lock_shared() {
        std::unique_lock g(m_);
        cv_.wait(g, [&] { return !writer_active_ && writers_waiting_ == 0; });
        ++readers_;
    }
    void unlock_shared() {
        bool last = false;
        {
            std::lock_guard g(m_);
            last = --readers_ == 0;
        }
        if (last) cv_.notify_all();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    int readers_ = 0;
    int writers_waiting_ = 0;
    bool writer_active_ = false;
};

}  // namespace streamkv

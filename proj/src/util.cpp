#include "mvrep/util.hpp"

#include <array>
#include <cstdio>
#include <fstream>

namespace mvrep {

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file for checksum: " + path.string());
    }
    std::uint64_t h = kFnvBasis;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(v));
    return std::string(out);
}

ParallelRunner::ParallelRunner(int threads) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads_ = threads;
    workers_.reserve(static_cast<std::size_t>(threads_ - 1));
    for (int i = 1; i < threads_; ++i) {
        workers_.emplace_back([this, i] { worker_loop(i); });
    }
}

ParallelRunner::~ParallelRunner() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
    }
    cv_job_.notify_all();
    for (auto& w : workers_) w.join();
}

void ParallelRunner::run(std::size_t n, const ShardFn& fn) {
    auto shard_range = [this, n](int shard) {
        std::size_t begin = n * static_cast<std::size_t>(shard) /
                            static_cast<std::size_t>(threads_);
        std::size_t end = n * (static_cast<std::size_t>(shard) + 1) /
                          static_cast<std::size_t>(threads_);
        return std::pair<std::size_t, std::size_t>(begin, end);
    };

    if (threads_ == 1 || n == 0) {
        fn(0, 0, n);
        return;
    }

    {
        std::lock_guard<std::mutex> lock(mu_);
        job_ = &fn;
        job_n_ = n;
        pending_ = threads_ - 1;
        ++generation_;
    }
    cv_job_.notify_all();

    auto [b0, e0] = shard_range(0);
    fn(0, b0, e0);

    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
}

void ParallelRunner::worker_loop(int index) {
    std::uint64_t seen = 0;
    for (;;) {
        const ShardFn* fn = nullptr;
        std::size_t n = 0;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_job_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            fn = job_;
            n = job_n_;
        }
        std::size_t begin = n * static_cast<std::size_t>(index) /
                            static_cast<std::size_t>(threads_);
        std::size_t end = n * (static_cast<std::size_t>(index) + 1) /
                          static_cast<std::size_t>(threads_);
        (*fn)(index, begin, end);
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (--pending_ == 0) cv_done_.notify_one();
        }
    }
}

}  // namespace mvrep

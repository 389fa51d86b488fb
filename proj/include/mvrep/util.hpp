#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mvrep {

/// Malformed or inconsistent input data (missing files, shape mismatches,
/// corrupt payloads). Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric breakdown (non-finite loss, degenerate ranges where a metric is
/// undefined). Maps to CLI exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// All sampling in the project goes through Rng. std::mt19937_64 is fully
// specified by the standard, and the value mappings below are explicit, so a
// given seed produces the same stream on every platform. The std::*_distribution
// adapters are implementation-defined and must not be used anywhere.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from (seed, stream), e.g. per-epoch
/// shuffles or per-block samplers.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant for
    /// grid-sized n; kept because it is branch-free and portable.
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit checksums, used for artifact fingerprints in reports and
// run manifests.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvBasis) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path);

std::string to_hex(std::uint64_t v);

class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }
    void reset() { start_ = clock::now(); }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

// ---------------------------------------------------------------------------
// ParallelRunner: persistent worker pool for sharded loops.
//
// run(n, fn) splits [0, n) into thread_count() contiguous shards and invokes
// fn(shard, begin, end) on each. Shard boundaries depend only on (n, T), so
// any per-shard accumulation that is later combined in shard order is
// reproducible for a fixed thread count.
// ---------------------------------------------------------------------------

class ParallelRunner {
public:
    /// threads <= 0 selects hardware_concurrency().
    explicit ParallelRunner(int threads = 0);
    ~ParallelRunner();

    ParallelRunner(const ParallelRunner&) = delete;
    ParallelRunner& operator=(const ParallelRunner&) = delete;

    int thread_count() const { return threads_; }

    using ShardFn = std::function<void(int shard, std::size_t begin, std::size_t end)>;
    void run(std::size_t n, const ShardFn& fn);

private:
    void worker_loop(int index);

    int threads_ = 1;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_job_;
    std::condition_variable cv_done_;
    const ShardFn* job_ = nullptr;
    std::size_t job_n_ = 0;
    std::uint64_t generation_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

}  // namespace mvrep

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvrep/field.hpp"
#include "mvrep/model.hpp"

namespace mvrep {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 2048;
    int epochs = 300;
    double decay_rate = 0.8;
    int decay_every = 15;  // epochs
    double sample_fraction = 1.0;
    std::uint64_t shuffle_seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int threads = 0;  // <=0: hardware concurrency
    int checkpoint_every = 0;  // 0 disables checkpoints
    std::filesystem::path checkpoint_dir;

    void validate() const;

    /// lr = lr0 * decay^floor(epoch / decay_every), 0-based epochs.
    double lr_at_epoch(int epoch) const;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;  // running mean over batch losses
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t sample_count = 0;
    std::int64_t total_points = 0;
    double total_seconds = 0.0;
    std::uint64_t param_checksum = 0;
};

/// Adam state for a flat parameter vector.
struct AdamState {
    std::vector<float> m;  // first moment
    std::vector<float> v;  // second moment
    std::int64_t step = 0;

    explicit AdamState(std::size_t param_count)
        : m(param_count, 0.0f), v(param_count, 0.0f) {}
};

/// One bias-corrected Adam update:
///   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
void adam_step(std::span<float> params, std::span<const float> grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Full training run: samples the grid, then `epochs` passes with
/// deterministic per-epoch reshuffles, Adam updates, and the step-decay
/// schedule. The returned model embeds the field's normalizer.
std::pair<ResidualSirenModel, TrainReport> train(const MultiField& field,
                                                 const ModelConfig& mconfig,
                                                 const TrainConfig& tconfig);

}  // namespace mvrep

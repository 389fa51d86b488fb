#include "mvrep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvrep {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw DataError("learning_rate must be > 0");
    if (!(decay_rate > 0.0) || decay_rate > 1.0) {
        throw DataError("decay_rate must be in (0,1]");
    }
    if (decay_every < 1) throw DataError("decay_every must be >= 1");
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (epochs < 1) throw DataError("epochs must be >= 1");
    if (!(sample_fraction > 0.0) || sample_fraction > 1.0) {
        throw DataError("sample_fraction must be in (0,1]");
    }
    if (checkpoint_every < 0) throw DataError("checkpoint_every must be >= 0");
}

double TrainConfig::lr_at_epoch(int epoch) const {
    return learning_rate * std::pow(decay_rate, epoch / decay_every);
}

void adam_step(std::span<float> params, std::span<const float> grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size()) {
        throw DataError("adam_step: shape mismatch");
    }
    state.step += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    const float b1 = static_cast<float>(beta1);
    const float b2 = static_cast<float>(beta2);
    const float ib1 = static_cast<float>(1.0 - beta1);
    const float ib2 = static_cast<float>(1.0 - beta2);
    const float inv_c1 = static_cast<float>(1.0 / c1);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float lrf = static_cast<float>(lr);
    const float epsf = static_cast<float>(eps);

    float* __restrict m = state.m.data();
    float* __restrict v = state.v.data();
    float* __restrict th = params.data();
    const float* __restrict g = grads.data();
    const std::size_t n = params.size();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + ib1 * g[i];
        v[i] = b2 * v[i] + ib2 * g[i] * g[i];
        const float mhat = m[i] * inv_c1;
        const float vhat = v[i] * inv_c2;
        th[i] -= lrf * mhat / (std::sqrt(vhat) + epsf);
    }
}

std::pair<ResidualSirenModel, TrainReport> train(const MultiField& field,
                                                 const ModelConfig& mconfig,
                                                 const TrainConfig& tconfig) {
    mconfig.validate();
    tconfig.validate();
    if (mconfig.in_dim != field.grid().dims) {
        throw DataError("model in_dim does not match dataset dims");
    }
    if (mconfig.out_dim != field.variable_count()) {
        throw DataError("model out_dim does not match dataset variable count");
    }

    Stopwatch total_clock;
    TrainingSet set = sample_points(field, tconfig.sample_fraction,
                                    tconfig.shuffle_seed);
    ResidualSirenModel model = init_model(mconfig, make_normalizer(field));

    const std::size_t k = set.size();
    const auto d = static_cast<std::size_t>(mconfig.in_dim);
    const auto v = static_cast<std::size_t>(mconfig.out_dim);
    const auto bs = static_cast<std::size_t>(tconfig.batch_size);
    const auto P = static_cast<std::size_t>(model.layout().total);

    ParallelRunner pool(tconfig.threads);
    GradScratch scratch;
    AdamState adam(P);
    std::vector<float> grad(P);
    std::vector<float> bcoords(bs * d);
    std::vector<float> btargets(bs * v);
    std::vector<std::uint32_t> order(k);
    std::iota(order.begin(), order.end(), 0u);

    TrainReport report;
    report.sample_count = k;
    report.total_points = field.point_count();
    report.epochs.reserve(static_cast<std::size_t>(tconfig.epochs));

    for (int epoch = 0; epoch < tconfig.epochs; ++epoch) {
        Stopwatch epoch_clock;
        const double lr = tconfig.lr_at_epoch(epoch);

        // Deterministic reshuffle per (seed, epoch).
        Rng rng(mix_seed(tconfig.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = k; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < k; start += bs) {
            const std::size_t nb = std::min(bs, k - start);  // last partial batch kept
            for (std::size_t i = 0; i < nb; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(set.coords.data() + src * d, d, bcoords.data() + i * d);
                std::copy_n(set.targets.data() + src * v, v, btargets.data() + i * v);
            }
            const double loss = backward(model, bcoords, btargets, nb, grad,
                                         pool, scratch);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batches));
            }
            adam_step(model.params(), grad, adam, lr, tconfig.adam_beta1,
                      tconfig.adam_beta2, tconfig.adam_eps);
            loss_sum += loss;
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(batches);
        stats.lr = lr;
        stats.seconds = epoch_clock.seconds();
        report.epochs.push_back(stats);

        if (tconfig.checkpoint_every > 0 &&
            (epoch + 1) % tconfig.checkpoint_every == 0 &&
            !tconfig.checkpoint_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(tconfig.checkpoint_dir, ec);
            save_model(model, tconfig.checkpoint_dir /
                                  ("checkpoint_epoch" + std::to_string(epoch + 1) +
                                   ".mvnf"));
        }
    }

    report.total_seconds = total_clock.seconds();
    auto p = model.params();
    report.param_checksum = fnv1a64(p.data(), p.size() * 4);
    return {std::move(model), std::move(report)};
}

}  // namespace mvrep

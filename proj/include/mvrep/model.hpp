#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvrep/field.hpp"
#include "mvrep/util.hpp"

namespace mvrep {

struct ModelConfig {
    int in_dim = 3;           // grid dims d
    int out_dim = 1;          // variable count v
    int hidden_width = 120;   // W
    int num_res_blocks = 10;  // B
    float omega0 = 30.0f;
    std::uint64_t init_seed = 0;

    void validate() const;

    /// P = (d*W + W) + B*2*(W^2 + W) + (W*v + v)
    std::int64_t param_count() const;
};

/// Offsets of each tensor inside the flat parameter vector. The order is the
/// serialization order: input W,b; per block W1,b1,W2,b2; output W,b. All
/// matrices are row-major (rows = outputs).
struct ParamLayout {
    struct Block {
        std::int64_t w1, b1, w2, b2;
    };
    std::int64_t w_in = 0, b_in = 0;
    std::vector<Block> blocks;
    std::int64_t w_out = 0, b_out = 0;
    std::int64_t total = 0;

    static ParamLayout make(const ModelConfig& cfg);
};

/// Residual sinusoidal coordinate network and its embedded normalization
/// metadata; this object is the compressed artifact. Parameters are float32.
///
/// Forward pass:
///   h = sin(w0*(W_in x + b_in))
///   per block: h <- h + sin(w0*(W2 sin(w0*(W1 h + b1)) + b2))
///   y = W_out h + b_out            (linear, unclamped)
class ResidualSirenModel {
public:
    /// Zero-initialized parameters; use init_model() for trainable weights.
    /// The normalizer must agree with the config (shape size = in_dim,
    /// variable count = out_dim).
    ResidualSirenModel(ModelConfig cfg, Normalizer normalizer);

    const ModelConfig& config() const { return cfg_; }
    const Normalizer& normalizer() const { return norm_; }
    const ParamLayout& layout() const { return layout_; }

    std::span<float> params() { return params_; }
    std::span<const float> params() const { return params_; }

    /// Batched evaluation: coords row-major n x in_dim, out n x out_dim.
    /// Pure per element; a pool only shards the batch.
    void forward(std::span<const float> coords, std::size_t n,
                 std::span<float> out, ParallelRunner* pool = nullptr) const;

private:
    ModelConfig cfg_;
    Normalizer norm_;
    ParamLayout layout_;
    std::vector<float> params_;
};

/// SIREN initialization, deterministic per cfg.init_seed:
///   input weights  ~ U[-1/d, 1/d]
///   hidden weights ~ U[-sqrt(6/W)/w0, sqrt(6/W)/w0]
///   output weights ~ U[-sqrt(6/W), sqrt(6/W)]
///   all biases 0
ResidualSirenModel init_model(const ModelConfig& cfg, const Normalizer& norm);

/// Reusable per-shard scratch for backward(); grows on demand.
struct GradScratch {
    std::vector<std::vector<float>> shard_grad;
    std::vector<std::vector<float>> shard_arena;
    std::vector<double> shard_sse;
};

/// MSE loss (mean over batch and outputs, equal weight per variable) and its
/// exact analytic gradient. Per-shard partials are combined in shard order, so
/// results are reproducible for a fixed thread count. Returns the loss.
double backward(const ResidualSirenModel& model, std::span<const float> coords,
                std::span<const float> targets, std::size_t n,
                std::span<float> grad, ParallelRunner& pool,
                GradScratch& scratch);

// float64 shadow path. Used only to verify the float32 pipeline against
// finite differences; never part of training.
double loss_f64(const ModelConfig& cfg, std::span<const double> params,
                std::span<const double> coords, std::span<const double> targets,
                std::size_t n);
double backward_f64(const ModelConfig& cfg, std::span<const double> params,
                    std::span<const double> coords,
                    std::span<const double> targets, std::size_t n,
                    std::span<double> grad);

// ---------------------------------------------------------------------------
// Model file: magic "MVNF", u32 version, u32 header length, UTF-8 JSON header
// (config + grid shape + variable ranges), then float32-le parameters in
// declaration order. Byte count = 12 + header + 4*P.
// ---------------------------------------------------------------------------

std::size_t save_model(const ResidualSirenModel& model,
                       const std::filesystem::path& path);
ResidualSirenModel load_model(const std::filesystem::path& path);

/// Raw field bytes (4 * points * variables) over compressed bytes, the "R:1"
/// ratio.
double compression_ratio(std::size_t model_bytes, std::int64_t point_count,
                         int variable_count);
double compression_ratio(std::size_t model_bytes, const MultiField& field);

/// Evaluates the model at every grid point of its embedded normalizer, clamps
/// the outputs to [-1,1], and denormalizes back to raw units.
MultiField reconstruct_field(const ResidualSirenModel& model,
                             ParallelRunner* pool = nullptr);

}  // namespace mvrep

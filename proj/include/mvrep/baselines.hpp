#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvrep/field.hpp"

namespace mvrep {

/// Downsample to ceil(shape/factor) points per axis by multilinear
/// interpolation at uniformly spaced positions (endpoints included), then
/// upsample back to the original shape the same way. Exact on per-axis affine
/// fields for any factor.
MultiField lerp_reduce_expand(const MultiField& field,
                              std::span<const int> factors);

/// Payload footprint of the reduced representation (reduced points * vars * 4).
std::size_t lerp_storage_bytes(const GridSpec& grid,
                               std::span<const int> factors, int variable_count);

/// Block-wise Gaussian summary: per block, per-variable mean/std plus the
/// pairwise Pearson correlation upper triangle. Edge blocks may be partial and
/// are summarized over their actual points.
class CopulaSummary {
public:
    CopulaSummary(GridSpec grid, std::vector<int> block_shape,
                  std::vector<std::string> variable_names);

    const GridSpec& grid() const { return grid_; }
    const std::vector<int>& block_shape() const { return block_shape_; }
    const std::vector<std::string>& variable_names() const { return names_; }
    const std::vector<std::int64_t>& blocks_per_axis() const { return blocks_per_axis_; }

    int vars() const { return static_cast<int>(names_.size()); }
    std::int64_t block_count() const;
    /// floats per block: 2v + v(v-1)/2
    std::int64_t floats_per_block() const;
    std::size_t payload_bytes() const;

    float mean(std::int64_t block, int var) const;
    float stddev(std::int64_t block, int var) const;
    /// Pearson correlation for i != j; pairs involving a zero-std variable are
    /// 0 by convention.
    float corr(std::int64_t block, int i, int j) const;

    float& mean_ref(std::int64_t block, int var);
    float& stddev_ref(std::int64_t block, int var);
    float& corr_ref(std::int64_t block, int i, int j);

    std::span<const float> payload() const { return payload_; }
    std::span<float> payload() { return payload_; }

    /// Number of (block, pair) entries forced to 0 because a marginal was
    /// degenerate. Recomputed from the payload.
    std::int64_t zero_flagged_pairs() const;

private:
    GridSpec grid_;
    std::vector<int> block_shape_;
    std::vector<std::int64_t> blocks_per_axis_;
    std::vector<std::string> names_;
    std::vector<float> payload_;
};

CopulaSummary copula_summarize(const MultiField& field,
                               std::span<const int> block_shape);

enum class CopulaMode {
    Sample,  // draw from the block's correlated Gaussian (default)
    Mean,    // emit block means
};

/// Reconstructs the full-resolution field. Sampling uses a symmetric square
/// root of each block's correlation matrix with eigenvalues clipped at 0;
/// deterministic per seed (independent per-block streams). clipped_blocks, if
/// given, receives the number of blocks whose correlation matrix needed
/// clipping beyond tolerance.
MultiField copula_reconstruct(const CopulaSummary& summary, std::uint64_t seed,
                              CopulaMode mode = CopulaMode::Sample,
                              int* clipped_blocks = nullptr);

// Summary file: magic "MVCS", u32 version, u32 header length, JSON header,
// packed float32 payload.
std::size_t save_copula(const CopulaSummary& summary,
                        const std::filesystem::path& path);
CopulaSummary load_copula(const std::filesystem::path& path);

}  // namespace mvrep

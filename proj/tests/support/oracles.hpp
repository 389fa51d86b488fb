#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mvrep/model.hpp"
#include "mvrep/render.hpp"

namespace mvrep::testsupport {

// Independent oracle implementations used to verify the production code. They
// deliberately take different computational routes than the library.

/// Central finite differences of the float64 loss with respect to every
/// parameter.
std::vector<double> fd_gradient(const ModelConfig& cfg,
                                std::span<const double> params,
                                std::span<const double> coords,
                                std::span<const double> targets, std::size_t n,
                                double eps);

/// O(n^2) point-set distances, same per-pair distance expression as the
/// accelerated versions so results must match exactly.
double brute_chamfer(std::span<const std::array<double, 3>> a,
                     std::span<const std::array<double, 3>> b, int dims);
double brute_hausdorff(std::span<const std::array<double, 3>> a,
                       std::span<const std::array<double, 3>> b, int dims);

/// Two-pass mean / population std / Pearson correlation (subtract-the-mean
/// route, unlike the library's accumulated-sums route).
struct TwoPass {
    double mean = 0.0;
    double stddev = 0.0;
};
TwoPass two_pass_stats(std::span<const float> x);
double two_pass_corr(std::span<const float> x, std::span<const float> y);

/// Histogram mutual information and entropy via explicit probability arrays.
double brute_mi(std::span<const float> x, std::span<const float> y,
                double xmin, double xmax, double ymin, double ymax, int bins);
double brute_entropy(std::span<const float> x, double xmin, double xmax,
                     int bins);

/// Direct windowed SSIM (explicit 11x11 loops, 2D Gaussian weights built
/// independently).
double reference_ssim(const Image& a, const Image& b);

}  // namespace mvrep::testsupport

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvrep::testsupport {

std::vector<double> fd_gradient(const ModelConfig& cfg,
                                std::span<const double> params,
                                std::span<const double> coords,
                                std::span<const double> targets, std::size_t n,
                                double eps) {
    std::vector<double> theta(params.begin(), params.end());
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + eps;
        const double lp = loss_f64(cfg, theta, coords, targets, n);
        theta[i] = saved - eps;
        const double lm = loss_f64(cfg, theta, coords, targets, n);
        theta[i] = saved;
        grad[i] = (lp - lm) / (2.0 * eps);
    }
    return grad;
}

namespace {
inline double sqdist(const std::array<double, 3>& a,
                     const std::array<double, 3>& b, int dims) {
    double acc = 0.0;
    for (int k = 0; k < dims; ++k) {
        const double d = a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)];
        acc += d * d;
    }
    return acc;
}

double min_sqdist(const std::array<double, 3>& p,
                  std::span<const std::array<double, 3>> set, int dims) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : set) best = std::min(best, sqdist(p, q, dims));
    return best;
}
}  // namespace

double brute_chamfer(std::span<const std::array<double, 3>> a,
                     std::span<const std::array<double, 3>> b, int dims) {
    double sum_ab = 0.0;
    for (const auto& p : a) sum_ab += std::sqrt(min_sqdist(p, b, dims));
    double sum_ba = 0.0;
    for (const auto& p : b) sum_ba += std::sqrt(min_sqdist(p, a, dims));
    return sum_ab / static_cast<double>(a.size()) +
           sum_ba / static_cast<double>(b.size());
}

double brute_hausdorff(std::span<const std::array<double, 3>> a,
                       std::span<const std::array<double, 3>> b, int dims) {
    double max_ab = 0.0;
    for (const auto& p : a) max_ab = std::max(max_ab, min_sqdist(p, b, dims));
    double max_ba = 0.0;
    for (const auto& p : b) max_ba = std::max(max_ba, min_sqdist(p, a, dims));
    return std::sqrt(std::max(max_ab, max_ba));
}

TwoPass two_pass_stats(std::span<const float> x) {
    TwoPass out;
    double sum = 0.0;
    for (float v : x) sum += static_cast<double>(v);
    out.mean = sum / static_cast<double>(x.size());
    double ss = 0.0;
    for (float v : x) {
        const double c = static_cast<double>(v) - out.mean;
        ss += c * c;
    }
    out.stddev = std::sqrt(ss / static_cast<double>(x.size()));
    return out;
}

double two_pass_corr(std::span<const float> x, std::span<const float> y) {
    const TwoPass sx = two_pass_stats(x);
    const TwoPass sy = two_pass_stats(y);
    if (sx.stddev == 0.0 || sy.stddev == 0.0) return 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (static_cast<double>(x[i]) - sx.mean) *
               (static_cast<double>(y[i]) - sy.mean);
    }
    cov /= static_cast<double>(x.size());
    return cov / (sx.stddev * sy.stddev);
}

double brute_mi(std::span<const float> x, std::span<const float> y,
                double xmin, double xmax, double ymin, double ymax, int bins) {
    auto bin_of = [bins](double v, double lo, double hi) {
        if (!(hi > lo)) return 0;
        auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    std::vector<double> pxy(static_cast<std::size_t>(bins) * bins, 0.0);
    std::vector<double> px(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> py(static_cast<std::size_t>(bins), 0.0);
    const double w = 1.0 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int bx = bin_of(x[i], xmin, xmax);
        const int by = bin_of(y[i], ymin, ymax);
        pxy[static_cast<std::size_t>(bx) * bins + by] += w;
        px[static_cast<std::size_t>(bx)] += w;
        py[static_cast<std::size_t>(by)] += w;
    }
    double mi = 0.0;
    for (int bx = 0; bx < bins; ++bx) {
        for (int by = 0; by < bins; ++by) {
            const double p = pxy[static_cast<std::size_t>(bx) * bins + by];
            if (p <= 0.0) continue;
            mi += p * std::log(p / (px[static_cast<std::size_t>(bx)] *
                                    py[static_cast<std::size_t>(by)]));
        }
    }
    return mi;
}

double brute_entropy(std::span<const float> x, double xmin, double xmax,
                     int bins) {
    auto bin_of = [bins](double v, double lo, double hi) {
        if (!(hi > lo)) return 0;
        auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    std::vector<double> px(static_cast<std::size_t>(bins), 0.0);
    const double w = 1.0 / static_cast<double>(x.size());
    for (float v : x) px[static_cast<std::size_t>(bin_of(v, xmin, xmax))] += w;
    double h = 0.0;
    for (double p : px) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double reference_ssim(const Image& a, const Image& b) {
    const int w = a.width, h = a.height;
    auto lum = [](const Image& img, int x, int y) {
        const auto* p = img.at(x, y);
        return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    };

    // 2D Gaussian window built directly
    double win[11][11];
    double norm = 0.0;
    for (int dy = -5; dy <= 5; ++dy) {
        for (int dx = -5; dx <= 5; ++dx) {
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            win[dy + 5][dx + 5] = g;
            norm += g;
        }
    }
    for (auto& row : win) {
        for (double& g : row) g /= norm;
    }

    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);

    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 5; y < h - 5; ++y) {
        for (int x = 5; x < w - 5; ++x) {
            double ma = 0, mb = 0;
            for (int dy = -5; dy <= 5; ++dy) {
                for (int dx = -5; dx <= 5; ++dx) {
                    ma += win[dy + 5][dx + 5] * lum(a, x + dx, y + dy);
                    mb += win[dy + 5][dx + 5] * lum(b, x + dx, y + dy);
                }
            }
            double va = 0, vb = 0, cov = 0;
            for (int dy = -5; dy <= 5; ++dy) {
                for (int dx = -5; dx <= 5; ++dx) {
                    const double da = lum(a, x + dx, y + dy) - ma;
                    const double db = lum(b, x + dx, y + dy) - mb;
                    va += win[dy + 5][dx + 5] * da * da;
                    vb += win[dy + 5][dx + 5] * db * db;
                    cov += win[dy + 5][dx + 5] * da * db;
                }
            }
            sum += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace mvrep::testsupport

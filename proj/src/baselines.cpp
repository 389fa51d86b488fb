#include "mvrep/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace mvrep {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'M', 'V', 'C', 'S'};
constexpr std::uint32_t kVersion = 1;

/// Multilinear interpolation at a fractional position in index space.
/// Positions are clamped to the grid, so exact-node lookups stay exact.
double multilinear(std::span<const float> data, const GridSpec& grid,
                   const double* pos) {
    const int d = grid.dims;
    std::int64_t cell[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        const auto s = grid.shape[static_cast<std::size_t>(a)];
        double p = std::clamp(pos[a], 0.0, static_cast<double>(s - 1));
        double fl = std::floor(p);
        std::int64_t c = static_cast<std::int64_t>(fl);
        if (c > s - 2) c = s - 2;
        cell[a] = c;
        frac[a] = p - static_cast<double>(c);
    }
    double acc = 0.0;
    const int corners = 1 << d;
    for (int m = 0; m < corners; ++m) {
        double w = 1.0;
        std::int64_t idx[3];
        for (int a = 0; a < d; ++a) {
            const int bit = (m >> a) & 1;
            idx[a] = cell[a] + bit;
            w *= bit ? frac[a] : (1.0 - frac[a]);
        }
        if (w == 0.0) continue;
        acc += w * static_cast<double>(
                       data[static_cast<std::size_t>(grid.flatten({idx, static_cast<std::size_t>(d)}))]);
    }
    return acc;
}

std::vector<float> resample(std::span<const float> src, const GridSpec& from,
                            const GridSpec& to) {
    const int d = from.dims;
    std::vector<float> out(static_cast<std::size_t>(to.point_count()));
    std::int64_t idx[3] = {0, 0, 0};
    double pos[3] = {0, 0, 0};
    const std::int64_t n = to.point_count();
    for (std::int64_t f = 0; f < n; ++f) {
        to.unflatten(f, idx);
        for (int a = 0; a < d; ++a) {
            // Uniform lattice including both endpoints on every axis.
            pos[a] = static_cast<double>(idx[a]) *
                     static_cast<double>(from.shape[static_cast<std::size_t>(a)] - 1) /
                     static_cast<double>(to.shape[static_cast<std::size_t>(a)] - 1);
        }
        out[static_cast<std::size_t>(f)] = static_cast<float>(multilinear(src, from, pos));
    }
    return out;
}

GridSpec reduced_grid(const GridSpec& grid, std::span<const int> factors) {
    if (static_cast<int>(factors.size()) != grid.dims) {
        throw DataError("factor count does not match grid dims");
    }
    GridSpec out;
    out.dims = grid.dims;
    for (int a = 0; a < grid.dims; ++a) {
        const int f = factors[static_cast<std::size_t>(a)];
        if (f < 1) throw DataError("reduction factors must be >= 1");
        const auto s = grid.shape[static_cast<std::size_t>(a)];
        const std::int64_t r = (s + f - 1) / f;
        if (r < 2) {
            throw DataError("factor " + std::to_string(f) + " too large for axis of " +
                            std::to_string(s) + " points");
        }
        out.shape.push_back(r);
    }
    return out;
}

/// Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
/// Returns eigenvalues in `eig`; `vecs` gets eigenvectors in columns.
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eig,
                  std::vector<double>& vecs) {
    vecs.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vecs[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto at = [&](std::vector<double>& m, int r, int c) -> double& {
        return m[static_cast<std::size_t>(r) * n + c];
    };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(a, p, q);
                if (apq == 0.0) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                                     : 1.0 / (theta - std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(a, k, p), akq = at(a, k, q);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(a, p, k), aqk = at(a, q, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(vecs, k, p), vkq = at(vecs, k, q);
                    at(vecs, k, p) = c * vkp - s * vkq;
                    at(vecs, k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eig.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(a, i, i);
}

struct BlockRange {
    std::int64_t lo[3] = {0, 0, 0};
    std::int64_t hi[3] = {0, 0, 0};  // exclusive
};

BlockRange block_range(const GridSpec& grid, std::span<const int> block_shape,
                       std::span<const std::int64_t> blocks_per_axis,
                       std::int64_t block) {
    BlockRange r;
    std::int64_t bidx[3] = {0, 0, 0};
    std::int64_t rem = block;
    for (int a = grid.dims - 1; a >= 0; --a) {
        bidx[a] = rem % blocks_per_axis[static_cast<std::size_t>(a)];
        rem /= blocks_per_axis[static_cast<std::size_t>(a)];
    }
    for (int a = 0; a < grid.dims; ++a) {
        r.lo[a] = bidx[a] * block_shape[static_cast<std::size_t>(a)];
        r.hi[a] = std::min<std::int64_t>(r.lo[a] + block_shape[static_cast<std::size_t>(a)],
                                         grid.shape[static_cast<std::size_t>(a)]);
    }
    return r;
}

template <typename Fn>
void for_each_point(const GridSpec& grid, const BlockRange& r, Fn&& fn) {
    std::int64_t idx[3] = {r.lo[0], r.lo[1], grid.dims == 3 ? r.lo[2] : 0};
    if (grid.dims == 2) {
        for (idx[0] = r.lo[0]; idx[0] < r.hi[0]; ++idx[0])
            for (idx[1] = r.lo[1]; idx[1] < r.hi[1]; ++idx[1])
                fn(grid.flatten({idx, 2}));
    } else {
        for (idx[0] = r.lo[0]; idx[0] < r.hi[0]; ++idx[0])
            for (idx[1] = r.lo[1]; idx[1] < r.hi[1]; ++idx[1])
                for (idx[2] = r.lo[2]; idx[2] < r.hi[2]; ++idx[2])
                    fn(grid.flatten({idx, 3}));
    }
}

}  // namespace

MultiField lerp_reduce_expand(const MultiField& field,
                              std::span<const int> factors) {
    const GridSpec low = reduced_grid(field.grid(), factors);
    std::vector<std::string> names;
    std::vector<std::vector<float>> data;
    for (int v = 0; v < field.variable_count(); ++v) {
        std::vector<float> reduced = resample(field.values(v), field.grid(), low);
        data.push_back(resample(reduced, low, field.grid()));
        names.push_back(field.variable(v).name);
    }
    return MultiField(field.grid(), std::move(names), std::move(data));
}

std::size_t lerp_storage_bytes(const GridSpec& grid,
                               std::span<const int> factors,
                               int variable_count) {
    const GridSpec low = reduced_grid(grid, factors);
    return static_cast<std::size_t>(low.point_count()) *
           static_cast<std::size_t>(variable_count) * 4;
}

CopulaSummary::CopulaSummary(GridSpec grid, std::vector<int> block_shape,
                             std::vector<std::string> variable_names)
    : grid_(std::move(grid)),
      block_shape_(std::move(block_shape)),
      names_(std::move(variable_names)) {
    grid_.validate();
    if (static_cast<int>(block_shape_.size()) != grid_.dims) {
        throw DataError("block shape must match grid dims");
    }
    for (int a = 0; a < grid_.dims; ++a) {
        if (block_shape_[static_cast<std::size_t>(a)] < 1) {
            throw DataError("block shape entries must be >= 1");
        }
        const auto s = grid_.shape[static_cast<std::size_t>(a)];
        const auto b = block_shape_[static_cast<std::size_t>(a)];
        blocks_per_axis_.push_back((s + b - 1) / b);
    }
    if (names_.empty()) throw DataError("copula summary needs >=1 variable");
    payload_.assign(static_cast<std::size_t>(block_count() * floats_per_block()), 0.0f);
}

std::int64_t CopulaSummary::block_count() const {
    std::int64_t n = 1;
    for (auto b : blocks_per_axis_) n *= b;
    return n;
}

std::int64_t CopulaSummary::floats_per_block() const {
    const std::int64_t v = vars();
    return 2 * v + v * (v - 1) / 2;
}

std::size_t CopulaSummary::payload_bytes() const {
    return static_cast<std::size_t>(block_count() * floats_per_block()) * 4;
}

namespace {
inline std::size_t tri_offset(int v, int i, int j) {
    // upper triangle, row-major, i < j
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (2 * v - i - 1) / 2 +
           static_cast<std::size_t>(j - i - 1);
}
}  // namespace

float CopulaSummary::mean(std::int64_t block, int var) const {
    return payload_[static_cast<std::size_t>(block * floats_per_block() + var)];
}
float CopulaSummary::stddev(std::int64_t block, int var) const {
    return payload_[static_cast<std::size_t>(block * floats_per_block() + vars() + var)];
}
float CopulaSummary::corr(std::int64_t block, int i, int j) const {
    if (i == j) return 1.0f;
    return payload_[static_cast<std::size_t>(block * floats_per_block() + 2 * vars()) +
                    tri_offset(vars(), i, j)];
}
float& CopulaSummary::mean_ref(std::int64_t block, int var) {
    return payload_[static_cast<std::size_t>(block * floats_per_block() + var)];
}
float& CopulaSummary::stddev_ref(std::int64_t block, int var) {
    return payload_[static_cast<std::size_t>(block * floats_per_block() + vars() + var)];
}
float& CopulaSummary::corr_ref(std::int64_t block, int i, int j) {
    return payload_[static_cast<std::size_t>(block * floats_per_block() + 2 * vars()) +
                    tri_offset(vars(), i, j)];
}

std::int64_t CopulaSummary::zero_flagged_pairs() const {
    std::int64_t count = 0;
    for (std::int64_t b = 0; b < block_count(); ++b) {
        for (int i = 0; i < vars(); ++i) {
            if (stddev(b, i) != 0.0f) continue;
            count += vars() - 1;  // every pair through a degenerate marginal
        }
    }
    return count;
}

CopulaSummary copula_summarize(const MultiField& field,
                               std::span<const int> block_shape) {
    std::vector<std::string> names;
    for (const auto& v : field.variables()) names.push_back(v.name);
    CopulaSummary summary(field.grid(), {block_shape.begin(), block_shape.end()},
                          std::move(names));

    const int v = field.variable_count();
    std::vector<double> sum(static_cast<std::size_t>(v));
    std::vector<double> sumsq(static_cast<std::size_t>(v));
    std::vector<double> cross(static_cast<std::size_t>(v) * v);

    for (std::int64_t b = 0; b < summary.block_count(); ++b) {
        const BlockRange r = block_range(summary.grid(), summary.block_shape(),
                                         summary.blocks_per_axis(), b);
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(sumsq.begin(), sumsq.end(), 0.0);
        std::fill(cross.begin(), cross.end(), 0.0);
        std::int64_t n = 0;
        for_each_point(summary.grid(), r, [&](std::int64_t flat) {
            ++n;
            for (int i = 0; i < v; ++i) {
                const double xi =
                    static_cast<double>(field.values(i)[static_cast<std::size_t>(flat)]);
                sum[static_cast<std::size_t>(i)] += xi;
                sumsq[static_cast<std::size_t>(i)] += xi * xi;
                for (int j = i + 1; j < v; ++j) {
                    const double xj = static_cast<double>(
                        field.values(j)[static_cast<std::size_t>(flat)]);
                    cross[static_cast<std::size_t>(i) * v + j] += xi * xj;
                }
            }
        });
        const double dn = static_cast<double>(n);
        for (int i = 0; i < v; ++i) {
            const double mean = sum[static_cast<std::size_t>(i)] / dn;
            const double var =
                std::max(0.0, sumsq[static_cast<std::size_t>(i)] / dn - mean * mean);
            summary.mean_ref(b, i) = static_cast<float>(mean);
            summary.stddev_ref(b, i) = static_cast<float>(std::sqrt(var));
        }
        for (int i = 0; i < v; ++i) {
            for (int j = i + 1; j < v; ++j) {
                const double mi = sum[static_cast<std::size_t>(i)] / dn;
                const double mj = sum[static_cast<std::size_t>(j)] / dn;
                const double cov =
                    cross[static_cast<std::size_t>(i) * v + j] / dn - mi * mj;
                const double si = static_cast<double>(summary.stddev(b, i));
                const double sj = static_cast<double>(summary.stddev(b, j));
                double rho = 0.0;  // degenerate marginals: 0 by convention
                if (si > 0.0 && sj > 0.0) {
                    rho = std::clamp(cov / (si * sj), -1.0, 1.0);
                }
                summary.corr_ref(b, i, j) = static_cast<float>(rho);
            }
        }
    }
    return summary;
}

MultiField copula_reconstruct(const CopulaSummary& summary, std::uint64_t seed,
                              CopulaMode mode, int* clipped_blocks) {
    const int v = summary.vars();
    const GridSpec& grid = summary.grid();
    std::vector<std::vector<float>> data(static_cast<std::size_t>(v));
    for (auto& arr : data) arr.resize(static_cast<std::size_t>(grid.point_count()));

    int clipped = 0;
    std::vector<double> corr(static_cast<std::size_t>(v) * v);
    std::vector<double> eig, vecs;
    std::vector<double> root(static_cast<std::size_t>(v) * v);
    std::vector<double> g(static_cast<std::size_t>(v)), z(static_cast<std::size_t>(v));

    for (std::int64_t b = 0; b < summary.block_count(); ++b) {
        const BlockRange r = block_range(grid, summary.block_shape(),
                                         summary.blocks_per_axis(), b);
        if (mode == CopulaMode::Mean) {
            for_each_point(grid, r, [&](std::int64_t flat) {
                for (int i = 0; i < v; ++i) {
                    data[static_cast<std::size_t>(i)][static_cast<std::size_t>(flat)] =
                        summary.mean(b, i);
                }
            });
            continue;
        }

        // Symmetric square root of the correlation matrix, eigenvalues
        // clipped at 0.
        for (int i = 0; i < v; ++i) {
            for (int j = 0; j < v; ++j) {
                corr[static_cast<std::size_t>(i) * v + j] =
                    static_cast<double>(summary.corr(b, i, j));
            }
        }
        jacobi_eigen(corr, v, eig, vecs);
        double max_eig = 0.0;
        for (double e : eig) max_eig = std::max(max_eig, e);
        bool needed_clip = false;
        for (auto& e : eig) {
            if (e < -1e-6 * std::max(1.0, max_eig)) needed_clip = true;
            if (e <= 1e-12 * std::max(1.0, max_eig)) {
                e = 0.0;
            } else {
                e = std::sqrt(e);
            }
        }
        if (needed_clip) ++clipped;
        for (int i = 0; i < v; ++i) {
            for (int j = 0; j < v; ++j) {
                double acc = 0.0;
                for (int k = 0; k < v; ++k) {
                    acc += vecs[static_cast<std::size_t>(i) * v + k] *
                           eig[static_cast<std::size_t>(k)] *
                           vecs[static_cast<std::size_t>(j) * v + k];
                }
                root[static_cast<std::size_t>(i) * v + j] = acc;
            }
        }

        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
        for_each_point(grid, r, [&](std::int64_t flat) {
            for (int i = 0; i < v; ++i) g[static_cast<std::size_t>(i)] = rng.normal();
            for (int i = 0; i < v; ++i) {
                double acc = 0.0;
                for (int k = 0; k < v; ++k) {
                    acc += root[static_cast<std::size_t>(i) * v + k] *
                           g[static_cast<std::size_t>(k)];
                }
                z[static_cast<std::size_t>(i)] = acc;
            }
            for (int i = 0; i < v; ++i) {
                const double value = static_cast<double>(summary.mean(b, i)) +
                                     static_cast<double>(summary.stddev(b, i)) *
                                         z[static_cast<std::size_t>(i)];
                data[static_cast<std::size_t>(i)][static_cast<std::size_t>(flat)] =
                    static_cast<float>(value);
            }
        });
    }

    if (clipped > 0) {
        std::cerr << "copula_reconstruct: clipped non-PSD correlation in "
                  << clipped << " block(s)\n";
    }
    if (clipped_blocks != nullptr) *clipped_blocks = clipped;
    return MultiField(grid, summary.variable_names(), std::move(data));
}

std::size_t save_copula(const CopulaSummary& summary,
                        const std::filesystem::path& path) {
    json header;
    header["grid"] = {{"dims", summary.grid().dims},
                      {"shape", summary.grid().shape}};
    header["block_shape"] = summary.block_shape();
    header["variables"] = summary.variable_names();
    const std::string hdr = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write summary file: " + path.string());
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    const auto hdr_len = static_cast<std::uint32_t>(hdr.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hdr_len), 4);
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    auto payload = summary.payload();
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * 4));
    if (!out) throw DataError("write failed: " + path.string());
    return 12 + hdr.size() + payload.size() * 4;
}

CopulaSummary load_copula(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open summary file: " + path.string());
    const auto size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    if (size < 12) throw DataError("summary file truncated: " + path.string());

    char magic[4];
    std::uint32_t version = 0, hdr_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&hdr_len), 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("bad magic in summary file: " + path.string());
    }
    if (version != kVersion) {
        throw DataError("unsupported summary version " + std::to_string(version));
    }
    if (size < 12 + static_cast<std::uint64_t>(hdr_len)) {
        throw DataError("summary header truncated: " + path.string());
    }
    std::string hdr(hdr_len, '\0');
    in.read(hdr.data(), hdr_len);

    GridSpec grid;
    std::vector<int> block_shape;
    std::vector<std::string> names;
    try {
        json header = json::parse(hdr);
        grid.dims = header.at("grid").at("dims").get<int>();
        grid.shape = header.at("grid").at("shape").get<std::vector<std::int64_t>>();
        block_shape = header.at("block_shape").get<std::vector<int>>();
        names = header.at("variables").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt summary header: ") + e.what());
    }

    CopulaSummary summary(std::move(grid), std::move(block_shape), std::move(names));
    const auto expected = static_cast<std::uint64_t>(summary.payload_bytes());
    if (size - 12 - hdr_len != expected) {
        throw DataError("payload length mismatch: " + path.string());
    }
    in.read(reinterpret_cast<char*>(summary.payload().data()),
            static_cast<std::streamsize>(expected));
    if (!in) throw DataError("short read on summary file: " + path.string());
    return summary;
}

}  // namespace mvrep

#include "mvrep/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace mvrep {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'M', 'V', 'N', 'F'};
constexpr std::uint32_t kVersion = 1;

// ---------------------------------------------------------------------------
// Batched kernels, templated so the float32 production path and the float64
// verification path share one implementation. All loops run in a fixed order;
// results depend only on inputs.
// ---------------------------------------------------------------------------

// y[i][r] = dot(W[r][:], x[i][:]) + b[r]
template <typename T>
void affine_forward(const T* __restrict w, const T* __restrict b,
                    const T* __restrict x, T* __restrict y, std::size_t n,
                    int rows, int cols) {
    for (std::size_t i = 0; i < n; ++i) {
        const T* xi = x + i * static_cast<std::size_t>(cols);
        T* yi = y + i * static_cast<std::size_t>(rows);
        for (int r = 0; r < rows; ++r) {
            const T* wr = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
            int k = 0;
            for (; k + 4 <= cols; k += 4) {
                a0 += wr[k] * xi[k];
                a1 += wr[k + 1] * xi[k + 1];
                a2 += wr[k + 2] * xi[k + 2];
                a3 += wr[k + 3] * xi[k + 3];
            }
            T acc = (a0 + a1) + (a2 + a3);
            for (; k < cols; ++k) acc += wr[k] * xi[k];
            yi[r] = acc + b[r];
        }
    }
}

template <typename T>
void sin_scale(const T* __restrict z, T* __restrict s, std::size_t count, T omega) {
    for (std::size_t i = 0; i < count; ++i) s[i] = std::sin(omega * z[i]);
}

// dz[i] = dup[i] * omega * cos(omega * zpre[i])
template <typename T>
void sin_backward(const T* __restrict dup, const T* __restrict zpre,
                  T* __restrict dz, std::size_t count, T omega) {
    for (std::size_t i = 0; i < count; ++i) {
        dz[i] = dup[i] * omega * std::cos(omega * zpre[i]);
    }
}

// dW[r][c] += sum_i dy[i][r] * x[i][c];  db[r] += sum_i dy[i][r]
template <typename T>
void accum_param_grad(const T* __restrict x, const T* __restrict dy,
                      T* __restrict dw, T* __restrict db, std::size_t n,
                      int rows, int cols) {
    for (std::size_t i = 0; i < n; ++i) {
        const T* xi = x + i * static_cast<std::size_t>(cols);
        const T* dyi = dy + i * static_cast<std::size_t>(rows);
        for (int r = 0; r < rows; ++r) {
            const T g = dyi[r];
            T* dwr = dw + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            for (int c = 0; c < cols; ++c) dwr[c] += g * xi[c];
            db[r] += g;
        }
    }
}

// dx[i][c] (+)= sum_r dy[i][r] * W[r][c]
template <typename T, bool Accumulate>
void input_grad(const T* __restrict w, const T* __restrict dy, T* __restrict dx,
                std::size_t n, int rows, int cols) {
    for (std::size_t i = 0; i < n; ++i) {
        const T* dyi = dy + i * static_cast<std::size_t>(rows);
        T* dxi = dx + i * static_cast<std::size_t>(cols);
        if constexpr (!Accumulate) {
            for (int c = 0; c < cols; ++c) dxi[c] = T(0);
        }
        for (int r = 0; r < rows; ++r) {
            const T g = dyi[r];
            const T* wr = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            for (int c = 0; c < cols; ++c) dxi[c] += g * wr[c];
        }
    }
}

template <typename T>
void net_forward(const ModelConfig& cfg, const ParamLayout& lay,
                 const T* __restrict p, const T* __restrict coords,
                 std::size_t n, T* __restrict out) {
    const int W = cfg.hidden_width;
    const int d = cfg.in_dim;
    const int v = cfg.out_dim;
    const int B = cfg.num_res_blocks;
    const T w0 = static_cast<T>(cfg.omega0);

    constexpr std::size_t kTile = 512;
    const std::size_t wW = static_cast<std::size_t>(W);
    std::vector<T> h(kTile * wW), t1(kTile * wW), t2(kTile * wW);

    for (std::size_t base = 0; base < n; base += kTile) {
        const std::size_t ns = std::min(kTile, n - base);
        const T* x = coords + base * static_cast<std::size_t>(d);

        affine_forward(p + lay.w_in, p + lay.b_in, x, t1.data(), ns, W, d);
        sin_scale(t1.data(), h.data(), ns * wW, w0);

        for (int b = 0; b < B; ++b) {
            const auto& blk = lay.blocks[static_cast<std::size_t>(b)];
            affine_forward(p + blk.w1, p + blk.b1, h.data(), t1.data(), ns, W, W);
            sin_scale(t1.data(), t1.data(), ns * wW, w0);
            affine_forward(p + blk.w2, p + blk.b2, t1.data(), t2.data(), ns, W, W);
            T* hp = h.data();
            const T* zp = t2.data();
            for (std::size_t k = 0; k < ns * wW; ++k) hp[k] += std::sin(w0 * zp[k]);
        }

        affine_forward(p + lay.w_out, p + lay.b_out, h.data(),
                       out + base * static_cast<std::size_t>(v), ns, v, W);
    }
}

/// Forward with stored activations plus full backward over one contiguous
/// slice. Accumulates raw SSE gradients into grad (pre-zeroed, size P) and
/// returns the slice's sum of squared errors.
template <typename T>
double net_backward(const ModelConfig& cfg, const ParamLayout& lay,
                    const T* __restrict p, const T* __restrict coords,
                    const T* __restrict targets, std::size_t n,
                    T* __restrict grad, std::vector<T>& arena) {
    if (n == 0) return 0.0;
    const int W = cfg.hidden_width;
    const int d = cfg.in_dim;
    const int v = cfg.out_dim;
    const int B = cfg.num_res_blocks;
    const T w0 = static_cast<T>(cfg.omega0);
    const std::size_t nW = n * static_cast<std::size_t>(W);
    const std::size_t nv = n * static_cast<std::size_t>(v);

    // arena: z0 | h_0..h_B | per block (u, a, w) | dh | d1 | d2 | dy
    const std::size_t need =
        nW * (1 + static_cast<std::size_t>(B) + 1 + 3 * static_cast<std::size_t>(B) + 3) + nv;
    if (arena.size() < need) arena.assign(need, T(0));
    T* z0 = arena.data();
    T* hs = z0 + nW;                                   // (B+1) slabs
    T* us = hs + nW * static_cast<std::size_t>(B + 1);  // B slabs
    T* as = us + nW * static_cast<std::size_t>(B);
    T* ws = as + nW * static_cast<std::size_t>(B);
    T* dh = ws + nW * static_cast<std::size_t>(B);
    T* d1 = dh + nW;
    T* d2 = d1 + nW;
    T* dy = d2 + nW;

    affine_forward(p + lay.w_in, p + lay.b_in, coords, z0, n, W, d);
    sin_scale(z0, hs, nW, w0);
    for (int b = 0; b < B; ++b) {
        const auto& blk = lay.blocks[static_cast<std::size_t>(b)];
        const T* hin = hs + nW * static_cast<std::size_t>(b);
        T* u = us + nW * static_cast<std::size_t>(b);
        T* a = as + nW * static_cast<std::size_t>(b);
        T* w = ws + nW * static_cast<std::size_t>(b);
        T* hout = hs + nW * static_cast<std::size_t>(b + 1);
        affine_forward(p + blk.w1, p + blk.b1, hin, u, n, W, W);
        sin_scale(u, a, nW, w0);
        affine_forward(p + blk.w2, p + blk.b2, a, w, n, W, W);
        for (std::size_t k = 0; k < nW; ++k) hout[k] = hin[k] + std::sin(w0 * w[k]);
    }
    const T* h_last = hs + nW * static_cast<std::size_t>(B);
    affine_forward(p + lay.w_out, p + lay.b_out, h_last, dy, n, v, W);

    double sse = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
        const T diff = dy[k] - targets[k];
        dy[k] = diff;
        sse += static_cast<double>(diff) * static_cast<double>(diff);
    }

    accum_param_grad(h_last, dy, grad + lay.w_out, grad + lay.b_out, n, v, W);
    input_grad<T, false>(p + lay.w_out, dy, dh, n, v, W);

    for (int b = B - 1; b >= 0; --b) {
        const auto& blk = lay.blocks[static_cast<std::size_t>(b)];
        const T* hin = hs + nW * static_cast<std::size_t>(b);
        const T* u = us + nW * static_cast<std::size_t>(b);
        const T* a = as + nW * static_cast<std::size_t>(b);
        const T* w = ws + nW * static_cast<std::size_t>(b);

        sin_backward(dh, w, d1, nW, w0);  // d1 = dL/d(pre-act of second sine)
        accum_param_grad(a, d1, grad + blk.w2, grad + blk.b2, n, W, W);
        input_grad<T, false>(p + blk.w2, d1, d2, n, W, W);  // d2 = dL/da
        sin_backward(d2, u, d1, nW, w0);                    // d1 = dL/du
        accum_param_grad(hin, d1, grad + blk.w1, grad + blk.b1, n, W, W);
        // skip connection: dL/dh_in = dL/dh_out + W1^T dL/du
        input_grad<T, true>(p + blk.w1, d1, dh, n, W, W);
    }

    sin_backward(dh, z0, d1, nW, w0);
    accum_param_grad(coords, d1, grad + lay.w_in, grad + lay.b_in, n, W, d);
    return sse;
}

template <typename T>
std::vector<T> widen_params(std::span<const float> p) {
    std::vector<T> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<T>(p[i]);
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    if (in_dim != 2 && in_dim != 3) throw DataError("model in_dim must be 2 or 3");
    if (out_dim < 1) throw DataError("model out_dim must be >= 1");
    if (hidden_width < 1) throw DataError("hidden_width must be >= 1");
    if (num_res_blocks < 1) throw DataError("num_res_blocks must be >= 1");
    if (!(omega0 > 0.0f)) throw DataError("omega0 must be > 0");
}

std::int64_t ModelConfig::param_count() const {
    const std::int64_t W = hidden_width;
    const std::int64_t d = in_dim;
    const std::int64_t v = out_dim;
    const std::int64_t B = num_res_blocks;
    return (d * W + W) + B * 2 * (W * W + W) + (W * v + v);
}

ParamLayout ParamLayout::make(const ModelConfig& cfg) {
    const std::int64_t W = cfg.hidden_width;
    ParamLayout lay;
    std::int64_t off = 0;
    lay.w_in = off;
    off += W * cfg.in_dim;
    lay.b_in = off;
    off += W;
    lay.blocks.resize(static_cast<std::size_t>(cfg.num_res_blocks));
    for (auto& blk : lay.blocks) {
        blk.w1 = off;
        off += W * W;
        blk.b1 = off;
        off += W;
        blk.w2 = off;
        off += W * W;
        blk.b2 = off;
        off += W;
    }
    lay.w_out = off;
    off += W * cfg.out_dim;
    lay.b_out = off;
    off += cfg.out_dim;
    lay.total = off;
    return lay;
}

ResidualSirenModel::ResidualSirenModel(ModelConfig cfg, Normalizer normalizer)
    : cfg_(cfg), norm_(std::move(normalizer)) {
    cfg_.validate();
    if (norm_.dims() != cfg_.in_dim) {
        throw DataError("normalizer axis count does not match model in_dim");
    }
    if (norm_.vars() != cfg_.out_dim) {
        throw DataError("normalizer variable count does not match model out_dim");
    }
    for (auto s : norm_.shape) {
        if (s < 2) throw DataError("normalizer axes need at least 2 points");
    }
    layout_ = ParamLayout::make(cfg_);
    params_.assign(static_cast<std::size_t>(layout_.total), 0.0f);
}

void ResidualSirenModel::forward(std::span<const float> coords, std::size_t n,
                                 std::span<float> out, ParallelRunner* pool) const {
    if (coords.size() < n * static_cast<std::size_t>(cfg_.in_dim) ||
        out.size() < n * static_cast<std::size_t>(cfg_.out_dim)) {
        throw DataError("forward: buffer size mismatch");
    }
    auto run_slice = [&](std::size_t begin, std::size_t end) {
        if (begin >= end) return;
        net_forward<float>(cfg_, layout_, params_.data(),
                           coords.data() + begin * static_cast<std::size_t>(cfg_.in_dim),
                           end - begin,
                           out.data() + begin * static_cast<std::size_t>(cfg_.out_dim));
    };
    if (pool == nullptr || pool->thread_count() == 1) {
        run_slice(0, n);
    } else {
        pool->run(n, [&](int, std::size_t b, std::size_t e) { run_slice(b, e); });
    }
}

ResidualSirenModel init_model(const ModelConfig& cfg, const Normalizer& norm) {
    ResidualSirenModel model(cfg, norm);
    const auto& lay = model.layout();
    auto p = model.params();
    Rng rng(cfg.init_seed);

    auto fill_uniform = [&](std::int64_t off, std::int64_t count, double bound) {
        for (std::int64_t i = 0; i < count; ++i) {
            p[static_cast<std::size_t>(off + i)] =
                static_cast<float>((2.0 * rng.uniform01() - 1.0) * bound);
        }
    };

    const double W = cfg.hidden_width;
    const double hidden_bound = std::sqrt(6.0 / W) / static_cast<double>(cfg.omega0);
    const double out_bound = std::sqrt(6.0 / W);

    fill_uniform(lay.w_in, static_cast<std::int64_t>(cfg.hidden_width) * cfg.in_dim,
                 1.0 / cfg.in_dim);
    for (const auto& blk : lay.blocks) {
        fill_uniform(blk.w1, static_cast<std::int64_t>(cfg.hidden_width) * cfg.hidden_width,
                     hidden_bound);
        fill_uniform(blk.w2, static_cast<std::int64_t>(cfg.hidden_width) * cfg.hidden_width,
                     hidden_bound);
    }
    fill_uniform(lay.w_out, static_cast<std::int64_t>(cfg.hidden_width) * cfg.out_dim,
                 out_bound);
    return model;
}

double backward(const ResidualSirenModel& model, std::span<const float> coords,
                std::span<const float> targets, std::size_t n,
                std::span<float> grad, ParallelRunner& pool, GradScratch& scratch) {
    const auto& cfg = model.config();
    const auto& lay = model.layout();
    if (n == 0) throw DataError("backward: empty batch");
    if (coords.size() < n * static_cast<std::size_t>(cfg.in_dim) ||
        targets.size() < n * static_cast<std::size_t>(cfg.out_dim) ||
        grad.size() != static_cast<std::size_t>(lay.total)) {
        throw DataError("backward: buffer size mismatch");
    }

    const int shards = pool.thread_count();
    scratch.shard_grad.resize(static_cast<std::size_t>(shards));
    scratch.shard_arena.resize(static_cast<std::size_t>(shards));
    scratch.shard_sse.assign(static_cast<std::size_t>(shards), 0.0);
    const auto P = static_cast<std::size_t>(lay.total);

    pool.run(n, [&](int shard, std::size_t begin, std::size_t end) {
        auto& g = scratch.shard_grad[static_cast<std::size_t>(shard)];
        g.assign(P, 0.0f);
        if (begin >= end) return;
        scratch.shard_sse[static_cast<std::size_t>(shard)] = net_backward<float>(
            cfg, lay, model.params().data(),
            coords.data() + begin * static_cast<std::size_t>(cfg.in_dim),
            targets.data() + begin * static_cast<std::size_t>(cfg.out_dim),
            end - begin, g.data(), scratch.shard_arena[static_cast<std::size_t>(shard)]);
    });

    // Combine shards in index order (fixed reduction order), then apply the
    // mean-loss scale 2/(n*v).
    const float scale =
        static_cast<float>(2.0 / (static_cast<double>(n) * cfg.out_dim));
    const auto* g0 = scratch.shard_grad[0].data();
    for (std::size_t i = 0; i < P; ++i) grad[i] = g0[i];
    for (int s = 1; s < shards; ++s) {
        const auto* gs = scratch.shard_grad[static_cast<std::size_t>(s)].data();
        for (std::size_t i = 0; i < P; ++i) grad[i] += gs[i];
    }
    for (std::size_t i = 0; i < P; ++i) grad[i] *= scale;

    double sse = 0.0;
    for (int s = 0; s < shards; ++s) sse += scratch.shard_sse[static_cast<std::size_t>(s)];
    return sse / (static_cast<double>(n) * cfg.out_dim);
}

double loss_f64(const ModelConfig& cfg, std::span<const double> params,
                std::span<const double> coords, std::span<const double> targets,
                std::size_t n) {
    const ParamLayout lay = ParamLayout::make(cfg);
    std::vector<double> out(n * static_cast<std::size_t>(cfg.out_dim));
    net_forward<double>(cfg, lay, params.data(), coords.data(), n, out.data());
    double sse = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double diff = out[k] - targets[k];
        sse += diff * diff;
    }
    return sse / (static_cast<double>(n) * cfg.out_dim);
}

double backward_f64(const ModelConfig& cfg, std::span<const double> params,
                    std::span<const double> coords,
                    std::span<const double> targets, std::size_t n,
                    std::span<double> grad) {
    const ParamLayout lay = ParamLayout::make(cfg);
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> arena;
    double sse = net_backward<double>(cfg, lay, params.data(), coords.data(),
                                      targets.data(), n, grad.data(), arena);
    const double scale = 2.0 / (static_cast<double>(n) * cfg.out_dim);
    for (auto& g : grad) g *= scale;
    return sse / (static_cast<double>(n) * cfg.out_dim);
}

std::size_t save_model(const ResidualSirenModel& model,
                       const std::filesystem::path& path) {
    const auto& cfg = model.config();
    const auto& norm = model.normalizer();

    json header;
    header["config"] = {{"in_dim", cfg.in_dim},
                        {"out_dim", cfg.out_dim},
                        {"hidden_width", cfg.hidden_width},
                        {"num_res_blocks", cfg.num_res_blocks},
                        {"omega0", cfg.omega0},
                        {"init_seed", cfg.init_seed}};
    header["grid_shape"] = norm.shape;
    header["variables"] = json::array();
    for (const auto& v : norm.variables) {
        header["variables"].push_back(
            {{"name", v.name}, {"min", v.raw_min}, {"max", v.raw_max}});
    }
    const std::string hdr = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file: " + path.string());
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    const auto hdr_len = static_cast<std::uint32_t>(hdr.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hdr_len), 4);
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    auto p = model.params();
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * 4));
    if (!out) throw DataError("write failed: " + path.string());
    return 12 + hdr.size() + p.size() * 4;
}

ResidualSirenModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open model file: " + path.string());
    const auto size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    if (size < 12) throw DataError("model file truncated: " + path.string());

    char magic[4];
    std::uint32_t version = 0, hdr_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&hdr_len), 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("bad magic in model file: " + path.string());
    }
    if (version != kVersion) {
        throw DataError("unsupported model version " + std::to_string(version));
    }
    if (size < 12 + static_cast<std::uint64_t>(hdr_len)) {
        throw DataError("model header truncated: " + path.string());
    }
    std::string hdr(hdr_len, '\0');
    in.read(hdr.data(), hdr_len);

    json header;
    try {
        header = json::parse(hdr);
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model header: ") + e.what());
    }

    ModelConfig cfg;
    Normalizer norm;
    try {
        const auto& c = header.at("config");
        cfg.in_dim = c.at("in_dim").get<int>();
        cfg.out_dim = c.at("out_dim").get<int>();
        cfg.hidden_width = c.at("hidden_width").get<int>();
        cfg.num_res_blocks = c.at("num_res_blocks").get<int>();
        cfg.omega0 = c.at("omega0").get<float>();
        cfg.init_seed = c.at("init_seed").get<std::uint64_t>();
        norm.shape = header.at("grid_shape").get<std::vector<std::int64_t>>();
        for (const auto& v : header.at("variables")) {
            VariableMeta meta;
            meta.name = v.at("name").get<std::string>();
            meta.raw_min = v.at("min").get<double>();
            meta.raw_max = v.at("max").get<double>();
            norm.variables.push_back(std::move(meta));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model header: ") + e.what());
    }

    ResidualSirenModel model(cfg, norm);
    const auto payload = size - 12 - hdr_len;
    const auto expected = static_cast<std::uint64_t>(model.layout().total) * 4;
    if (payload != expected) {
        throw DataError("payload length mismatch: " + path.string() + " has " +
                        std::to_string(payload) + " bytes, expected " +
                        std::to_string(expected));
    }
    in.read(reinterpret_cast<char*>(model.params().data()),
            static_cast<std::streamsize>(expected));
    if (!in) throw DataError("short read on model file: " + path.string());
    return model;
}

double compression_ratio(std::size_t model_bytes, std::int64_t point_count,
                         int variable_count) {
    if (model_bytes == 0) throw DataError("compression_ratio: zero model size");
    return 4.0 * static_cast<double>(point_count) *
           static_cast<double>(variable_count) / static_cast<double>(model_bytes);
}

double compression_ratio(std::size_t model_bytes, const MultiField& field) {
    return compression_ratio(model_bytes, field.point_count(),
                             field.variable_count());
}

MultiField reconstruct_field(const ResidualSirenModel& model,
                             ParallelRunner* pool) {
    const auto& norm = model.normalizer();
    GridSpec grid;
    grid.dims = norm.dims();
    grid.shape = norm.shape;
    grid.validate();

    const int d = grid.dims;
    const int v = norm.vars();
    const std::int64_t n = grid.point_count();

    std::vector<std::vector<float>> data(static_cast<std::size_t>(v));
    for (auto& arr : data) arr.resize(static_cast<std::size_t>(n));

    constexpr std::int64_t kTile = 8192;
    std::vector<float> coords(static_cast<std::size_t>(kTile) * d);
    std::vector<float> out(static_cast<std::size_t>(kTile) * v);
    std::int64_t idx[3] = {0, 0, 0};

    for (std::int64_t base = 0; base < n; base += kTile) {
        const std::int64_t ns = std::min(kTile, n - base);
        for (std::int64_t p = 0; p < ns; ++p) {
            grid.unflatten(base + p, idx);
            for (int a = 0; a < d; ++a) {
                coords[static_cast<std::size_t>(p * d + a)] =
                    static_cast<float>(norm.coord(a, static_cast<double>(idx[a])));
            }
        }
        model.forward(coords, static_cast<std::size_t>(ns), out, pool);
        for (std::int64_t p = 0; p < ns; ++p) {
            for (int i = 0; i < v; ++i) {
                double y = static_cast<double>(out[static_cast<std::size_t>(p * v + i)]);
                y = std::clamp(y, -1.0, 1.0);  // clamp before denormalizing
                data[static_cast<std::size_t>(i)][static_cast<std::size_t>(base + p)] =
                    static_cast<float>(norm.value_inv(i, y));
            }
        }
    }

    std::vector<std::string> names;
    for (const auto& meta : norm.variables) names.push_back(meta.name);
    return MultiField(std::move(grid), std::move(names), std::move(data));
}

}  // namespace mvrep

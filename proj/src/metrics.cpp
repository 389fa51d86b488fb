#include "mvrep/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mvrep {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw DataError("metric inputs have different lengths");
}

inline int histogram_bin(double value, double lo, double hi, int bins) {
    if (!(hi > lo)) return 0;
    int b = static_cast<int>((value - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
}

/// MI in nats from a joint histogram; MI(i,i) handled by the caller.
double mi_from_joint(const std::vector<std::int64_t>& joint, int bins,
                     std::int64_t n) {
    std::vector<std::int64_t> px(static_cast<std::size_t>(bins), 0);
    std::vector<std::int64_t> py(static_cast<std::size_t>(bins), 0);
    for (int x = 0; x < bins; ++x) {
        for (int y = 0; y < bins; ++y) {
            const auto c = joint[static_cast<std::size_t>(x) * bins + y];
            px[static_cast<std::size_t>(x)] += c;
            py[static_cast<std::size_t>(y)] += c;
        }
    }
    const double dn = static_cast<double>(n);
    double mi = 0.0;
    for (int x = 0; x < bins; ++x) {
        if (px[static_cast<std::size_t>(x)] == 0) continue;
        for (int y = 0; y < bins; ++y) {
            const auto c = joint[static_cast<std::size_t>(x) * bins + y];
            if (c == 0) continue;  // zero-probability cells skipped
            const double pxy = static_cast<double>(c) / dn;
            const double mx = static_cast<double>(px[static_cast<std::size_t>(x)]) / dn;
            const double my = static_cast<double>(py[static_cast<std::size_t>(y)]) / dn;
            mi += pxy * std::log(pxy / (mx * my));
        }
    }
    return mi;
}

double marginal_entropy(std::span<const float> values, double lo, double hi,
                        int bins) {
    std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
    for (float v : values) {
        ++hist[static_cast<std::size_t>(histogram_bin(v, lo, hi, bins))];
    }
    const double dn = static_cast<double>(values.size());
    double h = 0.0;
    for (auto c : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / dn;
        h -= p * std::log(p);
    }
    return h;
}

const double kGaussian11[11] = {
    // 1D Gaussian, sigma = 1.5, normalized below when the 2D window is built
    std::exp(-25.0 / 4.5), std::exp(-16.0 / 4.5), std::exp(-9.0 / 4.5),
    std::exp(-4.0 / 4.5),  std::exp(-1.0 / 4.5),  1.0,
    std::exp(-1.0 / 4.5),  std::exp(-4.0 / 4.5),  std::exp(-9.0 / 4.5),
    std::exp(-16.0 / 4.5), std::exp(-25.0 / 4.5)};

std::vector<double> luminance(const Image& img) {
    std::vector<double> out(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const auto* p = img.at(x, y);
            out[static_cast<std::size_t>(y) * img.width + x] =
                0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
    }
    return out;
}

}  // namespace

double psnr(std::span<const float> reference, std::span<const float> candidate,
            double ref_min, double ref_max) {
    require_same_length(reference.size(), candidate.size());
    if (reference.empty()) throw DataError("psnr: empty input");
    double sse = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = static_cast<double>(reference[i]) -
                         static_cast<double>(candidate[i]);
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double range = ref_max - ref_min;
    if (!(range > 0.0)) {
        throw NumericError("psnr: degenerate reference range with nonzero error");
    }
    return 20.0 * std::log10(range / std::sqrt(mse));
}

ErrorStats error_stats(std::span<const float> reference,
                       std::span<const float> candidate,
                       const VariableMeta& ref_meta, double tol) {
    require_same_length(reference.size(), candidate.size());
    Normalizer norm;
    norm.shape = {2, 2};  // value transform only
    norm.variables = {ref_meta};

    std::vector<double> errs(reference.size());
    std::size_t above = 0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double r = norm.value_fwd(0, static_cast<double>(reference[i]));
        const double c = norm.value_fwd(0, static_cast<double>(candidate[i]));
        const double e = std::abs(c - r);
        errs[i] = e;
        max_abs = std::max(max_abs, e);
        if (e > tol) ++above;
    }
    std::sort(errs.begin(), errs.end());
    // nearest-rank percentile: ceil(0.95 * n)-th smallest, 1-based
    const auto n = errs.size();
    auto rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);

    ErrorStats stats;
    stats.max_abs = max_abs;
    stats.p95_abs = errs[rank - 1];
    stats.frac_above_tol = static_cast<double>(above) / static_cast<double>(n);
    return stats;
}

std::vector<float> gradient_magnitude(const MultiField& field, int var) {
    const auto& grid = field.grid();
    for (auto s : grid.shape) {
        if (s < 3) throw DataError("gradient needs >=3 points per axis");
    }
    const auto values = field.values(var);
    const int d = grid.dims;
    std::vector<float> out(static_cast<std::size_t>(grid.point_count()));

    std::int64_t stride[3] = {0, 0, 0};
    stride[d - 1] = 1;
    for (int a = d - 2; a >= 0; --a) {
        stride[a] = stride[a + 1] * grid.shape[static_cast<std::size_t>(a + 1)];
    }

    std::int64_t idx[3] = {0, 0, 0};
    const std::int64_t n = grid.point_count();
    for (std::int64_t f = 0; f < n; ++f) {
        grid.unflatten(f, idx);
        double sq = 0.0;
        for (int a = 0; a < d; ++a) {
            const auto s = grid.shape[static_cast<std::size_t>(a)];
            double partial;
            if (idx[a] == 0) {
                partial = static_cast<double>(values[static_cast<std::size_t>(f + stride[a])]) -
                          static_cast<double>(values[static_cast<std::size_t>(f)]);
            } else if (idx[a] == s - 1) {
                partial = static_cast<double>(values[static_cast<std::size_t>(f)]) -
                          static_cast<double>(values[static_cast<std::size_t>(f - stride[a])]);
            } else {
                partial = 0.5 * (static_cast<double>(values[static_cast<std::size_t>(f + stride[a])]) -
                                 static_cast<double>(values[static_cast<std::size_t>(f - stride[a])]));
            }
            sq += partial * partial;
        }
        out[static_cast<std::size_t>(f)] = static_cast<float>(std::sqrt(sq));
    }
    return out;
}

std::vector<double> corr_matrix(const MultiField& field) {
    const int v = field.variable_count();
    const std::int64_t n = field.point_count();
    const double dn = static_cast<double>(n);

    std::vector<double> mean(static_cast<std::size_t>(v));
    std::vector<double> sd(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i) {
        double s = 0.0;
        for (float x : field.values(i)) s += static_cast<double>(x);
        mean[static_cast<std::size_t>(i)] = s / dn;
        double ss = 0.0;
        for (float x : field.values(i)) {
            const double c = static_cast<double>(x) - mean[static_cast<std::size_t>(i)];
            ss += c * c;
        }
        sd[static_cast<std::size_t>(i)] = std::sqrt(ss / dn);
    }

    std::vector<double> corr(static_cast<std::size_t>(v) * v, 0.0);
    for (int i = 0; i < v; ++i) {
        corr[static_cast<std::size_t>(i) * v + i] =
            sd[static_cast<std::size_t>(i)] > 0.0 ? 1.0 : 0.0;
        for (int j = i + 1; j < v; ++j) {
            double rho = 0.0;
            if (sd[static_cast<std::size_t>(i)] > 0.0 && sd[static_cast<std::size_t>(j)] > 0.0) {
                const auto xi = field.values(i);
                const auto xj = field.values(j);
                double cov = 0.0;
                for (std::int64_t p = 0; p < n; ++p) {
                    cov += (static_cast<double>(xi[static_cast<std::size_t>(p)]) -
                            mean[static_cast<std::size_t>(i)]) *
                           (static_cast<double>(xj[static_cast<std::size_t>(p)]) -
                            mean[static_cast<std::size_t>(j)]);
                }
                cov /= dn;
                rho = std::clamp(cov / (sd[static_cast<std::size_t>(i)] *
                                        sd[static_cast<std::size_t>(j)]),
                                 -1.0, 1.0);
            }
            corr[static_cast<std::size_t>(i) * v + j] = rho;
            corr[static_cast<std::size_t>(j) * v + i] = rho;
        }
    }
    return corr;
}

std::vector<double> mi_matrix(const MultiField& field, int bins) {
    if (bins < 2) throw DataError("mi_matrix needs >=2 bins");
    const int v = field.variable_count();
    const std::int64_t n = field.point_count();
    std::vector<double> mi(static_cast<std::size_t>(v) * v, 0.0);
    std::vector<std::int64_t> joint(static_cast<std::size_t>(bins) * bins);

    for (int i = 0; i < v; ++i) {
        const auto& mi_meta = field.variable(i);
        mi[static_cast<std::size_t>(i) * v + i] =
            marginal_entropy(field.values(i), mi_meta.raw_min, mi_meta.raw_max, bins);
        for (int j = i + 1; j < v; ++j) {
            const auto& mj_meta = field.variable(j);
            std::fill(joint.begin(), joint.end(), 0);
            const auto xi = field.values(i);
            const auto xj = field.values(j);
            for (std::int64_t p = 0; p < n; ++p) {
                const int bx = histogram_bin(xi[static_cast<std::size_t>(p)],
                                             mi_meta.raw_min, mi_meta.raw_max, bins);
                const int by = histogram_bin(xj[static_cast<std::size_t>(p)],
                                             mj_meta.raw_min, mj_meta.raw_max, bins);
                ++joint[static_cast<std::size_t>(bx) * bins + by];
            }
            const double value = mi_from_joint(joint, bins, n);
            mi[static_cast<std::size_t>(i) * v + j] = value;
            mi[static_cast<std::size_t>(j) * v + i] = value;
        }
    }
    return mi;
}

DependencyError dependency_error(const MultiField& reference,
                                 const MultiField& candidate, int bins) {
    if (reference.grid() != candidate.grid() ||
        reference.variable_count() != candidate.variable_count()) {
        throw DataError("dependency_error: field mismatch");
    }
    const int v = reference.variable_count();
    DependencyError result;
    result.vars = v;

    const auto corr_ref = corr_matrix(reference);
    const auto corr_cand = corr_matrix(candidate);
    const auto mi_ref = mi_matrix(reference, bins);
    const auto mi_cand = mi_matrix(candidate, bins);

    result.corr_err.resize(static_cast<std::size_t>(v) * v);
    result.mi_err.resize(static_cast<std::size_t>(v) * v);
    for (std::size_t k = 0; k < result.corr_err.size(); ++k) {
        result.corr_err[k] = std::abs(corr_ref[k] - corr_cand[k]);
        result.mi_err[k] = std::abs(mi_ref[k] - mi_cand[k]);
    }

    double sum_corr = 0.0, sum_mi = 0.0;
    int pairs = 0;
    for (int i = 0; i < v; ++i) {
        for (int j = i + 1; j < v; ++j) {
            sum_corr += result.corr_err[static_cast<std::size_t>(i) * v + j];
            sum_mi += result.mi_err[static_cast<std::size_t>(i) * v + j];
            ++pairs;
        }
    }
    if (pairs > 0) {
        result.mean_corr_err = sum_corr / pairs;
        result.mean_mi_err = sum_mi / pairs;
    }
    return result;
}

QueryPredicate QueryPredicate::parse(std::string_view text) {
    struct Bound {
        bool has_low = false, has_high = false;
        double low = 0, high = 0;
        std::size_t order = 0;
    };
    std::vector<std::pair<std::string, Bound>> bounds;

    auto fail = [&](std::size_t pos, const std::string& what) {
        throw DataError("predicate parse error at offset " + std::to_string(pos) +
                        ": " + what);
    };

    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };

    bool expect_clause = true;
    while (true) {
        skip_ws();
        if (i >= text.size()) {
            if (expect_clause) fail(i, "expected a comparison");
            break;
        }
        // variable
        std::size_t start = i;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_' ||
                text[i] == '.')) {
            ++i;
        }
        if (i == start) fail(i, "expected a variable name");
        std::string var(text.substr(start, i - start));

        skip_ws();
        if (i >= text.size() || (text[i] != '<' && text[i] != '>')) {
            fail(i, "expected '<' or '>'");
        }
        const char op = text[i++];
        skip_ws();
        if (i < text.size() && (text[i] == '<' || text[i] == '>' || text[i] == '=')) {
            fail(i, "expected a number");
        }
        start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '&') {
            ++i;
        }
        double value = 0;
        try {
            std::size_t used = 0;
            value = std::stod(std::string(text.substr(start, i - start)), &used);
            if (used != i - start) fail(start, "expected a number");
        } catch (const std::exception&) {
            fail(start, "expected a number");
        }

        Bound* b = nullptr;
        for (auto& [name, bound] : bounds) {
            if (name == var) b = &bound;
        }
        if (b == nullptr) {
            bounds.emplace_back(var, Bound{});
            b = &bounds.back().second;
            b->order = bounds.size();
        }
        if (op == '>') {
            if (b->has_low) fail(start, "duplicate lower bound for " + var);
            b->has_low = true;
            b->low = value;
        } else {
            if (b->has_high) fail(start, "duplicate upper bound for " + var);
            b->has_high = true;
            b->high = value;
        }

        skip_ws();
        if (i >= text.size()) break;
        if (text[i] != '&') fail(i, "expected '&'");
        ++i;
        expect_clause = true;
    }

    QueryPredicate pred;
    for (const auto& [name, b] : bounds) {
        if (!b.has_low || !b.has_high) {
            throw DataError("predicate needs both bounds for variable '" + name +
                            "' (VAR > a & VAR < b)");
        }
        if (!(b.low < b.high)) {
            throw DataError("predicate bounds for '" + name +
                            "' must satisfy low < high");
        }
        pred.clauses.push_back({name, b.low, b.high});
    }
    if (pred.clauses.empty()) throw DataError("empty predicate");
    return pred;
}

std::string QueryPredicate::to_string() const {
    std::string out;
    for (const auto& c : clauses) {
        if (!out.empty()) out += " & ";
        out += c.variable + " > " + std::to_string(c.low) + " & " + c.variable +
               " < " + std::to_string(c.high);
    }
    return out;
}

std::vector<std::uint8_t> qdv(const MultiField& field,
                              const QueryPredicate& predicate) {
    const std::int64_t n = field.point_count();
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 1);
    for (const auto& clause : predicate.clauses) {
        const int var = field.variable_index(clause.variable);
        const auto values = field.values(var);
        for (std::int64_t p = 0; p < n; ++p) {
            const double x = static_cast<double>(values[static_cast<std::size_t>(p)]);
            if (!(x > clause.low && x < clause.high)) {
                mask[static_cast<std::size_t>(p)] = 0;
            }
        }
    }
    return mask;
}

double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    require_same_length(a.size(), b.size());
    std::int64_t ca = 0, cb = 0, inter = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool xa = a[i] != 0;
        const bool xb = b[i] != 0;
        ca += xa;
        cb += xb;
        inter += (xa && xb);
    }
    if (ca + cb == 0) return 1.0;  // both empty
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DataError("ssim: image size mismatch");
    }
    if (a.width < 11 || a.height < 11) {
        throw DataError("ssim: images must be at least 11x11");
    }
    const auto la = luminance(a);
    const auto lb = luminance(b);
    const int w = a.width, h = a.height;

    // separable Gaussian filtering over fully interior windows
    double norm = 0.0;
    for (double g : kGaussian11) norm += g;
    double win[11];
    for (int i = 0; i < 11; ++i) win[i] = kGaussian11[i] / norm;

    auto filter = [&](const std::vector<double>& src) {
        // horizontal then vertical; only the valid region is used later
        std::vector<double> tmp(src.size(), 0.0);
        for (int y = 0; y < h; ++y) {
            for (int x = 5; x < w - 5; ++x) {
                double acc = 0.0;
                for (int k = -5; k <= 5; ++k) {
                    acc += win[k + 5] * src[static_cast<std::size_t>(y) * w + x + k];
                }
                tmp[static_cast<std::size_t>(y) * w + x] = acc;
            }
        }
        std::vector<double> out(src.size(), 0.0);
        for (int y = 5; y < h - 5; ++y) {
            for (int x = 5; x < w - 5; ++x) {
                double acc = 0.0;
                for (int k = -5; k <= 5; ++k) {
                    acc += win[k + 5] * tmp[static_cast<std::size_t>(y + k) * w + x];
                }
                out[static_cast<std::size_t>(y) * w + x] = acc;
            }
        }
        return out;
    };

    std::vector<double> aa(la.size()), bb(la.size()), ab(la.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        aa[i] = la[i] * la[i];
        bb[i] = lb[i] * lb[i];
        ab[i] = la[i] * lb[i];
    }
    const auto mu_a = filter(la);
    const auto mu_b = filter(lb);
    const auto m_aa = filter(aa);
    const auto m_bb = filter(bb);
    const auto m_ab = filter(ab);

    constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
    constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 5; y < h - 5; ++y) {
        for (int x = 5; x < w - 5; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double ma = mu_a[i], mb = mu_b[i];
            const double va = m_aa[i] - ma * ma;
            const double vb = m_bb[i] - mb * mb;
            const double cov = m_ab[i] - ma * mb;
            const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
            const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
            sum += num / den;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

QualityReport quality_report(const MultiField& reference,
                             const MultiField& candidate) {
    if (reference.grid() != candidate.grid() ||
        reference.variable_count() != candidate.variable_count()) {
        throw DataError("quality_report: field mismatch");
    }
    QualityReport report;
    double sum_psnr = 0.0, sum_max = 0.0, sum_p95 = 0.0, sum_frac = 0.0;
    for (int v = 0; v < reference.variable_count(); ++v) {
        const auto& meta = reference.variable(v);
        VariableQuality q;
        q.name = meta.name;
        q.psnr_db = psnr(reference.values(v), candidate.values(v), meta.raw_min,
                         meta.raw_max);
        q.stats = error_stats(reference.values(v), candidate.values(v), meta);
        sum_psnr += q.psnr_db;
        sum_max += q.stats.max_abs;
        sum_p95 += q.stats.p95_abs;
        sum_frac += q.stats.frac_above_tol;
        report.per_variable.push_back(std::move(q));
    }
    const double nv = static_cast<double>(reference.variable_count());
    report.mean_psnr = sum_psnr / nv;
    report.mean_max_abs = sum_max / nv;
    report.mean_p95_abs = sum_p95 / nv;
    report.mean_frac_above_tol = sum_frac / nv;
    report.overall_frac_above_tol = sum_frac / nv;  // equal-length variables
    return report;
}

GradientReport gradient_report(const MultiField& reference,
                               const MultiField& candidate) {
    if (reference.grid() != candidate.grid() ||
        reference.variable_count() != candidate.variable_count()) {
        throw DataError("gradient_report: field mismatch");
    }
    GradientReport report;
    double sum = 0.0;
    for (int v = 0; v < reference.variable_count(); ++v) {
        const auto g_ref = gradient_magnitude(reference, v);
        const auto g_cand = gradient_magnitude(candidate, v);
        const auto [lo, hi] = std::minmax_element(g_ref.begin(), g_ref.end());
        const double db = psnr(g_ref, g_cand, static_cast<double>(*lo),
                               static_cast<double>(*hi));
        report.per_variable.emplace_back(reference.variable(v).name, db);
        sum += db;
    }
    report.mean_psnr = sum / static_cast<double>(reference.variable_count());
    return report;
}

}  // namespace mvrep

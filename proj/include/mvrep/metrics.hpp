#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvrep/contour.hpp"
#include "mvrep/field.hpp"
#include "mvrep/render.hpp"

namespace mvrep {

/// PSNR = 20*log10(range / RMSE); identical arrays give +infinity. A
/// degenerate reference range with nonzero error has no meaningful peak and
/// throws NumericError.
double psnr(std::span<const float> reference, std::span<const float> candidate,
            double ref_min, double ref_max);

/// Absolute-error statistics on [-1,1]-scaled values (both arrays mapped
/// through the reference variable's normalizer). p95 is nearest-rank.
struct ErrorStats {
    double max_abs = 0.0;
    double p95_abs = 0.0;
    double frac_above_tol = 0.0;
};
ErrorStats error_stats(std::span<const float> reference,
                       std::span<const float> candidate,
                       const VariableMeta& ref_meta, double tol = 0.05);

/// Per-point gradient magnitude: central differences in the interior,
/// one-sided at boundaries, unit grid spacing.
std::vector<float> gradient_magnitude(const MultiField& field, int var);

/// Pearson correlation over all grid points, v x v row-major. Degenerate
/// variables contribute 0 (flagged by convention).
std::vector<double> corr_matrix(const MultiField& field);

/// Mutual information from the joint bins x bins histogram over each
/// variable's raw range, natural-log units; MI(i,i) is the marginal histogram
/// entropy.
std::vector<double> mi_matrix(const MultiField& field, int bins = 128);

struct DependencyError {
    int vars = 0;
    std::vector<double> corr_err;  // |delta corr|, v x v
    std::vector<double> mi_err;    // |delta MI|, v x v
    double mean_corr_err = 0.0;    // mean over unordered pairs i < j
    double mean_mi_err = 0.0;
};
DependencyError dependency_error(const MultiField& reference,
                                 const MultiField& candidate, int bins = 128);

// ---------------------------------------------------------------------------
// Query-driven selection.
// ---------------------------------------------------------------------------

struct QueryClause {
    std::string variable;
    double low = 0.0;
    double high = 0.0;  // strict bounds: low < value < high
};

struct QueryPredicate {
    std::vector<QueryClause> clauses;

    /// Grammar: VAR > a & VAR < b [& ...]; every variable needs exactly one
    /// lower and one upper bound. Throws DataError with the byte offset on
    /// parse errors.
    static QueryPredicate parse(std::string_view text);
    std::string to_string() const;
};

/// Mask of points satisfying every clause (strict inequalities).
std::vector<std::uint8_t> qdv(const MultiField& field,
                              const QueryPredicate& predicate);

/// Dice similarity 2|A&B| / (|A|+|B|); two empty masks give 1.
double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Standard SSIM on 8-bit luminance: 11x11 Gaussian window (sigma 1.5),
/// K1=0.01, K2=0.03, L=255, averaged over fully interior windows. Inputs must
/// have equal dimensions of at least 11x11.
double ssim(const Image& a, const Image& b);

// ---------------------------------------------------------------------------
// Report assembly.
// ---------------------------------------------------------------------------

struct VariableQuality {
    std::string name;
    double psnr_db = 0.0;
    ErrorStats stats;
};

struct QualityReport {
    std::vector<VariableQuality> per_variable;
    double mean_psnr = 0.0;
    double mean_max_abs = 0.0;
    double mean_p95_abs = 0.0;
    double mean_frac_above_tol = 0.0;
    double overall_frac_above_tol = 0.0;  // pooled over all variables
};
QualityReport quality_report(const MultiField& reference,
                             const MultiField& candidate);

struct GradientReport {
    std::vector<std::pair<std::string, double>> per_variable;  // name, psnr
    double mean_psnr = 0.0;
};
GradientReport gradient_report(const MultiField& reference,
                               const MultiField& candidate);

}  // namespace mvrep

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvrep/field.hpp"

namespace mvrep {

/// Isocontour geometry in grid (index) coordinates. 2D contours carry line
/// segments, 3D contours triangles; vertices are welded per grid edge.
struct ContourSet {
    int dims = 0;
    std::string variable;
    double isovalue = 0.0;
    std::vector<std::array<double, 3>> vertices;  // z = 0 for 2D
    std::vector<std::array<int, 2>> segments;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return vertices.empty(); }
};

/// Marching squares (2D) / marching cubes (3D, 256-case table) with linear
/// edge interpolation. Returns an empty set when the isovalue misses the data
/// range.
ContourSet extract_contour(const MultiField& field, int var, double isovalue);

/// chamfer = mean_a min_b ||a-b|| + mean_b min_a ||a-b|| (Euclidean,
/// non-squared). Throws DataError("contour missing") on an empty set.
double chamfer(std::span<const std::array<double, 3>> a,
               std::span<const std::array<double, 3>> b, int dims);

/// max of the two directed maximum nearest-neighbor distances.
double hausdorff(std::span<const std::array<double, 3>> a,
                 std::span<const std::array<double, 3>> b, int dims);

struct ContourStudyVariable {
    std::string name;
    double mean_chamfer = 0.0;
    double mean_hausdorff = 0.0;
    int used_isovalues = 0;
    int excluded_isovalues = 0;  // empty contour on either side
};

struct ContourStudyResult {
    std::vector<ContourStudyVariable> per_variable;
    double mean_chamfer = 0.0;    // mean of variable means
    double mean_hausdorff = 0.0;
    int total_excluded = 0;
};

/// Per variable, draws n_isovalues uniformly in the reference variable's raw
/// range (seeded, full range), extracts contours from both fields and averages
/// the distances. Empty-contour isovalues are excluded and counted.
ContourStudyResult contour_study(const MultiField& reference,
                                 const MultiField& candidate, int n_isovalues,
                                 std::uint64_t seed);

}  // namespace mvrep

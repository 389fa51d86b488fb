#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvrep/util.hpp"

namespace mvrep {

/// Regular grid description. Storage is row-major with the last axis fastest,
/// matching the raw f32le data files.
struct GridSpec {
    int dims = 0;
    std::vector<std::int64_t> shape;  // per-axis point counts, each >= 2

    std::int64_t point_count() const;
    void validate() const;  // throws DataError on violation

    std::int64_t flatten(std::span<const std::int64_t> idx) const;
    void unflatten(std::int64_t flat, std::int64_t* idx) const;

    bool operator==(const GridSpec&) const = default;
};

struct VariableMeta {
    std::string name;
    double raw_min = 0.0;
    double raw_max = 0.0;

    bool degenerate() const { return raw_min == raw_max; }
};

/// Immutable multivariate field: one flat float32 array per variable in raw
/// physical units. Ranges are always recomputed from the data on construction,
/// so VariableMeta can never disagree with the payload.
class MultiField {
public:
    MultiField(GridSpec grid, std::vector<std::string> names,
               std::vector<std::vector<float>> data);

    const GridSpec& grid() const { return grid_; }
    std::int64_t point_count() const { return grid_.point_count(); }
    int variable_count() const { return static_cast<int>(variables_.size()); }

    const std::vector<VariableMeta>& variables() const { return variables_; }
    const VariableMeta& variable(int i) const { return variables_.at(static_cast<std::size_t>(i)); }

    /// Index of a named variable; throws DataError if absent.
    int variable_index(std::string_view name) const;

    std::span<const float> values(int var) const;

private:
    GridSpec grid_;
    std::vector<VariableMeta> variables_;
    std::vector<std::vector<float>> data_;
};

/// Affine normalization conventions shared by training, reconstruction, and
/// evaluation: grid index -> [0,1] per axis, raw value <-> [-1,1] per variable.
/// Degenerate (constant) variables map to 0 and invert to their constant.
struct Normalizer {
    std::vector<std::int64_t> shape;
    std::vector<VariableMeta> variables;

    int dims() const { return static_cast<int>(shape.size()); }
    int vars() const { return static_cast<int>(variables.size()); }

    double coord(int axis, double index) const {
        return index / static_cast<double>(shape[static_cast<std::size_t>(axis)] - 1);
    }

    double value_fwd(int var, double raw) const {
        const auto& v = variables[static_cast<std::size_t>(var)];
        if (v.degenerate()) return 0.0;
        double center = 0.5 * (v.raw_min + v.raw_max);
        double half = 0.5 * (v.raw_max - v.raw_min);
        return (raw - center) / half;
    }

    double value_inv(int var, double normed) const {
        const auto& v = variables[static_cast<std::size_t>(var)];
        if (v.degenerate()) return v.raw_min;
        double center = 0.5 * (v.raw_min + v.raw_max);
        double half = 0.5 * (v.raw_max - v.raw_min);
        return normed * half + center;
    }
};

Normalizer make_normalizer(const MultiField& field);

/// Normalized training set: coords in [0,1]^d, targets in [-1,1]^v, both
/// row-major per point.
struct TrainingSet {
    int dims = 0;
    int vars = 0;
    std::vector<std::int64_t> indices;  // flat grid indices actually drawn
    std::vector<float> coords;
    std::vector<float> targets;

    std::size_t size() const { return indices.size(); }
};

/// Draws ceil(fraction * N) distinct grid points uniformly without
/// replacement, deterministically per seed.
TrainingSet sample_points(const MultiField& field, double fraction,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dataset files. Manifest JSON:
//   { "dims": d, "shape": [..], "variables": [ {"name", "file", "dtype":"f32le"} ] }
// Data files are raw float32 little-endian, row-major, no header. Writers add
// optional "min"/"max"/"checksum" per variable; loaders verify them when
// present, so third-party manifests without them remain loadable.
// ---------------------------------------------------------------------------

MultiField load_dataset(const std::filesystem::path& manifest_path);

/// Writes one .f32 file per variable plus "<name>.json"; returns the manifest
/// path. Round-trips bit-exactly through load_dataset.
std::filesystem::path save_dataset(const MultiField& field,
                                   const std::filesystem::path& dir,
                                   const std::string& name = "dataset");

}  // namespace mvrep

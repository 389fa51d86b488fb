#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvrep/field.hpp"

namespace mvrep {

/// 8-bit RGB raster, rows top-to-bottom.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height

    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    std::uint8_t* at(int x, int y) {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

enum class Colormap { Viridis, Gray };

Colormap colormap_from_string(const std::string& name);

/// 256-entry lookup; idx is clamped to [0, 255].
std::array<std::uint8_t, 3> colormap_lookup(Colormap map, int idx);

/// Deterministic field rendering: clamp to range, map linearly to [0,1], look
/// up the 256-entry colormap, one pixel per grid point. 2D fields pass
/// slice_axis = -1; 3D fields require a slice. Default range is the
/// variable's raw range. Image rows follow the slower remaining axis, columns
/// the faster one.
Image render_field(const MultiField& field, int var, int slice_axis,
                   std::int64_t slice_index, Colormap map,
                   std::optional<std::pair<double, double>> value_range = {});

/// Cell-block heatmap (cell_px pixels per matrix entry) with clamped linear
/// mapping; a shared (vmin, vmax) across methods makes equal colors mean
/// equal values.
Image render_matrix_heatmap(const std::vector<double>& matrix, int rows,
                            int cols, double vmin, double vmax, Colormap map,
                            int cell_px = 16);

/// Boolean mask rendered as an 8-bit black/white slice (same layout rules as
/// render_field).
Image render_mask_slice(const GridSpec& grid, const std::vector<std::uint8_t>& mask,
                        int slice_axis, std::int64_t slice_index);

/// Binary PPM (P6).
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace mvrep

#include "mvrep/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mvrep {

namespace {

// Viridis anchor colors (17 evenly spaced samples); the 256-entry table is
// linearly interpolated between them.
const std::uint8_t kViridisAnchors[17][3] = {
    {68, 1, 84},    {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
    {57, 86, 140},  {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
    {31, 152, 139}, {34, 168, 132}, {53, 183, 121}, {84, 197, 104},
    {122, 209, 81}, {165, 219, 54}, {210, 226, 27}, {253, 231, 37},
    {253, 231, 37}};

std::array<std::uint8_t, 3> viridis_entry(int idx) {
    const double t = static_cast<double>(idx) / 255.0 * 16.0;
    const int seg = std::min(15, static_cast<int>(t));
    const double f = t - seg;
    std::array<std::uint8_t, 3> rgb;
    for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - f) * kViridisAnchors[seg][c] +
                         f * kViridisAnchors[seg + 1][c];
        rgb[static_cast<std::size_t>(c)] =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return rgb;
}

int value_to_index(double value, double lo, double hi) {
    if (!(hi > lo)) return 0;
    const double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
    return std::min(255, static_cast<int>(t * 256.0));
}

struct SliceLayout {
    int row_axis = 0;   // slower remaining axis
    int col_axis = 1;   // faster remaining axis
    std::int64_t rows = 0;
    std::int64_t cols = 0;
};

SliceLayout slice_layout(const GridSpec& grid, int slice_axis,
                         std::int64_t slice_index) {
    SliceLayout lay;
    if (grid.dims == 2) {
        if (slice_axis >= 0) {
            throw DataError("2D fields take no slice axis");
        }
        lay.row_axis = 0;
        lay.col_axis = 1;
    } else {
        if (slice_axis < 0 || slice_axis >= 3) {
            throw DataError("3D fields require --slice-axis 0..2");
        }
        if (slice_index < 0 ||
            slice_index >= grid.shape[static_cast<std::size_t>(slice_axis)]) {
            throw DataError("slice index out of bounds");
        }
        int rem[2], r = 0;
        for (int a = 0; a < 3; ++a) {
            if (a != slice_axis) rem[r++] = a;
        }
        lay.row_axis = rem[0];
        lay.col_axis = rem[1];
    }
    lay.rows = grid.shape[static_cast<std::size_t>(lay.row_axis)];
    lay.cols = grid.shape[static_cast<std::size_t>(lay.col_axis)];
    return lay;
}

}  // namespace

Colormap colormap_from_string(const std::string& name) {
    if (name == "viridis") return Colormap::Viridis;
    if (name == "gray" || name == "grey") return Colormap::Gray;
    throw DataError("unknown colormap '" + name + "'");
}

std::array<std::uint8_t, 3> colormap_lookup(Colormap map, int idx) {
    idx = std::clamp(idx, 0, 255);
    if (map == Colormap::Gray) {
        const auto g = static_cast<std::uint8_t>(idx);
        return {g, g, g};
    }
    // built once, deterministic
    static const auto table = [] {
        std::array<std::array<std::uint8_t, 3>, 256> t;
        for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = viridis_entry(i);
        return t;
    }();
    return table[static_cast<std::size_t>(idx)];
}

Image render_field(const MultiField& field, int var, int slice_axis,
                   std::int64_t slice_index, Colormap map,
                   std::optional<std::pair<double, double>> value_range) {
    const auto& grid = field.grid();
    const SliceLayout lay = slice_layout(grid, slice_axis, slice_index);
    const auto& meta = field.variable(var);
    const double lo = value_range ? value_range->first : meta.raw_min;
    const double hi = value_range ? value_range->second : meta.raw_max;
    const auto values = field.values(var);

    Image img;
    img.width = static_cast<int>(lay.cols);
    img.height = static_cast<int>(lay.rows);
    img.pixels.resize(3 * static_cast<std::size_t>(lay.rows) *
                      static_cast<std::size_t>(lay.cols));

    std::int64_t idx[3] = {0, 0, 0};
    if (grid.dims == 3) idx[slice_axis] = slice_index;
    for (std::int64_t r = 0; r < lay.rows; ++r) {
        idx[lay.row_axis] = r;
        for (std::int64_t c = 0; c < lay.cols; ++c) {
            idx[lay.col_axis] = c;
            const auto flat = grid.flatten({idx, static_cast<std::size_t>(grid.dims)});
            const double v = static_cast<double>(values[static_cast<std::size_t>(flat)]);
            const auto rgb = colormap_lookup(map, value_to_index(v, lo, hi));
            auto* px = img.at(static_cast<int>(c), static_cast<int>(r));
            px[0] = rgb[0];
            px[1] = rgb[1];
            px[2] = rgb[2];
        }
    }
    return img;
}

Image render_matrix_heatmap(const std::vector<double>& matrix, int rows,
                            int cols, double vmin, double vmax, Colormap map,
                            int cell_px) {
    if (!(vmin < vmax)) throw DataError("heatmap requires vmin < vmax");
    if (rows < 1 || cols < 1 || cell_px < 1 ||
        matrix.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw DataError("heatmap: bad matrix dimensions");
    }
    Image img;
    img.width = cols * cell_px;
    img.height = rows * cell_px;
    img.pixels.resize(3 * static_cast<std::size_t>(img.width) *
                      static_cast<std::size_t>(img.height));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = matrix[static_cast<std::size_t>(r) * cols + c];
            const auto rgb = colormap_lookup(map, value_to_index(v, vmin, vmax));
            for (int py = 0; py < cell_px; ++py) {
                for (int px = 0; px < cell_px; ++px) {
                    auto* p = img.at(c * cell_px + px, r * cell_px + py);
                    p[0] = rgb[0];
                    p[1] = rgb[1];
                    p[2] = rgb[2];
                }
            }
        }
    }
    return img;
}

Image render_mask_slice(const GridSpec& grid, const std::vector<std::uint8_t>& mask,
                        int slice_axis, std::int64_t slice_index) {
    if (mask.size() != static_cast<std::size_t>(grid.point_count())) {
        throw DataError("mask size does not match grid");
    }
    const SliceLayout lay = slice_layout(grid, grid.dims == 2 ? -1 : slice_axis,
                                         slice_index);
    Image img;
    img.width = static_cast<int>(lay.cols);
    img.height = static_cast<int>(lay.rows);
    img.pixels.resize(3 * static_cast<std::size_t>(lay.rows) *
                      static_cast<std::size_t>(lay.cols));
    std::int64_t idx[3] = {0, 0, 0};
    if (grid.dims == 3) idx[slice_axis] = slice_index;
    for (std::int64_t r = 0; r < lay.rows; ++r) {
        idx[lay.row_axis] = r;
        for (std::int64_t c = 0; c < lay.cols; ++c) {
            idx[lay.col_axis] = c;
            const auto flat = grid.flatten({idx, static_cast<std::size_t>(grid.dims)});
            const std::uint8_t g = mask[static_cast<std::size_t>(flat)] ? 255 : 0;
            auto* px = img.at(static_cast<int>(c), static_cast<int>(r));
            px[0] = px[1] = px[2] = g;
        }
    }
    return img;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write image: " + path.string());
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w < 1 || h < 1) {
        throw DataError("unsupported PPM: " + path.string());
    }
    in.get();  // single whitespace after header
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw DataError("short read on image: " + path.string());
    return img;
}

}  // namespace mvrep

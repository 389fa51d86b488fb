#include "synthetic.hpp"

#include <cmath>

namespace mvrep::testsupport {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

double gauss3(double x, double y, double z, double cx, double cy, double cz,
              double sigma) {
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz);
    return std::exp(-r2 / (2.0 * sigma * sigma));
}

}  // namespace

MultiField make_synthetic_field(const std::vector<std::int64_t>& shape) {
    GridSpec grid;
    grid.dims = static_cast<int>(shape.size());
    grid.shape = shape;
    grid.validate();

    const std::int64_t n = grid.point_count();
    std::vector<std::vector<float>> data(4);
    for (auto& arr : data) arr.resize(static_cast<std::size_t>(n));

    std::int64_t idx[3] = {0, 0, 0};
    for (std::int64_t f = 0; f < n; ++f) {
        grid.unflatten(f, idx);
        const double x = static_cast<double>(idx[0]) / static_cast<double>(shape[0] - 1);
        const double y = static_cast<double>(idx[1]) / static_cast<double>(shape[1] - 1);
        const double z = grid.dims == 3
                             ? static_cast<double>(idx[2]) / static_cast<double>(shape[2] - 1)
                             : 0.5;

        // two bumps correlated through a shared component
        const double shared = gauss3(x, y, z, 0.35, 0.40, 0.45, 0.10);
        const double bump_a = shared + 0.6 * gauss3(x, y, z, 0.72, 0.68, 0.55, 0.07);
        const double bump_b =
            0.85 * gauss3(x, y, z, 0.35, 0.40, 0.45, 0.12) +
            0.5 * gauss3(x, y, z, 0.25, 0.75, 0.35, 0.08);
        const double plane = 0.4 + 1.7 * x - 0.9 * y + 0.6 * z;
        double sinprod = std::sin(kTau * 4.0 * x) * std::sin(kTau * 4.0 * y);
        if (grid.dims == 3) sinprod *= std::sin(kTau * 2.0 * z);

        data[0][static_cast<std::size_t>(f)] = static_cast<float>(bump_a);
        data[1][static_cast<std::size_t>(f)] = static_cast<float>(bump_b);
        data[2][static_cast<std::size_t>(f)] = static_cast<float>(plane);
        data[3][static_cast<std::size_t>(f)] = static_cast<float>(sinprod);
    }

    return MultiField(std::move(grid), {"bump_a", "bump_b", "plane", "sinprod"},
                      std::move(data));
}

MultiField make_acceptance_field() { return make_synthetic_field({64, 64, 32}); }

}  // namespace mvrep::testsupport

#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "metacast/field.hpp"

namespace metacast::testing {

using ScalarFn = std::function<double(const Vec3&)>;

inline DensityGrid field_from_function(const ScalarFn& f, int n, const Vec3& lo = Vec3::Zero(),
                                       const Vec3& hi = Vec3::Ones()) {
    GridSpec spec;
    spec.box_min = lo;
    spec.box_max = hi;
    spec.dims = {n, n, n};
    std::vector<float> values(spec.node_count());
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                values[spec.node_index(i, j, k)] = static_cast<float>(f(spec.node_position(i, j, k)));
            }
        }
    }
    return DensityGrid(spec, std::move(values), Vec3::Constant(0.1));
}

inline double gaussian(const Vec3& r, const Vec3& c, double sigma, double height = 1.0) {
    return height * std::exp(-(r - c).squaredNorm() / (2.0 * sigma * sigma));
}

// Two equal bumps on the x-axis of the unit box; the saddle sits at their midpoint.
struct TwoBumps {
    Vec3 a{0.3, 0.5, 0.5};
    Vec3 b{0.7, 0.5, 0.5};
    double sigma = 0.1;
    double operator()(const Vec3& r) const { return gaussian(r, a, sigma) + gaussian(r, b, sigma); }
};

inline Vec3 random_point(std::mt19937_64& rng, const Vec3& lo, const Vec3& hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    return lo + Vec3(x, y, z).cwiseProduct(hi - lo);
}

// Independent trilinear sampler (no snapping, no clamping beyond the last cell).
inline double trilinear(const DensityGrid& field, const Vec3& r) {
    const GridSpec& spec = field.spec();
    const Vec3 cell = spec.cell_size();
    int base[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
        const double u = (r[a] - spec.box_min[a]) / cell[a];
        base[a] = std::min(std::max(static_cast<int>(std::floor(u)), 0), spec.dims[a] - 2);
        t[a] = u - base[a];
    }
    double sum = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
        const double w = (dx ? t[0] : 1 - t[0]) * (dy ? t[1] : 1 - t[1]) * (dz ? t[2] : 1 - t[2]);
        sum += w * field.node_value(base[0] + dx, base[1] + dy, base[2] + dz);
    }
    return sum;
}

}  // namespace metacast::testing

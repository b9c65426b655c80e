#include "metacast/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "grid_math.hpp"

namespace metacast {

namespace {

constexpr double kKernelNorm = 15.0 / (8.0 * std::numbers::pi);

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double lerp(double a, double b, double f) { return (1.0 - f) * a + f * b; }

// Trilinear interpolation with the position clamped into the box.
double interpolate(const DensityGrid& field, const Vec3& r) {
    const GridSpec& spec = field.spec();
    const Vec3 cell = spec.cell_size();
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        const double t = std::clamp(detail::node_coordinate(r[a], spec.box_min[a], cell[a]), 0.0,
                                    static_cast<double>(spec.dims[a] - 1));
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, spec.dims[a] - 2);
        base[a] = i;
        frac[a] = t - i;
    }
    const auto v = [&](int dx, int dy, int dz) {
        return field.node_value(base[0] + dx, base[1] + dy, base[2] + dz);
    };
    const double c00 = lerp(v(0, 0, 0), v(1, 0, 0), frac[0]);
    const double c10 = lerp(v(0, 1, 0), v(1, 1, 0), frac[0]);
    const double c01 = lerp(v(0, 0, 1), v(1, 0, 1), frac[0]);
    const double c11 = lerp(v(0, 1, 1), v(1, 1, 1), frac[0]);
    return lerp(lerp(c00, c10, frac[1]), lerp(c01, c11, frac[1]), frac[2]);
}

Vec3 gradient_unchecked(const DensityGrid& field, const Vec3& r) {
    const GridSpec& spec = field.spec();
    const Vec3 h = spec.cell_size() * 0.5;
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 lo = r;
        Vec3 hi = r;
        double span = 2.0 * h[a];
        if (r[a] - h[a] < spec.box_min[a]) {
            hi[a] += h[a];
            span = h[a];
        } else if (r[a] + h[a] > spec.box_max[a]) {
            lo[a] -= h[a];
            span = h[a];
        } else {
            lo[a] -= h[a];
            hi[a] += h[a];
        }
        g[a] = (interpolate(field, hi) - interpolate(field, lo)) / span;
    }
    return g;
}

void require_inside(const GridSpec& spec, const Vec3& r) {
    if (!spec.contains(r)) {
        throw OutOfDomain("position outside the density box");
    }
}

}  // namespace

void ParticleCloud::validate() const {
    if (labels && labels->size() != positions.size()) {
        throw InvalidInput("labels must have one entry per particle");
    }
    if (!adaptive_lengths.empty()) {
        if (adaptive_lengths.size() != positions.size()) {
            throw InvalidInput("adaptive lengths must have one entry per particle");
        }
        for (const Vec3& l : adaptive_lengths) {
            if (!(l.minCoeff() > 0.0) || !l.allFinite()) {
                throw InvalidInput("adaptive lengths must be positive and finite");
            }
        }
    }
}

void GridSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2) {
            throw InvalidInput("grid needs at least 2 nodes per axis");
        }
        if (!(box_max[a] > box_min[a]) || !std::isfinite(box_min[a]) || !std::isfinite(box_max[a])) {
            throw InvalidInput("grid box must have positive finite extent on every axis");
        }
    }
}

std::size_t GridSpec::node_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

std::size_t GridSpec::cell_count() const {
    const auto c = cell_dims();
    return static_cast<std::size_t>(c[0]) * c[1] * c[2];
}

Vec3 GridSpec::cell_size() const {
    return {(box_max[0] - box_min[0]) / (dims[0] - 1), (box_max[1] - box_min[1]) / (dims[1] - 1),
            (box_max[2] - box_min[2]) / (dims[2] - 1)};
}

Vec3 GridSpec::node_position(int i, int j, int k) const {
    const Vec3 c = cell_size();
    return {box_min[0] + i * c[0], box_min[1] + j * c[1], box_min[2] + k * c[2]};
}

Vec3 GridSpec::cell_center(int i, int j, int k) const {
    const Vec3 c = cell_size();
    return {box_min[0] + (i + 0.5) * c[0], box_min[1] + (j + 0.5) * c[1], box_min[2] + (k + 0.5) * c[2]};
}

bool GridSpec::contains(const Vec3& r) const {
    for (int a = 0; a < 3; ++a) {
        if (!(r[a] >= box_min[a] && r[a] <= box_max[a])) {
            return false;
        }
    }
    return true;
}

DensityGrid::DensityGrid(GridSpec spec, std::vector<float> values, Vec3 global_lengths)
    : spec_(std::move(spec)), values_(std::move(values)), global_lengths_(std::move(global_lengths)) {
    spec_.validate();
    if (values_.size() != spec_.node_count()) {
        throw InvalidInput("density grid value count does not match dims");
    }
    for (float v : values_) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw InvalidInput("density values must be finite and non-negative");
        }
        peak_ = std::max(peak_, static_cast<double>(v));
    }
}

double epanechnikov(double x) { return std::abs(x) < 1.0 ? 1.0 - x * x : 0.0; }

Vec3 global_smoothing_lengths(const ParticleCloud& cloud, LogBase base) {
    const std::size_t n = cloud.size();
    if (n < 2) {
        throw InvalidInput("smoothing lengths need at least 2 particles");
    }
    const double log_n = base == LogBase::natural ? std::log(static_cast<double>(n))
                                                  : std::log10(static_cast<double>(n));
    Vec3 lo = cloud.positions.front();
    Vec3 hi = lo;
    for (const Vec3& p : cloud.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = hi - lo;
    double fallback_extent = extent.maxCoeff();
    if (!(fallback_extent > 0.0)) {
        fallback_extent = 1.0;
    }

    Vec3 lengths;
    std::vector<double> coords(n);
    for (int a = 0; a < 3; ++a) {
        for (std::size_t j = 0; j < n; ++j) {
            coords[j] = cloud.positions[j][a];
        }
        const double spread = percentile(coords, 80.0) - percentile(coords, 20.0);
        if (spread > 0.0) {
            lengths[a] = 2.0 * spread / log_n;
        } else {
            lengths[a] = 1e-6 * (extent[a] > 0.0 ? extent[a] : fallback_extent);
        }
    }
    return lengths;
}

std::vector<Vec3> adaptive_smoothing_lengths(const ParticleCloud& cloud, const Vec3& global,
                                             const DensityOptions& options) {
    if (!(global.minCoeff() > 0.0) || !global.allFinite()) {
        throw InvalidInput("global smoothing lengths must be positive");
    }
    const std::size_t n = cloud.size();
    if (n == 0) {
        return {};
    }

    // Bin particles on a lattice of one smoothing length per axis; kernels reach
    // at most one bin in each direction.
    Vec3 lo = cloud.positions.front();
    for (const Vec3& p : cloud.positions) {
        lo = lo.cwiseMin(p);
    }
    using Key = std::array<std::int64_t, 3>;
    std::vector<Key> keys(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (int a = 0; a < 3; ++a) {
            keys[j][a] = static_cast<std::int64_t>(std::floor((cloud.positions[j][a] - lo[a]) / global[a]));
        }
    }
    const auto key_less = [](const Key& x, const Key& y) {
        return std::tie(x[2], x[1], x[0]) < std::tie(y[2], y[1], y[0]);
    };
    std::vector<std::uint32_t> order(n);
    for (std::size_t j = 0; j < n; ++j) {
        order[j] = static_cast<std::uint32_t>(j);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return key_less(keys[x], keys[y]); });
    std::vector<Key> sorted_keys(n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted_keys[j] = keys[order[j]];
    }

    const double norm = kKernelNorm / (static_cast<double>(n) * global.prod());
    const Vec3 inv = global.cwiseInverse();
    std::vector<double> pilot(n, 0.0);

#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        const Vec3& rj = cloud.positions[j];
        double sum = 0.0;
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const Key probe{keys[j][0] + dx, keys[j][1] + dy, keys[j][2] + dz};
                    const auto range = std::equal_range(sorted_keys.begin(), sorted_keys.end(), probe, key_less);
                    for (auto it = range.first; it != range.second; ++it) {
                        const Vec3& ri = cloud.positions[order[it - sorted_keys.begin()]];
                        const double q = ((ri - rj).cwiseProduct(inv)).squaredNorm();
                        if (q < 1.0) {
                            sum += 1.0 - q;
                        }
                    }
                }
            }
        }
        pilot[j] = norm * sum;
    }

    double log_sum = 0.0;
    std::size_t positive = 0;
    for (double p : pilot) {
        if (p > 0.0) {
            log_sum += std::log(p);
            ++positive;
        }
    }
    const double geo_mean = positive > 0 ? std::exp(log_sum / static_cast<double>(positive)) : 1.0;

    std::vector<Vec3> lengths(n);
    for (std::size_t j = 0; j < n; ++j) {
        double lambda = options.lambda_max;
        if (pilot[j] > 0.0) {
            lambda = std::min(std::pow(pilot[j] / geo_mean, -options.alpha), options.lambda_max);
        }
        lengths[j] = lambda * global;
    }
    return lengths;
}

GridSpec fit_grid_spec(const ParticleCloud& cloud, Dims3 dims) {
    if (cloud.size() == 0) {
        throw InvalidInput("cannot fit a grid to an empty cloud");
    }
    if (!cloud.has_adaptive_lengths()) {
        throw InvalidInput("cloud needs adaptive smoothing lengths before fitting a grid");
    }
    Vec3 lo = cloud.positions.front();
    Vec3 hi = lo;
    Vec3 reach = Vec3::Zero();
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        lo = lo.cwiseMin(cloud.positions[j]);
        hi = hi.cwiseMax(cloud.positions[j]);
        reach = reach.cwiseMax(cloud.adaptive_lengths[j]);
    }
    GridSpec spec;
    spec.box_min = lo - reach;
    spec.box_max = hi + reach;
    spec.dims = dims;
    spec.validate();
    return spec;
}

DensityGrid estimate_density(const ParticleCloud& cloud, const GridSpec& spec, std::optional<Vec3> global) {
    spec.validate();
    cloud.validate();
    const std::size_t n = cloud.size();
    if (n == 0) {
        throw InvalidInput("density estimation needs at least one particle");
    }
    if (!cloud.has_adaptive_lengths()) {
        throw InvalidInput("density estimation needs adaptive smoothing lengths");
    }
    for (const Vec3& p : cloud.positions) {
        if (!spec.contains(p)) {
            throw InvalidInput("grid box does not cover the particle cloud");
        }
    }
    if (!global) {
        global = n >= 2 ? global_smoothing_lengths(cloud) : cloud.adaptive_lengths.front();
    }

    const Vec3 cell = spec.cell_size();
    const int nx = spec.dims[0];
    const int ny = spec.dims[1];
    const int nz = spec.dims[2];

    struct Footprint {
        int lo[3];
        int hi[3];
    };
    std::vector<Footprint> footprints(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (int a = 0; a < 3; ++a) {
            const double r = cloud.positions[j][a] - spec.box_min[a];
            const double l = cloud.adaptive_lengths[j][a];
            footprints[j].lo[a] = std::max(0, static_cast<int>(std::ceil((r - l) / cell[a])));
            footprints[j].hi[a] = std::min(spec.dims[a] - 1, static_cast<int>(std::floor((r + l) / cell[a])));
        }
    }

    // Particles touching each z-slice, in ascending particle order (CSR layout).
    std::vector<std::size_t> offsets(static_cast<std::size_t>(nz) + 1, 0);
    for (const Footprint& f : footprints) {
        for (int k = f.lo[2]; k <= f.hi[2]; ++k) {
            ++offsets[k + 1];
        }
    }
    for (int k = 0; k < nz; ++k) {
        offsets[k + 1] += offsets[k];
    }
    std::vector<std::uint32_t> members(offsets.back());
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t j = 0; j < n; ++j) {
            for (int k = footprints[j].lo[2]; k <= footprints[j].hi[2]; ++k) {
                members[cursor[k]++] = static_cast<std::uint32_t>(j);
            }
        }
    }

    std::vector<float> values(spec.node_count(), 0.0f);
    const double norm = kKernelNorm / static_cast<double>(n);

#pragma omp parallel
    {
        std::vector<double> slice(static_cast<std::size_t>(nx) * ny);
#pragma omp for schedule(dynamic, 1)
        for (int k = 0; k < nz; ++k) {
            std::fill(slice.begin(), slice.end(), 0.0);
            const double zk = spec.box_min[2] + k * cell[2];
            for (std::size_t m = offsets[k]; m < offsets[k + 1]; ++m) {
                const std::uint32_t j = members[m];
                const Vec3& rj = cloud.positions[j];
                const Vec3& lj = cloud.adaptive_lengths[j];
                const Footprint& f = footprints[j];
                const double weight = 1.0 / lj.prod();
                const double dz = (rj[2] - zk) / lj[2];
                const double qz = dz * dz;
                if (qz >= 1.0) {
                    continue;
                }
                for (int jy = f.lo[1]; jy <= f.hi[1]; ++jy) {
                    const double dy = (rj[1] - (spec.box_min[1] + jy * cell[1])) / lj[1];
                    const double qyz = qz + dy * dy;
                    if (qyz >= 1.0) {
                        continue;
                    }
                    double* row = slice.data() + static_cast<std::size_t>(jy) * nx;
                    for (int ix = f.lo[0]; ix <= f.hi[0]; ++ix) {
                        const double dx = (rj[0] - (spec.box_min[0] + ix * cell[0])) / lj[0];
                        const double q = qyz + dx * dx;
                        if (q < 1.0) {
                            row[ix] += weight * (1.0 - q);
                        }
                    }
                }
            }
            float* out = values.data() + static_cast<std::size_t>(k) * nx * ny;
            for (std::size_t idx = 0; idx < slice.size(); ++idx) {
                out[idx] = static_cast<float>(norm * slice[idx]);
            }
        }
    }
    return DensityGrid(spec, std::move(values), *global);
}

DensityGrid build_density(ParticleCloud& cloud, Dims3 dims, const DensityOptions& options) {
    const Vec3 global = global_smoothing_lengths(cloud, options.log_base);
    cloud.adaptive_lengths = adaptive_smoothing_lengths(cloud, global, options);
    const GridSpec spec = fit_grid_spec(cloud, dims);
    return estimate_density(cloud, spec, global);
}

double sample_density(const DensityGrid& field, const Vec3& r) {
    require_inside(field.spec(), r);
    return interpolate(field, r);
}

Vec3 sample_gradient(const DensityGrid& field, const Vec3& r) {
    require_inside(field.spec(), r);
    return gradient_unchecked(field, r);
}

double hessian_max_eigenvalue(const DensityGrid& field, const Vec3& r) {
    const GridSpec& spec = field.spec();
    require_inside(spec, r);
    const Vec3 h = spec.cell_size() * 0.5;
    Eigen::Matrix3d hessian;
    for (int b = 0; b < 3; ++b) {
        Vec3 lo = r;
        Vec3 hi = r;
        lo[b] = std::max(spec.box_min[b], r[b] - h[b]);
        hi[b] = std::min(spec.box_max[b], r[b] + h[b]);
        hessian.col(b) = (gradient_unchecked(field, hi) - gradient_unchecked(field, lo)) / (hi[b] - lo[b]);
    }
    const Eigen::Matrix3d sym = 0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

}  // namespace metacast

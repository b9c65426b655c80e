#pragma once

#include <optional>
#include <span>

#include "metacast/common.hpp"

namespace metacast {

struct ParticleCloud {
    std::vector<Vec3> positions;
    std::optional<std::vector<bool>> labels;   // true = target
    std::vector<Vec3> adaptive_lengths;        // empty until computed

    std::size_t size() const { return positions.size(); }
    bool has_labels() const { return labels.has_value(); }
    bool has_adaptive_lengths() const { return !adaptive_lengths.empty(); }
    // Throws InvalidInput when labels/lengths disagree with the particle count.
    void validate() const;
};

struct GridSpec {
    Vec3 box_min = Vec3::Zero();
    Vec3 box_max = Vec3::Ones();
    Dims3 dims = {100, 100, 100};

    void validate() const;
    std::size_t node_count() const;
    Dims3 cell_dims() const { return {dims[0] - 1, dims[1] - 1, dims[2] - 1}; }
    std::size_t cell_count() const;
    Vec3 cell_size() const;
    // Smallest cell edge; the spatial unit for flow steps and tolerances.
    double min_cell_size() const { return cell_size().minCoeff(); }
    double cell_diagonal() const { return cell_size().norm(); }
    Vec3 node_position(int i, int j, int k) const;
    Vec3 cell_center(int i, int j, int k) const;
    bool contains(const Vec3& r) const;
    std::size_t node_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    std::size_t cell_index(int i, int j, int k) const {
        const auto c = cell_dims();
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(c[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(c[1]) * k);
    }
};

enum class LogBase { natural, base10 };

struct DensityOptions {
    LogBase log_base = LogBase::natural;
    double alpha = 0.5;        // Breiman sensitivity
    double lambda_max = 10.0;  // clamp for isolated particles
};

/// Immutable node-sampled density field over a box.
///
/// Values are stored as f32 in x-fastest order, matching the on-disk layout,
/// so a reloaded grid samples bit-identically to the one that was written.
class DensityGrid {
public:
    DensityGrid(GridSpec spec, std::vector<float> values, Vec3 global_lengths);

    const GridSpec& spec() const { return spec_; }
    const std::vector<float>& values() const { return values_; }
    const Vec3& global_lengths() const { return global_lengths_; }
    double peak() const { return peak_; }
    double node_value(int i, int j, int k) const { return values_[spec_.node_index(i, j, k)]; }

private:
    GridSpec spec_;
    std::vector<float> values_;
    Vec3 global_lengths_;
    double peak_ = 0.0;
};

double epanechnikov(double x);

Vec3 global_smoothing_lengths(const ParticleCloud& cloud, LogBase base = LogBase::natural);

std::vector<Vec3> adaptive_smoothing_lengths(const ParticleCloud& cloud, const Vec3& global,
                                             const DensityOptions& options = {});

// Bounding box of the cloud grown by the largest adaptive length on each axis.
GridSpec fit_grid_spec(const ParticleCloud& cloud, Dims3 dims = {100, 100, 100});

// Requires adaptive lengths. `global` is recorded in the grid; when absent it is
// recomputed from the cloud (or taken from the single particle's lengths if N = 1).
DensityGrid estimate_density(const ParticleCloud& cloud, const GridSpec& spec,
                             std::optional<Vec3> global = std::nullopt);

// Full offline pipeline: global lengths, adaptive lengths (stored into `cloud`),
// fitted box and node densities.
DensityGrid build_density(ParticleCloud& cloud, Dims3 dims = {100, 100, 100},
                          const DensityOptions& options = {});

double sample_density(const DensityGrid& field, const Vec3& r);
Vec3 sample_gradient(const DensityGrid& field, const Vec3& r);

// Largest eigenvalue of the finite-difference Hessian of the interpolated field.
double hessian_max_eigenvalue(const DensityGrid& field, const Vec3& r);

}  // namespace metacast

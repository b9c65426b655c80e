#pragma once

#include <optional>
#include <span>
#include <string>

#include "metacast/field.hpp"

namespace metacast {

struct FlowConfig {
    double step_cells = 0.5;           // integration step, in units of the smallest cell edge
    double gradient_tol_factor = 1e-8; // g_tol = factor * peak / cell size
    double displacement_tol_cells = 1e-3;
    int max_steps = 10000;
    double pull_weight = 2.0;          // weight of the pull toward the next maximum in MaxLine
    bool compute_lambda1 = false;
    bool record_path = false;

    double step(const DensityGrid& field) const { return step_cells * field.spec().min_cell_size(); }
    double gradient_tol(const DensityGrid& field) const {
        return gradient_tol_factor * field.peak() / field.spec().min_cell_size();
    }
};

struct FlowResult {
    Vec3 seed = Vec3::Zero();
    Vec3 destination = Vec3::Zero();
    int steps = 0;
    bool converged = false;
    std::optional<double> lambda1;  // largest Hessian eigenvalue at the destination
    bool degenerate = false;        // converged but lambda1 >= 0 (saddle, minimum or flat)
    std::vector<Vec3> path;         // filled when FlowConfig::record_path is set
};

// Gradient ascent along the normalized gradient with a fixed step that is halved
// whenever it would lower the density, so sampled density never decreases.
FlowResult ascend(const DensityGrid& field, const Vec3& seed, const FlowConfig& config = {});

struct BatchFlow {
    std::optional<FlowResult> result;
    std::string error;  // set when result is empty
    bool ok() const { return result.has_value(); }
};

std::vector<BatchFlow> ascend_batch(const DensityGrid& field, std::span<const Vec3> seeds,
                                    const FlowConfig& config = {});

struct MaximumCluster {
    Vec3 position = Vec3::Zero();
    int votes = 0;
    std::vector<std::size_t> seeds;  // indices into the input results, ascending
};

// Greedy merge of converged destinations in input order. Non-converged results are skipped.
std::vector<MaximumCluster> dedupe_maxima(std::span<const FlowResult> results, double tol);

struct MaxLine {
    std::vector<Vec3> maxima;
    std::vector<Vec3> polyline;
    // Segment i ran out of steps and was closed with a straight chord.
    std::vector<bool> chord_closed;
};

MaxLine build_maxline(const DensityGrid& field, std::span<const Vec3> maxima, const FlowConfig& config = {});

double distance_to_polyline(const Vec3& p, std::span<const Vec3> polyline);

}  // namespace metacast

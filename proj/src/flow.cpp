#include "metacast/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace metacast {

namespace {

Vec3 clamp_to_box(const GridSpec& spec, const Vec3& p) {
    return p.cwiseMax(spec.box_min).cwiseMin(spec.box_max);
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) {
        return (p - a).norm();
    }
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

}  // namespace

FlowResult ascend(const DensityGrid& field, const Vec3& seed, const FlowConfig& config) {
    const GridSpec& spec = field.spec();
    if (!spec.contains(seed)) {
        throw OutOfDomain("ascent seed outside the density box");
    }
    const double step0 = config.step(field);
    const double gtol = config.gradient_tol(field);
    const double disp_tol = config.displacement_tol_cells * spec.min_cell_size();

    FlowResult result;
    result.seed = seed;
    Vec3 p = seed;
    double rho = sample_density(field, p);
    if (config.record_path) {
        result.path.push_back(p);
    }

    double step = step0;
    while (result.steps < config.max_steps) {
        const Vec3 g = sample_gradient(field, p);
        const double gnorm = g.norm();
        if (gnorm <= gtol) {
            result.converged = true;
            break;
        }
        const Vec3 dir = g / gnorm;

        Vec3 q = p;
        double rq = rho;
        bool accepted = false;
        bool clamped = false;
        while (step >= disp_tol) {
            const Vec3 target = p + step * dir;
            q = clamp_to_box(spec, target);
            clamped = q != target;
            rq = sample_density(field, q);
            if (rq >= rho) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // Every step down to the displacement tolerance goes downhill.
            result.converged = true;
            break;
        }

        const double moved = (q - p).norm();
        p = q;
        rho = rq;
        ++result.steps;
        if (config.record_path) {
            result.path.push_back(p);
        }
        if (moved <= disp_tol) {
            result.converged = !clamped;
            break;
        }
        step = std::min(2.0 * step, step0);
    }

    result.destination = p;
    if (config.compute_lambda1 && result.converged) {
        result.lambda1 = hessian_max_eigenvalue(field, p);
        result.degenerate = !(*result.lambda1 < 0.0);
    }
    return result;
}

std::vector<BatchFlow> ascend_batch(const DensityGrid& field, std::span<const Vec3> seeds, const FlowConfig& config) {
    std::vector<BatchFlow> out(seeds.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(seeds.size()); ++i) {
        try {
            out[i].result = ascend(field, seeds[i], config);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

std::vector<MaximumCluster> dedupe_maxima(std::span<const FlowResult> results, double tol) {
    if (!(tol > 0.0)) {
        throw InvalidInput("merge tolerance must be positive");
    }
    std::vector<MaximumCluster> clusters;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].converged) {
            continue;
        }
        const Vec3& d = results[i].destination;
        auto it = std::find_if(clusters.begin(), clusters.end(),
                               [&](const MaximumCluster& c) { return (c.position - d).norm() <= tol; });
        if (it == clusters.end()) {
            clusters.push_back({d, 0, {}});
            it = clusters.end() - 1;
        }
        ++it->votes;
        it->seeds.push_back(i);
    }
    return clusters;
}

MaxLine build_maxline(const DensityGrid& field, std::span<const Vec3> maxima, const FlowConfig& config) {
    if (maxima.empty()) {
        throw InvalidInput("MaxLine needs at least one maximum");
    }
    const GridSpec& spec = field.spec();
    for (const Vec3& m : maxima) {
        if (!spec.contains(m)) {
            throw OutOfDomain("MaxLine maximum outside the density box");
        }
    }
    const double step = config.step(field);
    const double gtol = config.gradient_tol(field);

    MaxLine line;
    line.maxima.assign(maxima.begin(), maxima.end());
    line.polyline.push_back(maxima.front());

    for (std::size_t i = 0; i + 1 < maxima.size(); ++i) {
        const Vec3& to = maxima[i + 1];
        Vec3 p = maxima[i];
        bool reached = false;
        for (int s = 0; s < config.max_steps; ++s) {
            const Vec3 towards = to - p;
            const double dist = towards.norm();
            if (dist <= step) {
                reached = true;
                break;
            }
            const Vec3 g = sample_gradient(field, p);
            const double gnorm = g.norm();
            Vec3 dir = config.pull_weight * towards / dist;
            if (gnorm >= gtol && gnorm > 0.0) {
                dir += g / gnorm;
            }
            const double dnorm = dir.norm();
            dir = dnorm > 0.0 ? Vec3(dir / dnorm) : Vec3(towards / dist);
            p = clamp_to_box(spec, p + step * dir);
            line.polyline.push_back(p);
        }
        if (!reached) {
            const Vec3 chord = to - p;
            const int pieces = static_cast<int>(std::ceil(chord.norm() / step));
            for (int k = 1; k < pieces; ++k) {
                line.polyline.push_back(p + chord * (static_cast<double>(k) / pieces));
            }
        }
        line.chord_closed.push_back(!reached);
        line.polyline.push_back(to);
    }
    return line;
}

double distance_to_polyline(const Vec3& p, std::span<const Vec3> polyline) {
    if (polyline.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    if (polyline.size() == 1) {
        return (p - polyline.front()).norm();
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        best = std::min(best, segment_distance(p, polyline[i], polyline[i + 1]));
    }
    return best;
}

}  // namespace metacast

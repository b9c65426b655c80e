#include "metacast/surface.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "grid_math.hpp"
#include "marching_cubes_tables.hpp"

namespace metacast {

namespace {

// Corner offsets and edge endpoints in the lookup tables' convention.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

std::vector<char> keep_lookup(const ComponentGrid& components, std::span<const std::int32_t> keep) {
    std::vector<char> lookup(static_cast<std::size_t>(components.component_count) + 1, 0);
    for (std::int32_t id : keep) {
        if (id < 1 || id > components.component_count) {
            throw InvalidInput("kept component id " + std::to_string(id) + " does not exist");
        }
        lookup[id] = 1;
    }
    return lookup;
}

struct EdgeTriangle {
    std::uint64_t edges[3];
    std::int32_t component;
};

}  // namespace

std::size_t CellMask::count() const {
    return static_cast<std::size_t>(std::count_if(inside.begin(), inside.end(), [](std::uint8_t v) { return v != 0; }));
}

ComponentGrid label_components(const DensityGrid& field, double threshold, const CellMask* mask) {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw InvalidInput("component threshold must be positive and finite");
    }
    const GridSpec& spec = field.spec();
    const Dims3 cd = spec.cell_dims();
    if (mask && (mask->cell_dims != cd || mask->inside.size() != spec.cell_count())) {
        throw InvalidInput("cell mask does not match the grid");
    }

    ComponentGrid out;
    out.spec = spec;
    out.threshold = threshold;
    out.masked = mask != nullptr;
    out.labels.assign(spec.cell_count(), 0);

    // -1 marks super-threshold cells awaiting a label.
#pragma omp parallel for schedule(static)
    for (int k = 0; k < cd[2]; ++k) {
        for (int j = 0; j < cd[1]; ++j) {
            for (int i = 0; i < cd[0]; ++i) {
                const std::size_t c = spec.cell_index(i, j, k);
                if (mask && !mask->contains(c)) {
                    continue;
                }
                for (const auto& o : kCorner) {
                    if (field.node_value(i + o[0], j + o[1], k + o[2]) >= threshold) {
                        out.labels[c] = -1;
                        break;
                    }
                }
            }
        }
    }

    std::deque<std::array<int, 3>> queue;
    for (int k = 0; k < cd[2]; ++k) {
        for (int j = 0; j < cd[1]; ++j) {
            for (int i = 0; i < cd[0]; ++i) {
                if (out.labels[spec.cell_index(i, j, k)] != -1) {
                    continue;
                }
                const std::int32_t id = ++out.component_count;
                out.labels[spec.cell_index(i, j, k)] = id;
                queue.push_back({i, j, k});
                while (!queue.empty()) {
                    const auto cur = queue.front();
                    queue.pop_front();
                    for (int a = 0; a < 3; ++a) {
                        for (int step : {-1, 1}) {
                            auto nb = cur;
                            nb[a] += step;
                            if (nb[a] < 0 || nb[a] >= cd[a]) {
                                continue;
                            }
                            std::int32_t& l = out.labels[spec.cell_index(nb[0], nb[1], nb[2])];
                            if (l == -1) {
                                l = id;
                                queue.push_back(nb);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

TriangleMesh extract_mesh(const DensityGrid& field, double threshold, const ComponentGrid& components,
                          std::span<const std::int32_t> keep) {
    const std::vector<char> kept = keep_lookup(components, keep);
    TriangleMesh mesh;
    if (keep.empty()) {
        return mesh;
    }
    const GridSpec& spec = field.spec();
    if (components.spec.dims != spec.dims) {
        throw InvalidInput("component grid does not match the density grid");
    }
    const Dims3 cd = spec.cell_dims();

    std::vector<std::vector<EdgeTriangle>> per_slice(static_cast<std::size_t>(cd[2]));
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < cd[2]; ++k) {
        auto& tris = per_slice[k];
        for (int j = 0; j < cd[1]; ++j) {
            for (int i = 0; i < cd[0]; ++i) {
                const std::int32_t id = components.labels[spec.cell_index(i, j, k)];
                if (id <= 0 || !kept[id]) {
                    continue;
                }
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    if (field.node_value(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < threshold) {
                        cube |= 1 << c;
                    }
                }
                if (detail::kEdgeTable[cube] == 0) {
                    continue;
                }
                const auto& row = detail::kTriTable[cube];
                for (int t = 0; row[t] != -1; t += 3) {
                    EdgeTriangle tri{};
                    tri.component = id;
                    for (int v = 0; v < 3; ++v) {
                        const int* a = kCorner[kEdge[row[t + v]][0]];
                        const int* b = kCorner[kEdge[row[t + v]][1]];
                        const int axis = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
                        const std::size_t node = spec.node_index(i + std::min(a[0], b[0]), j + std::min(a[1], b[1]),
                                                                 k + std::min(a[2], b[2]));
                        tri.edges[v] = static_cast<std::uint64_t>(node) * 3 + axis;
                    }
                    tris.push_back(tri);
                }
            }
        }
    }

    std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_edge;
    const Vec3 cell = spec.cell_size();
    const auto vertex_for = [&](std::uint64_t edge) {
        auto [it, inserted] = vertex_of_edge.try_emplace(edge, static_cast<std::uint32_t>(mesh.vertices.size()));
        if (inserted) {
            const auto axis = static_cast<int>(edge % 3);
            std::size_t node = edge / 3;
            int idx[3];
            idx[0] = static_cast<int>(node % spec.dims[0]);
            node /= spec.dims[0];
            idx[1] = static_cast<int>(node % spec.dims[1]);
            idx[2] = static_cast<int>(node / spec.dims[1]);
            const double v0 = field.node_value(idx[0], idx[1], idx[2]);
            int up[3] = {idx[0], idx[1], idx[2]};
            ++up[axis];
            const double v1 = field.node_value(up[0], up[1], up[2]);
            const double t = v1 != v0 ? std::clamp((threshold - v0) / (v1 - v0), 0.0, 1.0) : 0.5;
            Vec3 p = spec.node_position(idx[0], idx[1], idx[2]);
            p[axis] += t * cell[axis];
            mesh.vertices.push_back(p);
        }
        return it->second;
    };

    for (const auto& tris : per_slice) {
        for (const EdgeTriangle& tri : tris) {
            mesh.triangles.push_back({vertex_for(tri.edges[0]), vertex_for(tri.edges[1]), vertex_for(tri.edges[2])});
            mesh.triangle_components.push_back(tri.component);
        }
    }
    return mesh;
}

std::array<int, 3> containing_cell(const GridSpec& spec, const Vec3& p) {
    if (!spec.contains(p)) {
        throw OutOfDomain("position outside the density box");
    }
    const Vec3 cell = spec.cell_size();
    const Dims3 cd = spec.cell_dims();
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
        const double t = detail::node_coordinate(p[a], spec.box_min[a], cell[a]);
        idx[a] = std::clamp(static_cast<int>(std::ceil(t)) - 1, 0, cd[a] - 1);
    }
    return idx;
}

std::optional<std::int32_t> component_containing(const ComponentGrid& components, const Vec3& p) {
    const auto c = containing_cell(components.spec, p);
    const std::int32_t id = components.label(c[0], c[1], c[2]);
    if (id <= 0) {
        return std::nullopt;
    }
    return id;
}

IndexSet classify_particles(const ParticleCloud& cloud, const DensityGrid& field, double threshold,
                            const ComponentGrid& components, std::span<const std::int32_t> keep) {
    const std::vector<char> kept = keep_lookup(components, keep);
    IndexSet out;
    if (keep.empty()) {
        return out;
    }
    const GridSpec& spec = field.spec();
    std::vector<std::uint8_t> selected(cloud.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(cloud.size()); ++j) {
        const Vec3& p = cloud.positions[j];
        if (!spec.contains(p)) {
            continue;
        }
        if (sample_density(field, p) < threshold) {
            continue;
        }
        const auto c = containing_cell(spec, p);
        const std::int32_t id = components.label(c[0], c[1], c[2]);
        selected[j] = id > 0 && kept[id];
    }
    for (std::size_t j = 0; j < selected.size(); ++j) {
        if (selected[j]) {
            out.push_back(static_cast<std::uint32_t>(j));
        }
    }
    return out;
}

}  // namespace metacast

#pragma once

#include <optional>
#include <span>

#include "metacast/field.hpp"

namespace metacast {

// Boolean restriction over grid cells, x-fastest.
struct CellMask {
    Dims3 cell_dims = {0, 0, 0};
    std::vector<std::uint8_t> inside;

    bool contains(std::size_t cell) const { return inside[cell] != 0; }
    std::size_t count() const;
};

struct ComponentGrid {
    GridSpec spec;
    double threshold = 0.0;
    std::vector<std::int32_t> labels;  // per cell; 0 = not part of any component
    int component_count = 0;
    bool masked = false;

    std::int32_t label(int i, int j, int k) const { return labels[spec.cell_index(i, j, k)]; }
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<std::int32_t> triangle_components;

    bool empty() const { return triangles.empty(); }
};

// Cells are super-threshold when any corner node reaches the threshold; components
// are 6-connected and numbered in scan order of their first cell.
ComponentGrid label_components(const DensityGrid& field, double threshold, const CellMask* mask = nullptr);

TriangleMesh extract_mesh(const DensityGrid& field, double threshold, const ComponentGrid& components,
                          std::span<const std::int32_t> keep);

// Cell containing p; on a shared face the lower-index cell wins.
std::array<int, 3> containing_cell(const GridSpec& spec, const Vec3& p);

std::optional<std::int32_t> component_containing(const ComponentGrid& components, const Vec3& p);

IndexSet classify_particles(const ParticleCloud& cloud, const DensityGrid& field, double threshold,
                            const ComponentGrid& components, std::span<const std::int32_t> keep);

}  // namespace metacast

#pragma once

#include <string>

#include "metacast/field.hpp"

namespace metacast {

enum class DatasetKind { disk, rings, shell, strings, filament };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& name);

// Geometry knobs. Lengths are world units; every generated coordinate is homogeneous
// of degree one in the length knobs, so scaling them by c scales the cloud by c.
struct DiskGeometry {
    double radius = 1.0;
    double core_radius = 0.35;  // targets lie inside
    double thickness = 0.06;
    double falloff = 0.5;       // surface density ~ r^-falloff, 0 <= falloff < 2
};

struct RingsGeometry {
    double ring_radius = 0.5;
    double tube_radius = 0.04;
    double gap = 0.08;
    double target_fraction = 0.35;  // middle share of each half ring's arc
};

struct ShellGeometry {
    double ball_radius = 0.45;
    double shell_inner = 0.62;
    double shell_outer = 0.74;
};

struct StringsGeometry {
    double length = 1.6;
    double inner_sigma = 0.025;
    double helix_radius = 0.24;
    double helix_modulation = 0.35;  // relative perimeter variation
    double turns = 3.0;
    double outer_sigma = 0.022;
    double density_modulation = 0.6; // relative density variation along each string
};

struct FilamentGeometry {
    double length = 1.4;
    double amplitude = 0.25;
    double sigma = 0.025;
    double noise_half_width = 0.7;   // background fills a cube of this half width
};

struct DatasetParams {
    DatasetKind kind = DatasetKind::shell;
    std::size_t target_count = 20000;
    std::size_t noise_count = 20000;
    std::uint64_t seed = 1;
    DiskGeometry disk;
    RingsGeometry rings;
    ShellGeometry shell;
    StringsGeometry strings;
    FilamentGeometry filament;

    // Multiplies every length knob of every kind.
    void scale_geometry(double c);
};

// Targets come first in the output, followed by interferers. Positions are rounded
// to f32 so every cloud format reproduces them exactly.
ParticleCloud gen_dataset(const DatasetParams& params);

struct ConfusionStats {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    double f1 = 0.0;
    double mcc = 0.0;
    bool f1_defined = true;   // false when precision or recall is 0/0
    bool mcc_defined = true;  // false when a denominator factor is zero

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

ConfusionStats stats_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn);

ConfusionStats confusion_stats(const IndexSet& selected, const std::vector<bool>& labels);

}  // namespace metacast

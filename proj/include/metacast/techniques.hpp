#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "metacast/flow.hpp"
#include "metacast/surface.hpp"

namespace metacast {

enum class Technique { point, brush, paint, baseline };

std::string to_string(Technique t);
Technique technique_from_string(const std::string& name);

struct Stroke {
    std::vector<Vec3> samples;
    std::vector<double> times;  // seconds; empty or one per sample
    double radius = 0.0;        // marker radius R, world units

    void validate() const;
};

// Uniform arc-length resampling; both endpoints are kept.
std::vector<Vec3> resample_polyline(std::span<const Vec3> points, double spacing);

constexpr double kSliderMin = -4.0;
constexpr double kSliderMax = 4.0;

struct Selection {
    Technique technique = Technique::point;
    double rho0 = 0.0;
    double s = 0.0;
    double threshold = 0.0;  // exactly exp2(s) * rho0
    std::vector<std::int32_t> kept_components;
    std::optional<CellMask> mask;  // V_init for the brush
    IndexSet particles;
    TriangleMesh mesh;
    // r^(m) for point, the MaxLine maxima for brush, r^(m_max) for paint.
    std::vector<Vec3> anchors;
    std::optional<MaxLine> maxline;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

namespace flag {
inline constexpr const char* kNoStructure = "no structure";
inline constexpr const char* kNoStructureNearStroke = "no structure near stroke";
inline constexpr const char* kUnlabeledDestination = "destination in unlabeled cell";
inline constexpr const char* kSliderClamped = "slider clamped";
inline constexpr const char* kChordClosed = "maxline closed with chord";
}  // namespace flag

struct TechniqueConfig {
    FlowConfig flow;
    bool build_mesh = true;
    // MaxLine merge tolerance; defaults to one cell diagonal.
    std::optional<double> merge_tol;
};

using SelectionObserver = std::function<void(const Selection&)>;

// Pointer drag: each in-box sample re-derives threshold, maximum and component.
// Intermediate selections go to `observer`; the last one is returned.
Selection meta_point(const DensityGrid& field, const ParticleCloud& cloud, std::span<const Vec3> pointer_samples,
                     const TechniqueConfig& config = {}, const SelectionObserver& observer = {});

// Needs adaptive smoothing lengths on the cloud (for V_init).
Selection meta_brush(const DensityGrid& field, const ParticleCloud& cloud, const Stroke& stroke,
                     const TechniqueConfig& config = {});

Selection meta_paint(const DensityGrid& field, const ParticleCloud& cloud, const Stroke& stroke,
                     const TechniqueConfig& config = {});

Selection adjust_threshold(const DensityGrid& field, const ParticleCloud& cloud, const Selection& sel, double s,
                           const TechniqueConfig& config = {});

IndexSet baseline_brush(const ParticleCloud& cloud, const Stroke& stroke);

enum class CombineMode { union_, subtract };

std::string to_string(CombineMode m);
CombineMode combine_mode_from_string(const std::string& name);

IndexSet combine(const IndexSet& a, const IndexSet& b, CombineMode mode);

// Runs `technique` on a stroke (pointer samples for `point`) and applies slider
// value `s` when it is non-zero. Baseline selections carry only particles.
Selection select_with_stroke(const DensityGrid& field, const ParticleCloud& cloud, Technique technique,
                             const Stroke& stroke, double s = 0.0, const TechniqueConfig& config = {});

// V_init: cells whose centers fall in any candidate's smoothing ellipsoid.
CellMask ellipsoid_mask(const GridSpec& spec, const ParticleCloud& cloud, std::span<const std::uint32_t> candidates);

}  // namespace metacast

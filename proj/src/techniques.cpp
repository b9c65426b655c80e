#include "metacast/techniques.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace metacast {

namespace {

std::vector<Vec3> inside_only(const GridSpec& spec, std::span<const Vec3> points) {
    std::vector<Vec3> out;
    std::copy_if(points.begin(), points.end(), std::back_inserter(out),
                 [&](const Vec3& p) { return spec.contains(p); });
    return out;
}

// Components that must be kept for the given anchors under the technique's rule.
std::vector<std::int32_t> anchored_components(const ComponentGrid& components, std::span<const Vec3> anchors) {
    std::vector<std::int32_t> keep;
    for (const Vec3& a : anchors) {
        if (auto id = component_containing(components, a)) {
            keep.push_back(*id);
        }
    }
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    return keep;
}

void finish(const DensityGrid& field, const ParticleCloud& cloud, const ComponentGrid& components,
            const TechniqueConfig& config, Selection& sel) {
    sel.particles = classify_particles(cloud, field, sel.threshold, components, sel.kept_components);
    if (config.build_mesh) {
        sel.mesh = extract_mesh(field, sel.threshold, components, sel.kept_components);
    }
}

// Destinations of the seeds that converged onto actual structure (positive density).
std::vector<FlowResult> structural_destinations(const DensityGrid& field, std::span<const Vec3> seeds,
                                                const FlowConfig& flow) {
    std::vector<FlowResult> out;
    for (auto& item : ascend_batch(field, seeds, flow)) {
        if (item.ok() && item.result->converged && sample_density(field, item.result->destination) > 0.0) {
            out.push_back(std::move(*item.result));
        }
    }
    return out;
}

double merge_tolerance(const DensityGrid& field, const TechniqueConfig& config) {
    return config.merge_tol.value_or(field.spec().cell_diagonal());
}

std::vector<Vec3> stroke_seeds(const DensityGrid& field, const Stroke& stroke) {
    const auto resampled = resample_polyline(stroke.samples, 0.5 * field.spec().min_cell_size());
    auto seeds = inside_only(field.spec(), resampled);
    if (seeds.empty()) {
        throw InvalidInput("no stroke sample lies inside the density box");
    }
    return seeds;
}

struct IndexRange {
    int lo[3];
    int hi[3];
};

// Node index range covering the axis-aligned box [center - half, center + half].
IndexRange node_range(const GridSpec& spec, const Vec3& center, const Vec3& half) {
    const Vec3 cell = spec.cell_size();
    IndexRange r{};
    for (int a = 0; a < 3; ++a) {
        r.lo[a] = std::max(0, static_cast<int>(std::ceil((center[a] - half[a] - spec.box_min[a]) / cell[a])));
        r.hi[a] = std::min(spec.dims[a] - 1, static_cast<int>(std::floor((center[a] + half[a] - spec.box_min[a]) / cell[a])));
    }
    return r;
}

bool in_ellipsoid(const Vec3& r, const Vec3& center, const Vec3& axes) {
    return ((r - center).cwiseQuotient(axes)).squaredNorm() <= 1.0;
}

// Mean node density over nodes lying in any candidate ellipsoid.
double mean_density_in_ellipsoids(const DensityGrid& field, const ParticleCloud& cloud,
                                  std::span<const std::uint32_t> candidates) {
    const GridSpec& spec = field.spec();
    std::vector<std::uint8_t> inside(spec.node_count(), 0);
    for (std::uint32_t j : candidates) {
        const Vec3& c = cloud.positions[j];
        const Vec3& l = cloud.adaptive_lengths[j];
        const IndexRange r = node_range(spec, c, l);
        for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
            for (int jy = r.lo[1]; jy <= r.hi[1]; ++jy) {
                for (int i = r.lo[0]; i <= r.hi[0]; ++i) {
                    if (in_ellipsoid(spec.node_position(i, jy, k), c, l)) {
                        inside[spec.node_index(i, jy, k)] = 1;
                    }
                }
            }
        }
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < inside.size(); ++n) {
        if (inside[n]) {
            sum += field.values()[n];
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

Selection empty_selection(Technique t, const char* why) {
    Selection sel;
    sel.technique = t;
    sel.flags.emplace_back(why);
    return sel;
}

}  // namespace

std::string to_string(Technique t) {
    switch (t) {
        case Technique::point: return "point";
        case Technique::brush: return "brush";
        case Technique::paint: return "paint";
        case Technique::baseline: return "baseline";
    }
    return "unknown";
}

Technique technique_from_string(const std::string& name) {
    if (name == "point") return Technique::point;
    if (name == "brush") return Technique::brush;
    if (name == "paint") return Technique::paint;
    if (name == "baseline") return Technique::baseline;
    throw InvalidInput("unknown technique '" + name + "'");
}

std::string to_string(CombineMode m) { return m == CombineMode::union_ ? "union" : "subtract"; }

CombineMode combine_mode_from_string(const std::string& name) {
    if (name == "union") return CombineMode::union_;
    if (name == "subtract") return CombineMode::subtract;
    throw InvalidInput("unknown combine mode '" + name + "'");
}

void Stroke::validate() const {
    if (samples.empty()) {
        throw InvalidInput("stroke needs at least one sample");
    }
    for (const Vec3& p : samples) {
        if (!p.allFinite()) {
            throw InvalidInput("stroke sample is not finite");
        }
    }
    if (!times.empty()) {
        if (times.size() != samples.size()) {
            throw InvalidInput("stroke timestamps must match samples");
        }
        if (!std::is_sorted(times.begin(), times.end())) {
            throw InvalidInput("stroke timestamps must be non-decreasing");
        }
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidInput("stroke radius must be positive");
    }
}

std::vector<Vec3> resample_polyline(std::span<const Vec3> points, double spacing) {
    if (points.empty()) {
        return {};
    }
    if (!(spacing > 0.0)) {
        throw InvalidInput("resampling spacing must be positive");
    }
    std::vector<double> cumulative(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        cumulative[i] = cumulative[i - 1] + (points[i] - points[i - 1]).norm();
    }
    const double total = cumulative.back();
    if (total == 0.0) {
        return {points.front()};
    }
    const auto pieces = static_cast<std::size_t>(std::ceil(total / spacing));
    std::vector<Vec3> out;
    out.reserve(pieces + 1);
    out.push_back(points.front());
    std::size_t seg = 0;
    for (std::size_t i = 1; i < pieces; ++i) {
        const double at = total * static_cast<double>(i) / static_cast<double>(pieces);
        while (seg + 2 < points.size() && cumulative[seg + 1] < at) {
            ++seg;
        }
        const double len = cumulative[seg + 1] - cumulative[seg];
        const double t = len > 0.0 ? (at - cumulative[seg]) / len : 0.0;
        out.push_back(points[seg] + t * (points[seg + 1] - points[seg]));
    }
    out.push_back(points.back());
    return out;
}

bool Selection::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

CellMask ellipsoid_mask(const GridSpec& spec, const ParticleCloud& cloud, std::span<const std::uint32_t> candidates) {
    if (!cloud.has_adaptive_lengths()) {
        throw InvalidInput("cloud needs adaptive smoothing lengths");
    }
    CellMask mask;
    mask.cell_dims = spec.cell_dims();
    mask.inside.assign(spec.cell_count(), 0);
    const Vec3 cell = spec.cell_size();
    const Dims3 cd = mask.cell_dims;
    for (std::uint32_t j : candidates) {
        const Vec3& c = cloud.positions[j];
        const Vec3& l = cloud.adaptive_lengths[j];
        int lo[3];
        int hi[3];
        for (int a = 0; a < 3; ++a) {
            // cell centers sit at box_min + (i + 0.5) * cell
            lo[a] = std::max(0, static_cast<int>(std::ceil((c[a] - l[a] - spec.box_min[a]) / cell[a] - 0.5)));
            hi[a] = std::min(cd[a] - 1, static_cast<int>(std::floor((c[a] + l[a] - spec.box_min[a]) / cell[a] - 0.5)));
        }
        for (int k = lo[2]; k <= hi[2]; ++k) {
            for (int jy = lo[1]; jy <= hi[1]; ++jy) {
                for (int i = lo[0]; i <= hi[0]; ++i) {
                    if (in_ellipsoid(spec.cell_center(i, jy, k), c, l)) {
                        mask.inside[spec.cell_index(i, jy, k)] = 1;
                    }
                }
            }
        }
    }
    return mask;
}

Selection meta_point(const DensityGrid& field, const ParticleCloud& cloud, std::span<const Vec3> pointer_samples,
                     const TechniqueConfig& config, const SelectionObserver& observer) {
    const auto samples = inside_only(field.spec(), pointer_samples);
    if (samples.empty()) {
        throw InvalidInput("no pointer sample lies inside the density box");
    }
    Selection sel;
    for (const Vec3& p : samples) {
        sel = Selection{};
        sel.technique = Technique::point;
        const double rho = sample_density(field, p);
        if (!(rho > 0.0)) {
            sel.flags.emplace_back(flag::kNoStructure);
        } else {
            sel.rho0 = rho;
            sel.threshold = std::exp2(sel.s) * sel.rho0;
            sel.anchors = {ascend(field, p, config.flow).destination};
            const ComponentGrid components = label_components(field, sel.threshold);
            sel.kept_components = anchored_components(components, sel.anchors);
            finish(field, cloud, components, config, sel);
        }
        if (observer) {
            observer(sel);
        }
    }
    return sel;
}

Selection meta_brush(const DensityGrid& field, const ParticleCloud& cloud, const Stroke& stroke,
                     const TechniqueConfig& config) {
    stroke.validate();
    cloud.validate();
    if (!cloud.has_adaptive_lengths()) {
        throw InvalidInput("brush selection needs adaptive smoothing lengths on the cloud");
    }
    const GridSpec& spec = field.spec();
    const auto seeds = stroke_seeds(field, stroke);
    const auto destinations = structural_destinations(field, seeds, config.flow);
    const auto clusters = dedupe_maxima(destinations, merge_tolerance(field, config));
    if (clusters.empty()) {
        return empty_selection(Technique::brush, flag::kNoStructureNearStroke);
    }

    std::vector<Vec3> maxima;
    for (const auto& c : clusters) {
        maxima.push_back(c.position);
    }
    MaxLine line = build_maxline(field, maxima, config.flow);

    // Candidate particles: those whose own ascent ends inside the tunnel.
    std::vector<Vec3> positions;
    std::vector<std::uint32_t> position_owner;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (spec.contains(cloud.positions[j])) {
            positions.push_back(cloud.positions[j]);
            position_owner.push_back(static_cast<std::uint32_t>(j));
        }
    }
    const auto flows = ascend_batch(field, positions, config.flow);
    std::vector<std::uint32_t> candidates;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        if (flows[i].ok() && distance_to_polyline(flows[i].result->destination, line.polyline) <= stroke.radius) {
            candidates.push_back(position_owner[i]);
        }
    }
    if (candidates.empty()) {
        return empty_selection(Technique::brush, flag::kNoStructureNearStroke);
    }

    Selection sel;
    sel.technique = Technique::brush;
    sel.mask = ellipsoid_mask(spec, cloud, candidates);
    sel.rho0 = mean_density_in_ellipsoids(field, cloud, candidates);
    sel.anchors = maxima;
    if (std::any_of(line.chord_closed.begin(), line.chord_closed.end(), [](bool b) { return b; })) {
        sel.flags.emplace_back(flag::kChordClosed);
    }
    sel.maxline = std::move(line);
    if (!(sel.rho0 > 0.0)) {
        sel.flags.emplace_back(flag::kNoStructureNearStroke);
        return sel;
    }
    sel.threshold = std::exp2(sel.s) * sel.rho0;
    const ComponentGrid components = label_components(field, sel.threshold, &*sel.mask);
    sel.kept_components = anchored_components(components, sel.anchors);
    finish(field, cloud, components, config, sel);
    return sel;
}

Selection meta_paint(const DensityGrid& field, const ParticleCloud& cloud, const Stroke& stroke,
                     const TechniqueConfig& config) {
    stroke.validate();
    const GridSpec& spec = field.spec();

    // Base threshold: mean node density inside the tube around the raw stroke.
    const double tube = field.global_lengths().sum() / 3.0;
    Vec3 lo = stroke.samples.front();
    Vec3 hi = lo;
    for (const Vec3& p : stroke.samples) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const IndexRange range = node_range(spec, 0.5 * (lo + hi), 0.5 * (hi - lo) + Vec3::Constant(tube));
    double sum = 0.0;
    std::size_t nodes = 0;
    for (int k = range.lo[2]; k <= range.hi[2]; ++k) {
        for (int j = range.lo[1]; j <= range.hi[1]; ++j) {
            for (int i = range.lo[0]; i <= range.hi[0]; ++i) {
                if (distance_to_polyline(spec.node_position(i, j, k), stroke.samples) <= tube) {
                    sum += field.node_value(i, j, k);
                    ++nodes;
                }
            }
        }
    }
    if (nodes == 0) {
        throw InvalidInput("stroke tunnel contains no grid nodes");
    }

    const auto seeds = stroke_seeds(field, stroke);
    const auto destinations = structural_destinations(field, seeds, config.flow);
    const auto clusters = dedupe_maxima(destinations, merge_tolerance(field, config));

    Selection sel;
    sel.technique = Technique::paint;
    sel.rho0 = sum / static_cast<double>(nodes);
    if (clusters.empty() || !(sel.rho0 > 0.0)) {
        sel.flags.emplace_back(flag::kNoStructure);
        return sel;
    }
    const MaximumCluster* winner = &clusters.front();
    for (const auto& c : clusters) {
        if (c.votes > winner->votes) {
            winner = &c;
        }
    }
    sel.anchors = {winner->position};
    sel.threshold = std::exp2(sel.s) * sel.rho0;
    const ComponentGrid components = label_components(field, sel.threshold);
    sel.kept_components = anchored_components(components, sel.anchors);
    if (sel.kept_components.empty()) {
        sel.flags.emplace_back(flag::kUnlabeledDestination);
    }
    finish(field, cloud, components, config, sel);
    return sel;
}

Selection adjust_threshold(const DensityGrid& field, const ParticleCloud& cloud, const Selection& sel, double s,
                           const TechniqueConfig& config) {
    if (sel.technique == Technique::baseline) {
        throw InvalidInput("baseline selections have no density threshold");
    }
    if (!std::isfinite(s)) {
        throw InvalidInput("slider value must be finite");
    }
    Selection out = sel;
    std::erase(out.flags, std::string(flag::kSliderClamped));
    if (s < kSliderMin || s > kSliderMax) {
        s = std::clamp(s, kSliderMin, kSliderMax);
        out.flags.emplace_back(flag::kSliderClamped);
    }
    out.s = s;
    out.threshold = std::exp2(s) * out.rho0;
    out.kept_components.clear();
    out.particles.clear();
    out.mesh = {};
    if (!(out.rho0 > 0.0) || out.anchors.empty()) {
        return out;
    }
    const ComponentGrid components = label_components(field, out.threshold, out.mask ? &*out.mask : nullptr);
    out.kept_components = anchored_components(components, out.anchors);
    finish(field, cloud, components, config, out);
    return out;
}

IndexSet baseline_brush(const ParticleCloud& cloud, const Stroke& stroke) {
    stroke.validate();
    Vec3 lo = stroke.samples.front();
    Vec3 hi = lo;
    for (const Vec3& p : stroke.samples) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    lo.array() -= stroke.radius;
    hi.array() += stroke.radius;
    IndexSet out;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        const Vec3& p = cloud.positions[j];
        if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) {
            continue;
        }
        if (distance_to_polyline(p, stroke.samples) <= stroke.radius) {
            out.push_back(static_cast<std::uint32_t>(j));
        }
    }
    return out;
}

Selection select_with_stroke(const DensityGrid& field, const ParticleCloud& cloud, Technique technique,
                             const Stroke& stroke, double s, const TechniqueConfig& config) {
    Selection sel;
    switch (technique) {
        case Technique::point:
            // Pointer samples only; the marker radius plays no part.
            if (stroke.samples.empty()) {
                throw InvalidInput("stroke needs at least one sample");
            }
            sel = meta_point(field, cloud, stroke.samples, config);
            break;
        case Technique::brush: sel = meta_brush(field, cloud, stroke, config); break;
        case Technique::paint: sel = meta_paint(field, cloud, stroke, config); break;
        case Technique::baseline:
            sel.technique = Technique::baseline;
            sel.particles = baseline_brush(cloud, stroke);
            return sel;
    }
    if (s != 0.0) {
        sel = adjust_threshold(field, cloud, sel, s, config);
    }
    return sel;
}

IndexSet combine(const IndexSet& a, const IndexSet& b, CombineMode mode) {
    IndexSet out;
    if (mode == CombineMode::union_) {
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    } else {
        std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace metacast

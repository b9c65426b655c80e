#include <doctest.h>

#include <random>
#include <set>

#include "metacast/techniques.hpp"
#include "test_fields.hpp"

using namespace metacast;

namespace {

// Two Gaussian blobs of particles; blob a is denser than blob b.
struct Blobs {
    Vec3 a{-0.5, 0.0, 0.0};
    Vec3 b{0.5, 0.0, 0.0};
    ParticleCloud cloud;
    DensityGrid field;

    static Blobs make(double sigma = 0.12, int na = 3000, int nb = 2000) {
        Blobs out{.cloud = {}, .field = DensityGrid(GridSpec{}, std::vector<float>(GridSpec{}.node_count()), Vec3::Ones())};
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, sigma);
        out.cloud.labels.emplace();
        for (int i = 0; i < na + nb; ++i) {
            const double x = g(rng);
            const double y = g(rng);
            const double z = g(rng);
            out.cloud.positions.push_back((i < na ? out.a : out.b) + Vec3(x, y, z));
            out.cloud.labels->push_back(i < na);
        }
        out.field = build_density(out.cloud, {48, 48, 48});
        return out;
    }
};

const Blobs& blobs() {
    static const Blobs b = Blobs::make();
    return b;
}

Stroke line_stroke(const Vec3& from, const Vec3& to, int n, double radius) {
    Stroke s;
    for (int i = 0; i < n; ++i) s.samples.push_back(from + (to - from) * (i / double(n - 1)));
    s.radius = radius;
    return s;
}

TechniqueConfig no_mesh() {
    TechniqueConfig c;
    c.build_mesh = false;
    return c;
}

}  // namespace

TEST_CASE("stroke validation") {
    Stroke s;
    s.radius = 0.1;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s.samples = {Vec3::Zero(), Vec3::Ones()};
    CHECK_NOTHROW(s.validate());
    s.times = {1.0, 0.5};
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s.times = {0.0};
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s.times = {0.0, 0.0};
    s.radius = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("resample_polyline keeps endpoints and spacing") {
    const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 2, 0)};
    const auto r = resample_polyline(pts, 0.25);
    CHECK(r.front() == pts.front());
    CHECK(r.back() == pts.back());
    CHECK(r.size() == 13);  // length 3 in 12 pieces
    for (std::size_t i = 1; i < r.size(); ++i) CHECK((r[i] - r[i - 1]).norm() <= 0.25 + 1e-12);
    CHECK(resample_polyline(std::vector<Vec3>{Vec3::Ones(), Vec3::Ones()}, 0.1).size() == 1);
    CHECK_THROWS_AS(resample_polyline(pts, 0.0), InvalidInput);
}

TEST_CASE("meta_point at half peak selects that bump's super-threshold particles") {
    const Blobs& B = blobs();
    // Walk out from blob b's center until density halves.
    const double peak_b = sample_density(B.field, ascend(B.field, B.b).destination);
    Vec3 p = B.b;
    while (sample_density(B.field, p) > 0.5 * peak_b) p[1] += 0.002;
    const Selection sel = meta_point(B.field, B.cloud, std::vector<Vec3>{p}, no_mesh());
    CHECK(sel.rho0 == sample_density(B.field, p));
    CHECK(sel.threshold == sel.rho0);
    // Oracle: components at the threshold, keep the one holding b's maximum, threshold particles.
    const ComponentGrid comps = label_components(B.field, sel.rho0);
    const auto id = component_containing(comps, ascend(B.field, B.b).destination);
    REQUIRE(id.has_value());
    CHECK(sel.kept_components == std::vector<std::int32_t>{*id});
    IndexSet want;
    for (std::size_t j = 0; j < B.cloud.size(); ++j) {
        const Vec3& q = B.cloud.positions[j];
        const auto c = containing_cell(B.field.spec(), q);
        if (testing::trilinear(B.field, q) >= sel.rho0 && comps.label(c[0], c[1], c[2]) == *id) {
            want.push_back(static_cast<std::uint32_t>(j));
        }
    }
    CHECK(sel.particles == want);
    for (std::uint32_t j : sel.particles) CHECK_FALSE((*B.cloud.labels)[j]);
}

TEST_CASE("meta_point drag switches target and streams each sample") {
    const Blobs& B = blobs();
    std::vector<Selection> seen;
    const std::vector<Vec3> drag = {B.a + Vec3(0, 0.1, 0), Vec3(0.0, 0.1, 0.0), B.b + Vec3(0, 0.1, 0)};
    const Selection last = meta_point(B.field, B.cloud, drag, no_mesh(), [&](const Selection& s) { seen.push_back(s); });
    REQUIRE(seen.size() == 3);
    CHECK(seen.back().particles == last.particles);
    const ComponentGrid comps = label_components(B.field, last.threshold);
    CHECK(last.kept_components == std::vector<std::int32_t>{*component_containing(comps, B.b)});
    // First sample selected blob a's particles.
    std::size_t a_count = 0;
    for (std::uint32_t j : seen.front().particles) a_count += (*B.cloud.labels)[j];
    CHECK(a_count == seen.front().particles.size());
    CHECK(a_count > 0);
}

TEST_CASE("meta_point at the peak and in empty space") {
    const Blobs& B = blobs();
    const Vec3 peak = ascend(B.field, B.a).destination;
    const Selection top = meta_point(B.field, B.cloud, std::vector<Vec3>{peak}, no_mesh());
    CHECK(top.threshold == sample_density(B.field, peak));
    CHECK(top.particles.size() < 60);  // under 2% of the blob

    const Vec3 corner = B.field.spec().box_min + Vec3::Constant(1e-3);
    const Selection none = meta_point(B.field, B.cloud, std::vector<Vec3>{corner}, no_mesh());
    CHECK(none.has_flag(flag::kNoStructure));
    CHECK(none.particles.empty());
    CHECK_THROWS_AS(meta_point(B.field, B.cloud, std::vector<Vec3>{Vec3(9, 9, 9)}), InvalidInput);
}

TEST_CASE("adjust_threshold law, identity and clamping") {
    const Blobs& B = blobs();
    const Stroke s = line_stroke(B.a - Vec3(0.1, 0, 0), B.a + Vec3(0.1, 0, 0), 5, 0.05);
    const Selection sel = meta_paint(B.field, B.cloud, s);
    const Selection same = adjust_threshold(B.field, B.cloud, sel, 0.0);
    CHECK(same.threshold == sel.threshold);
    CHECK(same.particles == sel.particles);
    CHECK(same.kept_components == sel.kept_components);
    CHECK(same.mesh.triangles == sel.mesh.triangles);
    const Selection up = adjust_threshold(B.field, B.cloud, sel, 4.0);
    CHECK(up.threshold == 16.0 * sel.rho0);
    CHECK(up.rho0 == sel.rho0);
    const Selection clamped = adjust_threshold(B.field, B.cloud, sel, 6.0);
    CHECK(clamped.s == kSliderMax);
    CHECK(clamped.has_flag(flag::kSliderClamped));
    CHECK(clamped.threshold == up.threshold);
    // Chained adjustments depend only on the final s.
    const Selection chain = adjust_threshold(B.field, B.cloud, adjust_threshold(B.field, B.cloud, sel, -3.0), 1.5);
    CHECK(chain.threshold == adjust_threshold(B.field, B.cloud, sel, 1.5).threshold);
    CHECK(chain.particles == adjust_threshold(B.field, B.cloud, sel, 1.5).particles);
}

TEST_CASE("meta_paint: majority of votes wins; s=-4 merges bumps through the saddle") {
    const Blobs& B = blobs();
    // 70% of the stroke near a, 30% near b.
    Stroke s;
    s.radius = 0.05;
    for (int i = 0; i < 7; ++i) s.samples.push_back(B.a + Vec3(0.0, -0.15 + 0.05 * i, 0.0));
    for (int i = 0; i < 3; ++i) s.samples.push_back(B.b + Vec3(0.0, -0.05 + 0.05 * i, 0.0));
    const Selection sel = meta_paint(B.field, B.cloud, s, no_mesh());
    REQUIRE(sel.kept_components.size() == 1);
    REQUIRE(sel.anchors.size() == 1);
    CHECK((sel.anchors[0] - B.a).norm() < 0.1);
    // Grow the selection as s decreases; once the saddle is passed, both blobs are in.
    std::size_t prev = 0;
    bool merged = false;
    for (double sv = 4.0; sv >= -4.0; sv -= 1.0) {
        const Selection a = adjust_threshold(B.field, B.cloud, sel, sv, no_mesh());
        CHECK(a.particles.size() >= prev);
        prev = a.particles.size();
        std::size_t from_b = 0;
        for (std::uint32_t j : a.particles) from_b += !(*B.cloud.labels)[j];
        merged = merged || from_b > 0;
    }
    const double saddle = sample_density(B.field, Vec3(0.0, 0.0, 0.0));
    if (saddle > sel.rho0 / 16.0) CHECK(merged);
}

TEST_CASE("meta_paint errors and degenerate inputs") {
    const Blobs& B = blobs();
    const Stroke outside = line_stroke(Vec3(9, 9, 9), Vec3(9.5, 9, 9), 3, 0.1);
    CHECK_THROWS_AS(meta_paint(B.field, B.cloud, outside), InvalidInput);
    // Stroke through empty space: all seeds stay at zero density.
    const Vec3 lo = B.field.spec().box_min;
    const Stroke empty = line_stroke(lo + Vec3(0.01, 0.01, 0.01), lo + Vec3(0.05, 0.01, 0.01), 4, 0.01);
    const Selection sel = meta_paint(B.field, B.cloud, empty, no_mesh());
    CHECK(sel.particles.empty());
    CHECK_FALSE(sel.flags.empty());
}

TEST_CASE("meta_brush along a blob chain keeps both blobs and only them") {
    const Blobs& B = blobs();
    const Stroke s = line_stroke(B.a, B.b, 10, 0.05);
    const Selection sel = meta_brush(B.field, B.cloud, s, no_mesh());
    REQUIRE(sel.mask.has_value());
    REQUIRE(sel.maxline.has_value());
    CHECK(sel.anchors.size() >= 2);
    CHECK(sel.kept_components.size() >= 1);
    CHECK(sel.mask->count() > 0);
    // Mask-restricted labeling reproduces the kept ids.
    const ComponentGrid comps = label_components(B.field, sel.threshold, &*sel.mask);
    std::set<std::int32_t> anchored;
    for (const Vec3& m : sel.anchors) {
        if (const auto id = component_containing(comps, m)) anchored.insert(*id);
    }
    CHECK(std::vector<std::int32_t>(anchored.begin(), anchored.end()) == sel.kept_components);
    CHECK(sel.rho0 > 0.0);
    std::size_t from_a = 0, from_b = 0;
    for (std::uint32_t j : sel.particles) ((*B.cloud.labels)[j] ? from_a : from_b)++;
    // Both blobs are on the stroke.
    CHECK(from_a > 0);
    CHECK(from_b > 0);
}

TEST_CASE("meta_brush far from structure is empty and flagged") {
    const Blobs& B = blobs();
    const Vec3 lo = B.field.spec().box_min;
    const Stroke s = line_stroke(lo + Vec3(0.01, 0.01, 0.01), lo + Vec3(0.05, 0.02, 0.01), 4, 0.01);
    const Selection sel = meta_brush(B.field, B.cloud, s, no_mesh());
    CHECK(sel.particles.empty());
    CHECK(sel.has_flag(flag::kNoStructureNearStroke));

    ParticleCloud bare = B.cloud;
    bare.adaptive_lengths.clear();
    CHECK_THROWS_AS(meta_brush(B.field, bare, line_stroke(B.a, B.b, 3, 0.05)), InvalidInput);
}

TEST_CASE("ellipsoid_mask agrees with a per-cell brute force") {
    const Blobs& B = blobs();
    const std::vector<std::uint32_t> cand = {0, 17, 4000};
    const CellMask mask = ellipsoid_mask(B.field.spec(), B.cloud, cand);
    const GridSpec& spec = B.field.spec();
    const Dims3 cd = spec.cell_dims();
    std::size_t count = 0;
    for (int k = 0; k < cd[2]; ++k)
        for (int j = 0; j < cd[1]; ++j)
            for (int i = 0; i < cd[0]; ++i) {
                bool in = false;
                for (auto c : cand) {
                    in = in || (spec.cell_center(i, j, k) - B.cloud.positions[c]).cwiseQuotient(B.cloud.adaptive_lengths[c]).norm() <= 1.0;
                }
                CHECK(mask.contains(spec.cell_index(i, j, k)) == in);
                count += in;
            }
    CHECK(mask.count() == count);
    CHECK(count > 0);
}

TEST_CASE("baseline brush equals a brute-force capsule test") {
    std::mt19937_64 rng(3);
    ParticleCloud cloud;
    for (int i = 0; i < 2000; ++i) cloud.positions.push_back(testing::random_point(rng, Vec3::Zero(), Vec3(1.0, 1.0, 0.2)));
    Stroke s = line_stroke(Vec3(0.1, 0.1, 0.1), Vec3(0.9, 0.5, 0.1), 6, 0.07);
    s.samples.push_back(Vec3(0.5, 0.9, 0.1));
    const IndexSet got = baseline_brush(cloud, s);
    IndexSet want;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        bool in = false;
        for (std::size_t i = 0; i + 1 < s.samples.size(); ++i) {
            const Vec3 a = s.samples[i], d = s.samples[i + 1] - a;
            const double t = std::clamp((cloud.positions[j] - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
            in = in || (cloud.positions[j] - (a + t * d)).norm() <= s.radius;
        }
        if (in) want.push_back(static_cast<std::uint32_t>(j));
    }
    CHECK(got == want);
    CHECK_FALSE(got.empty());

    Stroke dot;
    dot.samples = {cloud.positions[42]};
    dot.radius = 1e-9;
    CHECK(baseline_brush(cloud, dot) == IndexSet{42});
}

TEST_CASE("combine set algebra") {
    const IndexSet a = {1, 2, 3};
    CHECK(combine(a, {}, CombineMode::union_) == a);
    CHECK(combine(a, a, CombineMode::subtract).empty());
    CHECK(combine(a, {2}, CombineMode::subtract) == IndexSet{1, 3});
    CHECK(combine({1, 5}, {2, 5, 9}, CombineMode::union_) == IndexSet{1, 2, 5, 9});
    CHECK(combine_mode_from_string("subtract") == CombineMode::subtract);
    CHECK_THROWS_AS(combine_mode_from_string("xor"), InvalidInput);
    CHECK(technique_from_string(to_string(Technique::brush)) == Technique::brush);
    CHECK_THROWS_AS(technique_from_string("lasso"), InvalidInput);
}

TEST_CASE("select_with_stroke dispatches and applies the slider") {
    const Blobs& B = blobs();
    const Stroke s = line_stroke(B.a - Vec3(0.05, 0, 0), B.a + Vec3(0.05, 0, 0), 3, 0.05);
    const Selection direct = adjust_threshold(B.field, B.cloud, meta_paint(B.field, B.cloud, s), -1.0);
    const Selection via = select_with_stroke(B.field, B.cloud, Technique::paint, s, -1.0);
    CHECK(via.particles == direct.particles);
    CHECK(via.threshold == direct.threshold);
    const Selection base = select_with_stroke(B.field, B.cloud, Technique::baseline, s);
    CHECK(base.particles == baseline_brush(B.cloud, s));
    CHECK(base.mesh.empty());
    Stroke pointer;
    pointer.samples = {B.a};
    CHECK_NOTHROW(select_with_stroke(B.field, B.cloud, Technique::point, pointer));
    CHECK_THROWS_AS(select_with_stroke(B.field, B.cloud, Technique::point, Stroke{}), InvalidInput);
}

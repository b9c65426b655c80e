#include <cmath>
#include <numbers>
#include <random>

#include "metacast/data.hpp"

namespace metacast {

namespace {

constexpr double kPi = std::numbers::pi;

// mt19937_64 output is fixed by the standard; the conversions below are explicit so
// generated clouds do not depend on the library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    Vec3 normal3() {
        const double x = normal();
        const double y = normal();
        const double z = normal();
        return {x, y, z};
    }

    // Upper unit hemisphere (z >= 0), uniform by area.
    Vec3 hemisphere() {
        const double z = uniform();
        const double phi = 2.0 * kPi * uniform();
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {s * std::cos(phi), s * std::sin(phi), z};
    }

    // Rejection sample of w in [0, 1) with density proportional to 1 + amplitude * shape(w).
    template <class Shape>
    double modulated(double amplitude, Shape shape) {
        for (;;) {
            const double w = uniform();
            if (uniform() * (1.0 + amplitude) <= 1.0 + amplitude * shape(w)) {
                return w;
            }
        }
    }

private:
    std::mt19937_64 engine_;
};

Vec3 to_f32(const Vec3& p) {
    return {static_cast<double>(static_cast<float>(p[0])), static_cast<double>(static_cast<float>(p[1])),
            static_cast<double>(static_cast<float>(p[2]))};
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidInput(std::string(what) + " must be positive");
    }
}

struct Emitter {
    ParticleCloud cloud;
    void add(const Vec3& p, bool target) {
        cloud.positions.push_back(to_f32(p));
        cloud.labels->push_back(target);
    }
};

void gen_disk(const DatasetParams& params, Rng& rng, Emitter& out) {
    const DiskGeometry& g = params.disk;
    require_positive(g.radius, "disk radius");
    require_positive(g.core_radius, "disk core radius");
    require_positive(g.thickness, "disk thickness");
    if (!(g.core_radius < g.radius) || !(g.falloff >= 0.0 && g.falloff < 2.0)) {
        throw InvalidInput("disk needs core_radius < radius and 0 <= falloff < 2");
    }
    // Radial CDF of surface density r^-falloff over an annulus is ~ r^(2 - falloff).
    const double p = 2.0 - g.falloff;
    const double core_share = std::pow(g.core_radius / g.radius, p);
    const auto emit = [&](double r, bool target) {
        const double phi = 2.0 * kPi * rng.uniform();
        out.add({r * std::cos(phi), r * std::sin(phi), g.thickness * (rng.uniform() - 0.5)}, target);
    };
    for (std::size_t i = 0; i < params.target_count; ++i) {
        emit(g.core_radius * std::pow(rng.uniform(), 1.0 / p), true);
    }
    for (std::size_t i = 0; i < params.noise_count; ++i) {
        emit(g.radius * std::pow(core_share + rng.uniform() * (1.0 - core_share), 1.0 / p), false);
    }
}

void gen_rings(const DatasetParams& params, Rng& rng, Emitter& out) {
    const RingsGeometry& g = params.rings;
    require_positive(g.ring_radius, "ring radius");
    require_positive(g.tube_radius, "ring tube radius");
    if (!(g.gap >= 0.0) || !(g.target_fraction > 0.0 && g.target_fraction < 1.0)) {
        throw InvalidInput("rings need gap >= 0 and 0 < target_fraction < 1");
    }
    const double f = g.target_fraction;
    // Ring 0 lies in the xy-plane (y >= 0); ring 1 in the plane y = -gap, bending to z <= 0.
    const auto emit = [&](int ring, double theta, bool target) {
        const double rho = g.tube_radius * std::sqrt(rng.uniform());
        const double phi = 2.0 * kPi * rng.uniform();
        const double a = rho * std::cos(phi);
        const double b = rho * std::sin(phi);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        if (ring == 0) {
            out.add({(g.ring_radius + a) * c, (g.ring_radius + a) * s, b}, target);
        } else {
            out.add({(g.ring_radius + a) * c, b - g.gap, -(g.ring_radius + a) * s}, target);
        }
    };
    for (std::size_t i = 0; i < params.target_count; ++i) {
        emit(static_cast<int>(i % 2), 0.5 * kPi + f * kPi * (rng.uniform() - 0.5), true);
    }
    for (std::size_t i = 0; i < params.noise_count; ++i) {
        const double w = rng.uniform() * (1.0 - f) * kPi;
        emit(static_cast<int>(i % 2), w < 0.5 * (1.0 - f) * kPi ? w : w + f * kPi, false);
    }
}

void gen_shell(const DatasetParams& params, Rng& rng, Emitter& out) {
    const ShellGeometry& g = params.shell;
    require_positive(g.ball_radius, "ball radius");
    require_positive(g.shell_inner, "shell inner radius");
    if (!(g.ball_radius < g.shell_inner && g.shell_inner < g.shell_outer)) {
        throw InvalidInput("shell needs ball_radius < shell_inner < shell_outer");
    }
    const double q3 = std::pow(g.shell_inner / g.shell_outer, 3.0);
    for (std::size_t i = 0; i < params.target_count; ++i) {
        const double r = g.shell_outer * std::cbrt(q3 + rng.uniform() * (1.0 - q3));
        out.add(r * rng.hemisphere(), true);
    }
    for (std::size_t i = 0; i < params.noise_count; ++i) {
        const double r = g.ball_radius * std::cbrt(rng.uniform());
        out.add(r * rng.hemisphere(), false);
    }
}

void gen_strings(const DatasetParams& params, Rng& rng, Emitter& out) {
    const StringsGeometry& g = params.strings;
    require_positive(g.length, "string length");
    require_positive(g.inner_sigma, "inner string width");
    require_positive(g.outer_sigma, "outer string width");
    require_positive(g.helix_radius, "helix radius");
    if (!(g.helix_modulation >= 0.0 && g.helix_modulation < 1.0) ||
        !(g.density_modulation >= 0.0 && g.density_modulation < 1.0)) {
        throw InvalidInput("string modulations must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < params.target_count; ++i) {
        const double w = rng.modulated(g.density_modulation, [](double t) { return std::cos(4.0 * kPi * t); });
        const double radius = g.helix_radius * (1.0 + g.helix_modulation * std::sin(2.0 * kPi * w));
        const double phi = 2.0 * kPi * g.turns * w;
        const Vec3 center(radius * std::cos(phi), radius * std::sin(phi), g.length * (w - 0.5));
        out.add(center + g.outer_sigma * rng.normal3(), true);
    }
    for (std::size_t i = 0; i < params.noise_count; ++i) {
        const double w = rng.modulated(g.density_modulation, [](double t) { return std::sin(2.0 * kPi * t); });
        const Vec3 center(0.0, 0.0, g.length * (w - 0.5));
        out.add(center + g.inner_sigma * rng.normal3(), false);
    }
}

void gen_filament(const DatasetParams& params, Rng& rng, Emitter& out) {
    const FilamentGeometry& g = params.filament;
    require_positive(g.length, "filament length");
    require_positive(g.sigma, "filament width");
    require_positive(g.noise_half_width, "noise half width");
    for (std::size_t i = 0; i < params.target_count; ++i) {
        const double w = rng.uniform();
        const Vec3 center(g.length * (w - 0.5), g.amplitude * std::sin(2.0 * kPi * w),
                          0.5 * g.amplitude * std::sin(kPi * w));
        out.add(center + g.sigma * rng.normal3(), true);
    }
    for (std::size_t i = 0; i < params.noise_count; ++i) {
        const double x = rng.uniform();
        const double y = rng.uniform();
        const double z = rng.uniform();
        out.add(g.noise_half_width * Vec3(2.0 * x - 1.0, 2.0 * y - 1.0, 2.0 * z - 1.0), false);
    }
}

}  // namespace

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::disk: return "disk";
        case DatasetKind::rings: return "rings";
        case DatasetKind::shell: return "shell";
        case DatasetKind::strings: return "strings";
        case DatasetKind::filament: return "filament";
    }
    return "unknown";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
    if (name == "disk") return DatasetKind::disk;
    if (name == "rings") return DatasetKind::rings;
    if (name == "shell") return DatasetKind::shell;
    if (name == "strings") return DatasetKind::strings;
    if (name == "filament") return DatasetKind::filament;
    throw InvalidInput("unknown dataset kind '" + name + "'");
}

void DatasetParams::scale_geometry(double c) {
    disk.radius *= c;
    disk.core_radius *= c;
    disk.thickness *= c;
    rings.ring_radius *= c;
    rings.tube_radius *= c;
    rings.gap *= c;
    shell.ball_radius *= c;
    shell.shell_inner *= c;
    shell.shell_outer *= c;
    strings.length *= c;
    strings.inner_sigma *= c;
    strings.helix_radius *= c;
    strings.outer_sigma *= c;
    filament.length *= c;
    filament.amplitude *= c;
    filament.sigma *= c;
    filament.noise_half_width *= c;
}

ParticleCloud gen_dataset(const DatasetParams& params) {
    Rng rng(params.seed);
    Emitter out;
    out.cloud.labels.emplace();
    out.cloud.positions.reserve(params.target_count + params.noise_count);
    out.cloud.labels->reserve(params.target_count + params.noise_count);
    switch (params.kind) {
        case DatasetKind::disk: gen_disk(params, rng, out); break;
        case DatasetKind::rings: gen_rings(params, rng, out); break;
        case DatasetKind::shell: gen_shell(params, rng, out); break;
        case DatasetKind::strings: gen_strings(params, rng, out); break;
        case DatasetKind::filament: gen_filament(params, rng, out); break;
    }
    return std::move(out.cloud);
}

}  // namespace metacast

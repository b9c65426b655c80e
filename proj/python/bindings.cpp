#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "metacast/service.hpp"

namespace py = pybind11;
using namespace metacast;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const Points& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) {
        throw InvalidInput("expected an (N, 3) array");
    }
    const auto r = a.unchecked<2>();
    std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        out[i] = Vec3(r(i, 0), r(i, 1), r(i, 2));
    }
    return out;
}

py::array_t<double> from_points(const std::vector<Vec3>& pts) {
    py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            w(i, a) = pts[i][a];
        }
    }
    return out;
}

py::array_t<std::uint32_t> from_indices(const IndexSet& s) {
    return py::array_t<std::uint32_t>(static_cast<py::ssize_t>(s.size()), s.data());
}

ParticleCloud make_cloud(const Points& positions, std::optional<std::vector<bool>> labels) {
    ParticleCloud c;
    c.positions = to_points(positions);
    c.labels = std::move(labels);
    c.validate();
    return c;
}

Stroke make_stroke(const Points& samples, double radius) {
    Stroke s;
    s.samples = to_points(samples);
    s.radius = radius;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Density-driven selection for 3D point clouds";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<OutOfDomain>(m, "OutOfDomain", PyExc_IndexError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::enum_<Technique>(m, "Technique")
        .value("point", Technique::point)
        .value("brush", Technique::brush)
        .value("paint", Technique::paint)
        .value("baseline", Technique::baseline);
    py::enum_<CombineMode>(m, "CombineMode")
        .value("union", CombineMode::union_)
        .value("subtract", CombineMode::subtract);

    py::class_<ParticleCloud>(m, "ParticleCloud")
        .def(py::init(&make_cloud), py::arg("positions"), py::arg("labels") = std::nullopt)
        .def_property_readonly("positions", [](const ParticleCloud& c) { return from_points(c.positions); })
        .def_readonly("labels", &ParticleCloud::labels)
        .def_property_readonly("adaptive_lengths",
                               [](const ParticleCloud& c) { return from_points(c.adaptive_lengths); })
        .def("__len__", &ParticleCloud::size);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("box_min", &GridSpec::box_min)
        .def_readwrite("box_max", &GridSpec::box_max)
        .def_readwrite("dims", &GridSpec::dims)
        .def_property_readonly("cell_size", &GridSpec::cell_size)
        .def("node_position", &GridSpec::node_position);

    py::class_<DensityGrid>(m, "DensityGrid")
        .def_property_readonly("spec", &DensityGrid::spec)
        .def_property_readonly("global_lengths", &DensityGrid::global_lengths)
        .def_property_readonly("peak", &DensityGrid::peak)
        .def_property_readonly("values", [](const DensityGrid& f) {
            const Dims3 d = f.spec().dims;
            // (z, y, x) so that values[k, j, i] is node (i, j, k).
            py::array_t<float> out({d[2], d[1], d[0]});
            std::copy(f.values().begin(), f.values().end(), out.mutable_data());
            return out;
        });

    py::class_<FlowResult>(m, "FlowResult")
        .def_readonly("seed", &FlowResult::seed)
        .def_readonly("destination", &FlowResult::destination)
        .def_readonly("steps", &FlowResult::steps)
        .def_readonly("converged", &FlowResult::converged)
        .def_readonly("lambda1", &FlowResult::lambda1)
        .def_readonly("degenerate", &FlowResult::degenerate);

    py::class_<ConfusionStats>(m, "ConfusionStats")
        .def_readonly("tp", &ConfusionStats::tp)
        .def_readonly("fp", &ConfusionStats::fp)
        .def_readonly("fn", &ConfusionStats::fn)
        .def_readonly("tn", &ConfusionStats::tn)
        .def_readonly("f1", &ConfusionStats::f1)
        .def_readonly("mcc", &ConfusionStats::mcc)
        .def_readonly("f1_defined", &ConfusionStats::f1_defined)
        .def_readonly("mcc_defined", &ConfusionStats::mcc_defined);

    py::class_<Selection>(m, "Selection")
        .def_property_readonly("technique", [](const Selection& s) { return s.technique; })
        .def_readonly("rho0", &Selection::rho0)
        .def_readonly("s", &Selection::s)
        .def_readonly("threshold", &Selection::threshold)
        .def_readonly("kept_components", &Selection::kept_components)
        .def_readonly("flags", &Selection::flags)
        .def_property_readonly("particles", [](const Selection& s) { return from_indices(s.particles); })
        .def_property_readonly("anchors", [](const Selection& s) { return from_points(s.anchors); })
        .def_property_readonly("mesh_vertices", [](const Selection& s) { return from_points(s.mesh.vertices); })
        .def_property_readonly("mesh_triangles", [](const Selection& s) { return s.mesh.triangles; })
        .def("to_json", [](const Selection& s) { return selection_text(s); })
        .def("to_obj", &mesh_obj_text);

    m.def(
        "gen_dataset",
        [](const std::string& kind, std::size_t target, std::size_t noise, std::uint64_t seed, double scale) {
            DatasetParams p;
            p.kind = dataset_kind_from_string(kind);
            p.target_count = target;
            p.noise_count = noise;
            p.seed = seed;
            p.scale_geometry(scale);
            return gen_dataset(p);
        },
        py::arg("kind"), py::arg("target") = 20000, py::arg("noise") = 20000, py::arg("seed") = 1,
        py::arg("scale") = 1.0);

    m.def(
        "build_density",
        [](ParticleCloud& cloud, int dims) { return build_density(cloud, {dims, dims, dims}); },
        py::arg("cloud"), py::arg("dims") = 100, py::call_guard<py::gil_scoped_release>());
    m.def(
        "sample_density", [](const DensityGrid& f, const Vec3& r) { return sample_density(f, r); },
        py::arg("field"), py::arg("r"));
    m.def(
        "sample_gradient", [](const DensityGrid& f, const Vec3& r) { return sample_gradient(f, r); },
        py::arg("field"), py::arg("r"));
    m.def(
        "ascend",
        [](const DensityGrid& f, const Vec3& seed, bool lambda1) {
            FlowConfig c;
            c.compute_lambda1 = lambda1;
            return ascend(f, seed, c);
        },
        py::arg("field"), py::arg("seed"), py::arg("compute_lambda1") = false);

    m.def(
        "meta_point",
        [](const DensityGrid& f, const ParticleCloud& c, const Points& samples) {
            return meta_point(f, c, to_points(samples));
        },
        py::arg("field"), py::arg("cloud"), py::arg("samples"));
    m.def(
        "meta_brush",
        [](const DensityGrid& f, const ParticleCloud& c, const Points& samples, double radius) {
            return meta_brush(f, c, make_stroke(samples, radius));
        },
        py::arg("field"), py::arg("cloud"), py::arg("samples"), py::arg("radius"));
    m.def(
        "meta_paint",
        [](const DensityGrid& f, const ParticleCloud& c, const Points& samples, double radius) {
            return meta_paint(f, c, make_stroke(samples, radius));
        },
        py::arg("field"), py::arg("cloud"), py::arg("samples"), py::arg("radius"));
    m.def(
        "baseline_brush",
        [](const ParticleCloud& c, const Points& samples, double radius) {
            return from_indices(baseline_brush(c, make_stroke(samples, radius)));
        },
        py::arg("cloud"), py::arg("samples"), py::arg("radius"));
    m.def(
        "adjust_threshold",
        [](const DensityGrid& f, const ParticleCloud& c, const Selection& sel, double s) {
            return adjust_threshold(f, c, sel, s);
        },
        py::arg("field"), py::arg("cloud"), py::arg("selection"), py::arg("s"));
    m.def(
        "combine",
        [](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b, CombineMode mode) {
            IndexSet x(a), y(b);
            std::sort(x.begin(), x.end());
            std::sort(y.begin(), y.end());
            x.erase(std::unique(x.begin(), x.end()), x.end());
            y.erase(std::unique(y.begin(), y.end()), y.end());
            return from_indices(combine(x, y, mode));
        },
        py::arg("a"), py::arg("b"), py::arg("mode"));
    m.def(
        "confusion_stats",
        [](const std::vector<std::uint32_t>& selected, const std::vector<bool>& labels) {
            IndexSet s(selected);
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            return confusion_stats(s, labels);
        },
        py::arg("selected"), py::arg("labels"));

    m.def("load_cloud", &load_cloud, py::arg("path"));
    m.def("save_cloud", &save_cloud, py::arg("path"), py::arg("cloud"));
    m.def("load_field", &load_field, py::arg("path"));
    m.def("save_field", &save_field, py::arg("path"), py::arg("field"));
}

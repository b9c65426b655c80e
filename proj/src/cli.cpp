#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "metacast/service.hpp"

namespace metacast {

namespace {

// Adaptive lengths are not stored in the field file; they are rebuilt from the
// cloud with the field's global lengths, which reproduces the build exactly.
void attach_lengths(ParticleCloud& cloud, const DensityGrid& field) {
    cloud.adaptive_lengths = adaptive_smoothing_lengths(cloud, field.global_lengths());
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_text_file(path, text);
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"metacast: density-driven selection for 3D point clouds"};
    app.require_subcommand(1);

    // gen
    std::string gen_kind;
    DatasetParams gen_params;
    double gen_scale = 1.0;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "generate a labeled dataset");
    gen->add_option("kind", gen_kind, "disk, rings, shell, strings or filament")->required();
    gen->add_option("--target", gen_params.target_count, "target particle count");
    gen->add_option("--noise", gen_params.noise_count, "interferer particle count");
    gen->add_option("--seed", gen_params.seed, "random seed");
    gen->add_option("--scale", gen_scale, "multiply every length by this factor")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "cloud file (.csv or .mtcc)")->required();

    // density
    std::string density_cloud;
    std::string density_out;
    int density_dims = 100;
    std::string density_log = "natural";
    auto* density = app.add_subcommand("density", "estimate the density grid of a cloud");
    density->add_option("--cloud", density_cloud)->required();
    density->add_option("--out", density_out, "field file")->required();
    density->add_option("--dims", density_dims, "nodes per axis")->check(CLI::Range(2, 1024));
    density->add_option("--log", density_log, "log base for the global lengths")
        ->check(CLI::IsMember({"natural", "10"}));

    // select
    std::string select_technique;
    std::string select_cloud;
    std::string select_field;
    std::string select_stroke;
    std::string select_out;
    std::string select_mesh;
    double select_s = 0.0;
    auto* select = app.add_subcommand("select", "run a selection technique on a stroke");
    select->add_option("technique", select_technique, "point, brush, paint or baseline")->required();
    select->add_option("--cloud", select_cloud)->required();
    select->add_option("--field", select_field)->required();
    select->add_option("--stroke", select_stroke, "stroke JSON")->required();
    select->add_option("--s", select_s, "threshold slider value");
    select->add_option("--out", select_out, "selection JSON (stdout when omitted)");
    select->add_option("--mesh", select_mesh, "write the surface as OBJ");

    // adjust
    std::string adjust_sel;
    std::string adjust_cloud;
    std::string adjust_field;
    std::string adjust_out;
    std::string adjust_mesh;
    double adjust_s = 0.0;
    auto* adjust = app.add_subcommand("adjust", "re-threshold a selection");
    adjust->add_option("--sel", adjust_sel)->required();
    adjust->add_option("--cloud", adjust_cloud)->required();
    adjust->add_option("--field", adjust_field)->required();
    adjust->add_option("--s", adjust_s)->required();
    adjust->add_option("--out", adjust_out);
    adjust->add_option("--mesh", adjust_mesh);

    // metrics
    std::string metrics_sel;
    std::string metrics_truth;
    std::string metrics_out;
    auto* metrics = app.add_subcommand("metrics", "score a selection against labels");
    metrics->add_option("--sel", metrics_sel)->required();
    metrics->add_option("--truth", metrics_truth, "labeled cloud")->required();
    metrics->add_option("--out", metrics_out);

    // serve
    int serve_port = 8765;
    std::string serve_static;
    std::string serve_host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "run the local HTTP service");
    serve->add_option("--port", serve_port)->check(CLI::Range(1, 65535));
    serve->add_option("--host", serve_host);
    serve->add_option("--static", serve_static, "directory served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            gen_params.kind = dataset_kind_from_string(gen_kind);
            gen_params.scale_geometry(gen_scale);
            save_cloud(gen_out, gen_dataset(gen_params));
        } else if (*density) {
            ParticleCloud cloud = load_cloud(density_cloud);
            DensityOptions options;
            options.log_base = density_log == "10" ? LogBase::base10 : LogBase::natural;
            save_field(density_out, build_density(cloud, {density_dims, density_dims, density_dims}, options));
        } else if (*select) {
            ParticleCloud cloud = load_cloud(select_cloud);
            const DensityGrid field = load_field(select_field);
            attach_lengths(cloud, field);
            const StrokeFile stroke = load_stroke(select_stroke);
            const Selection sel = select_with_stroke(field, cloud, technique_from_string(select_technique),
                                                     stroke.stroke, select_s);
            write_output(select_out, selection_text(sel));
            if (!select_mesh.empty()) {
                write_text_file(select_mesh, mesh_obj_text(sel));
            }
        } else if (*adjust) {
            ParticleCloud cloud = load_cloud(adjust_cloud);
            const DensityGrid field = load_field(adjust_field);
            attach_lengths(cloud, field);
            const Selection sel = adjust_threshold(field, cloud, load_selection(adjust_sel), adjust_s);
            write_output(adjust_out, selection_text(sel));
            if (!adjust_mesh.empty()) {
                write_text_file(adjust_mesh, mesh_obj_text(sel));
            }
        } else if (*metrics) {
            const ParticleCloud truth = load_cloud(metrics_truth);
            if (!truth.has_labels()) {
                throw InvalidInput("truth cloud has no labels");
            }
            const Selection sel = load_selection(metrics_sel);
            write_output(metrics_out, stats_to_json(confusion_stats(sel.particles, *truth.labels)).dump(2) + "\n");
        } else if (*serve) {
            if (const char* env = std::getenv("METACAST_PORT")) {
                try {
                    serve_port = std::stoi(env);
                } catch (const std::exception&) {
                    std::cerr << "METACAST_PORT is not a port number: " << env << "\n";
                    return 1;
                }
            }
            SessionState state;
            return run_server(state, serve_host, serve_port, serve_static);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace metacast

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "metacast/data.hpp"
#include "metacast/techniques.hpp"

namespace metacast {

using Json = nlohmann::ordered_json;

// Cloud CSV: header `x,y,z` or `x,y,z,label`, one particle per row.
void write_cloud_csv(std::ostream& out, const ParticleCloud& cloud);
ParticleCloud read_cloud_csv(std::istream& in);

// Binary cloud: "MTCC", u32 version, u64 count, f32 xyz triples, optional u8 labels.
void write_cloud_binary(std::ostream& out, const ParticleCloud& cloud);
ParticleCloud read_cloud_binary(std::istream& in);

// Picks the binary format by magic when reading and by `.mtcc` extension when writing.
ParticleCloud load_cloud(const std::filesystem::path& path);
ParticleCloud parse_cloud(const std::string& bytes);
void save_cloud(const std::filesystem::path& path, const ParticleCloud& cloud);

// Density grid: "MTCF", u32 version, 3 x u32 dims, 6 x f64 box, 3 x f64 global
// lengths, then f32 node values in x-fastest order.
inline constexpr std::size_t kFieldHeaderBytes = 92;
void write_field(std::ostream& out, const DensityGrid& field);
DensityGrid read_field(std::istream& in);
DensityGrid load_field(const std::filesystem::path& path);
void save_field(const std::filesystem::path& path, const DensityGrid& field);

struct StrokeFile {
    Technique technique = Technique::paint;
    CombineMode mode = CombineMode::union_;
    Stroke stroke;
};

Json stroke_to_json(const StrokeFile& file);
StrokeFile stroke_from_json(const Json& j);
StrokeFile load_stroke(const std::filesystem::path& path);

Json stats_to_json(const ConfusionStats& stats);

// Selection JSON. Besides the summary fields it carries the anchors, the V_init
// mask (run-length encoded) and flags so a file can be re-thresholded later.
Json selection_to_json(const Selection& sel, const std::optional<ConfusionStats>& stats = std::nullopt);
Selection selection_from_json(const Json& j);
std::string selection_text(const Selection& sel, const std::optional<ConfusionStats>& stats = std::nullopt);
Selection load_selection(const std::filesystem::path& path);

// Throws ParseError with the 1-based line of the first JSON error.
Json parse_json(const std::string& text);

void write_obj(std::ostream& out, const TriangleMesh& mesh, double threshold,
               std::span<const std::int32_t> components);
std::string mesh_obj_text(const Selection& sel);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace metacast

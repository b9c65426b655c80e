#include "metacast/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace metacast {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class ByteReader {
public:
    explicit ByteReader(std::istream& in) : in_(in) {}

    template <class T>
    T get(const char* what) {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) {
            throw ParseError(std::string("truncated file while reading ") + what, offset_);
        }
        offset_ += sizeof(T);
        return value;
    }

    void magic(const char (&expected)[5]) {
        char got[4] = {};
        in_.read(got, 4);
        if (in_.gcount() != 4 || std::memcmp(got, expected, 4) != 0) {
            throw ParseError(std::string("bad magic, expected ") + expected, 0);
        }
        offset_ += 4;
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    std::size_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view text, std::size_t line) {
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ParseError("invalid number '" + std::string(text) + "'", line);
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Vec3 vec_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError("expected a 3-element array", 0);
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::openmode{});
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return in;
}

}  // namespace

void write_cloud_csv(std::ostream& out, const ParticleCloud& cloud) {
    cloud.validate();
    out << (cloud.has_labels() ? "x,y,z,label\n" : "x,y,z\n");
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        const Vec3& p = cloud.positions[j];
        out << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2]);
        if (cloud.has_labels()) {
            out << ',' << ((*cloud.labels)[j] ? '1' : '0');
        }
        out << '\n';
    }
}

ParticleCloud read_cloud_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing CSV header", 1);
    }
    const std::string_view header = trim(line);
    ParticleCloud cloud;
    if (header == "x,y,z,label") {
        cloud.labels.emplace();
    } else if (header != "x,y,z") {
        throw ParseError("expected header 'x,y,z' or 'x,y,z,label'", 1);
    }
    const std::size_t columns = cloud.has_labels() ? 4 : 3;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim(line);
        if (row.empty()) {
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = row.find(',', start);
            cells.push_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells.size() != columns) {
            throw ParseError("expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()),
                             line_no);
        }
        cloud.positions.emplace_back(parse_double(cells[0], line_no), parse_double(cells[1], line_no),
                                     parse_double(cells[2], line_no));
        if (cloud.has_labels()) {
            const std::string_view label = trim(cells[3]);
            if (label == "1" || label == "true") {
                cloud.labels->push_back(true);
            } else if (label == "0" || label == "false") {
                cloud.labels->push_back(false);
            } else {
                throw ParseError("invalid label '" + std::string(label) + "'", line_no);
            }
        }
    }
    return cloud;
}

void write_cloud_binary(std::ostream& out, const ParticleCloud& cloud) {
    cloud.validate();
    out.write("MTCC", 4);
    put(out, kFormatVersion);
    put(out, static_cast<std::uint64_t>(cloud.size()));
    for (const Vec3& p : cloud.positions) {
        for (int a = 0; a < 3; ++a) {
            put(out, static_cast<float>(p[a]));
        }
    }
    if (cloud.has_labels()) {
        for (bool l : *cloud.labels) {
            put(out, static_cast<std::uint8_t>(l ? 1 : 0));
        }
    }
}

ParticleCloud read_cloud_binary(std::istream& in) {
    ByteReader r(in);
    r.magic("MTCC");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFormatVersion) {
        throw ParseError("unsupported cloud format version " + std::to_string(version), 4);
    }
    const auto count = r.get<std::uint64_t>("count");
    ParticleCloud cloud;
    cloud.positions.reserve(count);
    for (std::uint64_t j = 0; j < count; ++j) {
        const float x = r.get<float>("position");
        const float y = r.get<float>("position");
        const float z = r.get<float>("position");
        cloud.positions.emplace_back(x, y, z);
    }
    if (!r.at_end()) {
        cloud.labels.emplace();
        cloud.labels->reserve(count);
        for (std::uint64_t j = 0; j < count; ++j) {
            const auto l = r.get<std::uint8_t>("label");
            if (l > 1) {
                throw ParseError("label byte must be 0 or 1", r.offset() - 1);
            }
            cloud.labels->push_back(l == 1);
        }
        if (!r.at_end()) {
            throw ParseError("trailing bytes after labels", r.offset());
        }
    }
    return cloud;
}

ParticleCloud parse_cloud(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    if (bytes.rfind("MTCC", 0) == 0) {
        return read_cloud_binary(in);
    }
    return read_cloud_csv(in);
}

ParticleCloud load_cloud(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    char head[4] = {};
    in.read(head, 4);
    const bool binary = in.gcount() == 4 && std::memcmp(head, "MTCC", 4) == 0;
    in.clear();
    in.seekg(0);
    return binary ? read_cloud_binary(in) : read_cloud_csv(in);
}

void save_cloud(const std::filesystem::path& path, const ParticleCloud& cloud) {
    const bool binary = path.extension() == ".mtcc";
    std::ofstream out = open_out(path, binary);
    binary ? write_cloud_binary(out, cloud) : write_cloud_csv(out, cloud);
}

void write_field(std::ostream& out, const DensityGrid& field) {
    const GridSpec& spec = field.spec();
    out.write("MTCF", 4);
    put(out, kFormatVersion);
    for (int d : spec.dims) {
        put(out, static_cast<std::uint32_t>(d));
    }
    for (int a = 0; a < 3; ++a) put(out, spec.box_min[a]);
    for (int a = 0; a < 3; ++a) put(out, spec.box_max[a]);
    for (int a = 0; a < 3; ++a) put(out, field.global_lengths()[a]);
    out.write(reinterpret_cast<const char*>(field.values().data()),
              static_cast<std::streamsize>(field.values().size() * sizeof(float)));
}

DensityGrid read_field(std::istream& in) {
    ByteReader r(in);
    r.magic("MTCF");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFormatVersion) {
        throw ParseError("unsupported field format version " + std::to_string(version), 4);
    }
    GridSpec spec;
    for (int& d : spec.dims) {
        const auto v = r.get<std::uint32_t>("dims");
        if (v < 2 || v > 4096) {
            throw ParseError("grid dims out of range", r.offset() - 4);
        }
        d = static_cast<int>(v);
    }
    for (int a = 0; a < 3; ++a) spec.box_min[a] = r.get<double>("box_min");
    for (int a = 0; a < 3; ++a) spec.box_max[a] = r.get<double>("box_max");
    Vec3 global;
    for (int a = 0; a < 3; ++a) global[a] = r.get<double>("global lengths");
    std::vector<float> values(spec.node_count());
    for (float& v : values) {
        v = r.get<float>("node values");
    }
    if (!r.at_end()) {
        throw ParseError("trailing bytes after node values", r.offset());
    }
    try {
        return DensityGrid(spec, std::move(values), global);
    } catch (const InvalidInput& e) {
        throw ParseError(e.what(), kFieldHeaderBytes);
    }
}

DensityGrid load_field(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    return read_field(in);
}

void save_field(const std::filesystem::path& path, const DensityGrid& field) {
    std::ofstream out = open_out(path, true);
    write_field(out, field);
}

Json stroke_to_json(const StrokeFile& file) {
    Json samples = Json::array();
    for (std::size_t i = 0; i < file.stroke.samples.size(); ++i) {
        const Vec3& p = file.stroke.samples[i];
        const double t = file.stroke.times.empty() ? 0.0 : file.stroke.times[i];
        samples.push_back({{"x", p[0]}, {"y", p[1]}, {"z", p[2]}, {"t", t}});
    }
    return {{"technique", to_string(file.technique)},
            {"radius", file.stroke.radius},
            {"mode", to_string(file.mode)},
            {"samples", samples}};
}

StrokeFile stroke_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ParseError("stroke must be a JSON object", 0);
    }
    StrokeFile file;
    try {
        file.technique = technique_from_string(j.at("technique").get<std::string>());
        file.mode = combine_mode_from_string(j.value("mode", std::string("union")));
        file.stroke.radius = j.at("radius").get<double>();
        for (const Json& s : j.at("samples")) {
            file.stroke.samples.emplace_back(s.at("x").get<double>(), s.at("y").get<double>(),
                                             s.at("z").get<double>());
            file.stroke.times.push_back(s.value("t", 0.0));
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("invalid stroke: ") + e.what(), 0);
    }
    return file;
}

StrokeFile load_stroke(const std::filesystem::path& path) { return stroke_from_json(parse_json(read_text_file(path))); }

Json stats_to_json(const ConfusionStats& stats) {
    Json j = {{"tp", stats.tp}, {"fp", stats.fp}, {"fn", stats.fn}, {"tn", stats.tn},
              {"f1", stats.f1}, {"mcc", stats.mcc}};
    if (!stats.f1_defined || !stats.mcc_defined) {
        Json undefined = Json::array();
        if (!stats.f1_defined) undefined.push_back("f1");
        if (!stats.mcc_defined) undefined.push_back("mcc");
        j["undefined"] = undefined;
    }
    return j;
}

Json selection_to_json(const Selection& sel, const std::optional<ConfusionStats>& stats) {
    Json j;
    j["technique"] = to_string(sel.technique);
    j["rho0"] = sel.rho0;
    j["s"] = sel.s;
    j["threshold"] = sel.threshold;
    j["kept_components"] = sel.kept_components;
    j["particles"] = sel.particles;
    if (stats) {
        j["stats"] = stats_to_json(*stats);
    }
    Json anchors = Json::array();
    for (const Vec3& a : sel.anchors) {
        anchors.push_back({a[0], a[1], a[2]});
    }
    j["anchors"] = anchors;
    if (sel.mask) {
        Json runs = Json::array();
        const auto& inside = sel.mask->inside;
        for (std::size_t c = 0; c < inside.size();) {
            if (!inside[c]) {
                ++c;
                continue;
            }
            std::size_t end = c;
            while (end < inside.size() && inside[end]) ++end;
            runs.push_back({c, end - c});
            c = end;
        }
        j["mask"] = {{"cell_dims", sel.mask->cell_dims}, {"runs", runs}};
    }
    j["flags"] = sel.flags;
    return j;
}

Selection selection_from_json(const Json& j) {
    Selection sel;
    try {
        sel.technique = technique_from_string(j.at("technique").get<std::string>());
        sel.rho0 = j.at("rho0").get<double>();
        sel.s = j.at("s").get<double>();
        sel.threshold = j.at("threshold").get<double>();
        sel.kept_components = j.at("kept_components").get<std::vector<std::int32_t>>();
        sel.particles = j.at("particles").get<IndexSet>();
        if (!std::is_sorted(sel.particles.begin(), sel.particles.end()) ||
            std::adjacent_find(sel.particles.begin(), sel.particles.end()) != sel.particles.end()) {
            throw ParseError("selection particles must be sorted and unique", 0);
        }
        if (j.contains("anchors")) {
            for (const Json& a : j.at("anchors")) {
                sel.anchors.push_back(vec_from_json(a));
            }
        }
        if (j.contains("mask")) {
            CellMask mask;
            mask.cell_dims = j.at("mask").at("cell_dims").get<Dims3>();
            const std::size_t cells = static_cast<std::size_t>(mask.cell_dims[0]) * mask.cell_dims[1] * mask.cell_dims[2];
            mask.inside.assign(cells, 0);
            for (const Json& run : j.at("mask").at("runs")) {
                const auto start = run.at(0).get<std::size_t>();
                const auto len = run.at(1).get<std::size_t>();
                if (start + len > cells) {
                    throw ParseError("mask run exceeds the cell count", 0);
                }
                std::fill_n(mask.inside.begin() + static_cast<std::ptrdiff_t>(start), len, 1);
            }
            sel.mask = std::move(mask);
        }
        if (j.contains("flags")) {
            sel.flags = j.at("flags").get<std::vector<std::string>>();
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("invalid selection: ") + e.what(), 0);
    }
    return sel;
}

std::string selection_text(const Selection& sel, const std::optional<ConfusionStats>& stats) {
    return selection_to_json(sel, stats).dump(2) + "\n";
}

Selection load_selection(const std::filesystem::path& path) {
    return selection_from_json(parse_json(read_text_file(path)));
}

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t line = 1 + static_cast<std::size_t>(
                                         std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
        throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
}

void write_obj(std::ostream& out, const TriangleMesh& mesh, double threshold, std::span<const std::int32_t> components) {
    out << "# metacast mesh threshold=" << format_double(threshold) << " components=";
    for (std::size_t i = 0; i < components.size(); ++i) {
        out << (i ? "," : "") << components[i];
    }
    out << '\n';
    for (const Vec3& v : mesh.vertices) {
        out << "v " << format_double(v[0]) << ' ' << format_double(v[1]) << ' ' << format_double(v[2]) << '\n';
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

std::string mesh_obj_text(const Selection& sel) {
    std::ostringstream out;
    write_obj(out, sel.mesh, sel.threshold, sel.kept_components);
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out = open_out(path, true);
    out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace metacast

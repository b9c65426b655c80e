#include <doctest.h>

#include <sstream>

#include "metacast/service.hpp"

using namespace metacast;

namespace {

ParticleCloud two_blob_cloud() {
    DatasetParams p;
    p.kind = DatasetKind::shell;
    p.target_count = 3000;
    p.noise_count = 2000;
    p.seed = 4;
    return gen_dataset(p);
}

std::string csv_of(const ParticleCloud& c) {
    std::ostringstream out;
    write_cloud_csv(out, c);
    return out.str();
}

Response call(SessionState& s, std::string method, std::string path, std::string body = {},
              std::map<std::string, std::string> query = {}) {
    return s.handle({std::move(method), std::move(path), std::move(query), std::move(body)});
}

Json paint_stroke() {
    StrokeFile f;
    f.technique = Technique::paint;
    f.stroke.radius = 0.03;
    for (int i = 0; i < 10; ++i) {
        const double theta = 0.3 + 0.1 * i;
        f.stroke.samples.emplace_back(0.68 * std::cos(theta), 0.0, 0.68 * std::sin(theta));
        f.stroke.times.push_back(i / 90.0);
    }
    return stroke_to_json(f);
}

struct Loaded {
    SessionState state;
    Loaded() {
        const Response r = call(state, "POST", "/api/cloud", csv_of(two_blob_cloud()), {{"dims", "32"}});
        REQUIRE(r.status == 202);
        state.wait_for_build();
    }
};

}  // namespace

TEST_CASE("status before any upload is 404") {
    SessionState s;
    const Response r = call(s, "GET", "/api/status");
    CHECK(r.status == 404);
    CHECK(parse_json(r.body).at("error") == "no session data");
    CHECK(call(s, "GET", "/api/selection").status == 404);
    CHECK(call(s, "GET", "/api/nowhere").status == 404);
    CHECK(call(s, "DELETE", "/api/status").status == 404);
}

TEST_CASE("upload validation") {
    SessionState s;
    CHECK(call(s, "POST", "/api/cloud", "x,y\n1,2\n").status == 400);
    CHECK(call(s, "POST", "/api/cloud", "x,y,z\n1,2,3\n").status == 422);
    CHECK(call(s, "POST", "/api/cloud", csv_of(two_blob_cloud()), {{"dims", "1"}}).status == 400);
}

TEST_CASE("upload builds asynchronously and reports the grid") {
    Loaded l;
    const Response r = call(l.state, "GET", "/api/status");
    REQUIRE(r.status == 200);
    const Json j = parse_json(r.body);
    CHECK(j.at("build").at("state") == "ready");
    CHECK(j.at("particles") == 5000);
    CHECK(j.at("labeled") == true);
    CHECK(j.at("grid").at("dims") == Json::array({32, 32, 32}));
    CHECK(j.at("selection").is_null());

    const Json pts = parse_json(call(l.state, "GET", "/api/cloud/points", {}, {{"decimate", "10"}}).body);
    CHECK(pts.at("positions").size() == 3 * 500);
    CHECK(pts.at("labels").size() == 500);
}

TEST_CASE("select, threshold, revisions and combine") {
    Loaded l;
    Json body = paint_stroke();
    Response r = call(l.state, "POST", "/api/select", body.dump());
    REQUIRE(r.status == 200);
    const Json first = parse_json(r.body);
    CHECK(first.at("mesh") == "/api/mesh");
    CHECK(first.contains("stats"));
    CHECK(first.at("stats").at("f1").get<double>() > 0.0);
    const std::string text0 = call(l.state, "GET", "/api/selection").body;

    SUBCASE("threshold at s = 0 reproduces the selection") {
        r = call(l.state, "PATCH", "/api/threshold", R"({"s": 0})");
        REQUIRE(r.status == 200);
        CHECK(call(l.state, "GET", "/api/selection").body == text0);
        CHECK(call(l.state, "PATCH", "/api/threshold", R"({"s": "big"})").status == 400);
    }
    SUBCASE("stale revision is a conflict") {
        const auto rev = first.at("revision").get<std::uint64_t>();
        Json stale = paint_stroke();
        stale["revision"] = rev - 1;
        r = call(l.state, "POST", "/api/select", stale.dump());
        CHECK(r.status == 409);
        CHECK(parse_json(r.body).at("revision") == rev);
        stale["revision"] = rev;
        CHECK(call(l.state, "POST", "/api/select", stale.dump()).status == 200);
    }
    SUBCASE("empty stroke is unprocessable") {
        Json empty = paint_stroke();
        empty["samples"] = Json::array();
        CHECK(call(l.state, "POST", "/api/select", empty.dump()).status == 422);
        CHECK(call(l.state, "POST", "/api/select", "{bad").status == 400);
    }
    SUBCASE("combine with a baseline stroke") {
        CHECK(call(l.state, "POST", "/api/combine", R"({"mode":"union"})").status == 422);
        Json brush = paint_stroke();
        brush["technique"] = "baseline";
        const IndexSet base = selection_from_json(parse_json(text0)).particles;
        const IndexSet extra = baseline_brush(two_blob_cloud(), stroke_from_json(brush).stroke);
        r = call(l.state, "POST", "/api/combine", Json{{"mode", "subtract"}, {"stroke", brush}}.dump());
        REQUIRE(r.status == 200);
        CHECK(parse_json(r.body).at("particles").get<IndexSet>() == combine(base, extra, CombineMode::subtract));
    }
    SUBCASE("mesh is OBJ text") {
        r = call(l.state, "GET", "/api/mesh");
        CHECK(r.content_type == "text/plain");
        CHECK(r.body.rfind("# metacast mesh", 0) == 0);
    }
}

TEST_CASE("CLI and HTTP selections are byte-identical") {
    const auto dir = std::filesystem::temp_directory_path() / "metacast_service_test";
    std::filesystem::create_directories(dir);
    const ParticleCloud cloud = two_blob_cloud();
    save_cloud(dir / "cloud.csv", cloud);
    write_text_file(dir / "stroke.json", paint_stroke().dump());
    const std::string cloud_s = (dir / "cloud.csv").string(), field_s = (dir / "field.mtcf").string(),
                      stroke_s = (dir / "stroke.json").string(), out_s = (dir / "sel.json").string();
    const char* density[] = {"metacast", "density", "--cloud", cloud_s.c_str(), "--out", field_s.c_str(), "--dims", "32"};
    REQUIRE(run_cli(8, density) == 0);
    const char* select[] = {"metacast", "select", "paint", "--cloud", cloud_s.c_str(), "--field", field_s.c_str(),
                            "--stroke", stroke_s.c_str(), "--s", "-1", "--out", out_s.c_str()};
    REQUIRE(run_cli(13, select) == 0);

    Loaded l;
    Json body = paint_stroke();
    body["s"] = -1;
    REQUIRE(call(l.state, "POST", "/api/select", body.dump()).status == 200);
    CHECK(call(l.state, "GET", "/api/selection").body == read_text_file(dir / "sel.json"));

    const char* bad[] = {"metacast", "select", "paint", "--cloud", "/nonexistent.csv", "--field", field_s.c_str(),
                         "--stroke", stroke_s.c_str()};
    CHECK(run_cli(9, bad) == 2);
    const char* usage[] = {"metacast", "select"};
    CHECK(run_cli(2, usage) == 1);
    std::filesystem::remove_all(dir);
}

#include <charconv>

#include "metacast/service.hpp"

namespace metacast {

namespace {

Response json_response(int status, const Json& body) {
    return {status, "application/json", body.dump() + "\n"};
}

Response error_response(int status, const std::string& message) {
    return json_response(status, Json{{"error", message}});
}

std::optional<int> parse_positive_int(const std::string& text) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v < 1) {
        return std::nullopt;
    }
    return v;
}

}  // namespace

SessionState::SessionState(SessionOptions options) : options_(std::move(options)) {}

SessionState::~SessionState() {
    if (builder_.joinable()) {
        builder_.join();
    }
}

void SessionState::wait_for_build() {
    std::lock_guard request_lock(request_mutex_);
    if (builder_.joinable()) {
        builder_.join();
    }
}

std::uint64_t SessionState::revision() const {
    std::lock_guard lock(state_mutex_);
    return revision_;
}

std::shared_ptr<const SessionState::Loaded> SessionState::loaded() const {
    std::lock_guard lock(state_mutex_);
    return loaded_;
}

Response SessionState::handle(const Request& request) {
    std::lock_guard request_lock(request_mutex_);
    try {
        const std::string& m = request.method;
        const std::string& p = request.path;
        if (p == "/api/cloud" && m == "POST") return upload_cloud(request);
        if (p == "/api/status" && m == "GET") return status();
        if (p == "/api/cloud/points" && m == "GET") return points(request);
        if (p == "/api/select" && m == "POST") return select(request);
        if (p == "/api/threshold" && m == "PATCH") return threshold(request);
        if (p == "/api/combine" && m == "POST") return combine(request);
        if (p == "/api/selection" && m == "GET") return selection_text_response();
        if (p == "/api/mesh" && m == "GET") return mesh_response();
        return error_response(404, "no route for " + m + " " + p);
    } catch (const ParseError& e) {
        return error_response(400, e.what());
    } catch (const InvalidInput& e) {
        return error_response(422, e.what());
    } catch (const OutOfDomain& e) {
        return error_response(422, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

std::optional<Response> SessionState::check_revision(const Json& body) const {
    if (body.contains("revision")) {
        if (!body["revision"].is_number_unsigned()) {
            return error_response(400, "revision must be a non-negative integer");
        }
        std::lock_guard lock(state_mutex_);
        if (body["revision"].get<std::uint64_t>() != revision_) {
            return json_response(409, Json{{"error", "stale revision"}, {"revision", revision_}});
        }
    }
    return std::nullopt;
}

Response SessionState::upload_cloud(const Request& request) {
    ParticleCloud cloud = parse_cloud(request.body);
    cloud.validate();
    if (cloud.size() < 2) {
        return error_response(422, "cloud needs at least 2 particles");
    }
    Dims3 dims = options_.default_dims;
    if (auto it = request.query.find("dims"); it != request.query.end()) {
        const auto n = parse_positive_int(it->second);
        if (!n || *n < 2) {
            return error_response(400, "dims must be an integer >= 2");
        }
        dims = {*n, *n, *n};
    }
    if (builder_.joinable()) {
        builder_.join();
    }

    std::uint64_t token = 0;
    std::uint64_t revision = 0;
    {
        std::lock_guard lock(state_mutex_);
        token = ++build_token_;
        build_state_ = BuildState::building;
        build_error_.clear();
        build_phase_ = 0;
        revision = ++revision_;
    }
    builder_ = std::thread([this, cloud = std::move(cloud), dims]() mutable {
        try {
            build_phase_ = 1;
            DensityGrid field = build_density(cloud, dims, options_.density);
            build_phase_ = 2;
            auto loaded = std::make_shared<const Loaded>(Loaded{std::move(cloud), std::move(field)});
            std::lock_guard lock(state_mutex_);
            loaded_ = std::move(loaded);
            selection_.reset();
            pending_operand_.reset();
            combined_.reset();
            build_state_ = BuildState::ready;
            ++revision_;
        } catch (const std::exception& e) {
            std::lock_guard lock(state_mutex_);
            build_state_ = BuildState::failed;
            build_error_ = e.what();
            ++revision_;
        }
    });
    return json_response(202, Json{{"token", token}, {"revision", revision}, {"status", "building"}});
}

Response SessionState::status() const {
    std::lock_guard lock(state_mutex_);
    if (build_state_ == BuildState::none) {
        return error_response(404, "no session data");
    }
    static constexpr const char* kStateNames[] = {"none", "building", "ready", "failed"};
    Json build = {{"token", build_token_},
                  {"state", kStateNames[static_cast<int>(build_state_)]},
                  {"progress", build_state_ == BuildState::building ? build_phase_.load() / 2.0 : 1.0}};
    if (!build_error_.empty()) {
        build["error"] = build_error_;
    }
    Json out = {{"revision", revision_}, {"build", build}};
    if (loaded_) {
        const GridSpec& spec = loaded_->field.spec();
        out["particles"] = loaded_->cloud.size();
        out["labeled"] = loaded_->cloud.has_labels();
        out["grid"] = {{"dims", spec.dims},
                       {"box_min", {spec.box_min[0], spec.box_min[1], spec.box_min[2]}},
                       {"box_max", {spec.box_max[0], spec.box_max[1], spec.box_max[2]}},
                       {"cell_size", spec.min_cell_size()}};
    }
    out["selection"] = selection_ ? Json{{"technique", to_string(selection_->technique)},
                                         {"s", selection_->s},
                                         {"count", selection_->particles.size()}}
                                  : Json(nullptr);
    out["combined_count"] = combined_ ? Json(combined_->size()) : Json(nullptr);
    return json_response(200, out);
}

Response SessionState::points(const Request& request) const {
    const auto current = loaded();
    if (!current) {
        return error_response(404, "no session data");
    }
    int stride = 1;
    if (auto it = request.query.find("decimate"); it != request.query.end()) {
        const auto n = parse_positive_int(it->second);
        if (!n) {
            return error_response(400, "decimate must be a positive integer");
        }
        stride = *n;
    }
    const ParticleCloud& cloud = current->cloud;
    Json positions = Json::array();
    Json labels = Json::array();
    for (std::size_t j = 0; j < cloud.size(); j += static_cast<std::size_t>(stride)) {
        const Vec3& p = cloud.positions[j];
        positions.push_back(p[0]);
        positions.push_back(p[1]);
        positions.push_back(p[2]);
        if (cloud.has_labels()) {
            labels.push_back((*cloud.labels)[j] ? 1 : 0);
        }
    }
    Json out = {{"revision", revision()}, {"count", cloud.size()}, {"stride", stride}, {"positions", positions}};
    if (cloud.has_labels()) {
        out["labels"] = labels;
    }
    return json_response(200, out);
}

Json SessionState::selection_reply(const std::string& selection_json) const {
    std::lock_guard lock(state_mutex_);
    Json out = {{"revision", revision_}, {"selection", parse_json(selection_json)}, {"mesh", "/api/mesh"}};
    if (loaded_ && loaded_->cloud.has_labels() && selection_) {
        out["stats"] = stats_to_json(confusion_stats(selection_->particles, *loaded_->cloud.labels));
    }
    return out;
}

Response SessionState::select(const Request& request) {
    const Json body = parse_json(request.body);
    if (!body.is_object()) {
        return error_response(400, "request body must be a JSON object");
    }
    if (auto stale = check_revision(body)) {
        return *stale;
    }
    const auto current = loaded();
    if (!current) {
        return error_response(404, "no session data");
    }
    const StrokeFile stroke = stroke_from_json(body);
    double s = 0.0;
    if (body.contains("s")) {
        if (!body["s"].is_number()) {
            return error_response(400, "s must be a number");
        }
        s = body["s"].get<double>();
    }
    Selection sel = select_with_stroke(current->field, current->cloud, stroke.technique, stroke.stroke, s,
                                       options_.techniques);
    const std::string text = selection_text(sel);
    {
        std::lock_guard lock(state_mutex_);
        if (sel.technique == Technique::baseline) {
            pending_operand_ = sel.particles;
        }
        selection_ = std::move(sel);
        combined_.reset();
        ++revision_;
    }
    return json_response(200, selection_reply(text));
}

Response SessionState::threshold(const Request& request) {
    const Json body = parse_json(request.body);
    if (!body.is_object() || !body.contains("s") || !body["s"].is_number()) {
        return error_response(400, "expected {\"s\": number}");
    }
    if (auto stale = check_revision(body)) {
        return *stale;
    }
    const auto current = loaded();
    std::optional<Selection> previous;
    {
        std::lock_guard lock(state_mutex_);
        previous = selection_;
    }
    if (!current || !previous) {
        return error_response(404, "no selection to adjust");
    }
    Selection sel = adjust_threshold(current->field, current->cloud, *previous, body["s"].get<double>(),
                                     options_.techniques);
    const std::string text = selection_text(sel);
    {
        std::lock_guard lock(state_mutex_);
        selection_ = std::move(sel);
        combined_.reset();
        ++revision_;
    }
    return json_response(200, selection_reply(text));
}

Response SessionState::combine(const Request& request) {
    const Json body = parse_json(request.body);
    if (!body.is_object() || !body.contains("mode") || !body["mode"].is_string()) {
        return error_response(400, "expected {\"mode\": \"union\"|\"subtract\"}");
    }
    if (auto stale = check_revision(body)) {
        return *stale;
    }
    const CombineMode mode = combine_mode_from_string(body["mode"].get<std::string>());
    const auto current = loaded();
    if (!current) {
        return error_response(404, "no session data");
    }
    IndexSet operand;
    if (body.contains("stroke")) {
        operand = baseline_brush(current->cloud, stroke_from_json(body["stroke"]).stroke);
    } else {
        std::lock_guard lock(state_mutex_);
        if (!pending_operand_) {
            return error_response(422, "no baseline operand: send a stroke or select with the baseline first");
        }
        operand = *pending_operand_;
    }
    std::lock_guard lock(state_mutex_);
    if (!selection_) {
        return error_response(404, "no selection to combine with");
    }
    const IndexSet& base = combined_ ? *combined_ : selection_->particles;
    combined_ = metacast::combine(base, operand, mode);
    ++revision_;
    Json out = {{"revision", revision_}, {"mode", to_string(mode)}, {"count", combined_->size()},
                {"particles", *combined_}};
    if (current->cloud.has_labels()) {
        out["stats"] = stats_to_json(confusion_stats(*combined_, *current->cloud.labels));
    }
    return json_response(200, out);
}

Response SessionState::selection_text_response() const {
    std::lock_guard lock(state_mutex_);
    if (!selection_) {
        return error_response(404, "no selection");
    }
    return {200, "application/json", selection_text(*selection_)};
}

Response SessionState::mesh_response() const {
    std::lock_guard lock(state_mutex_);
    if (!selection_) {
        return error_response(404, "no selection");
    }
    return {200, "text/plain", mesh_obj_text(*selection_)};
}

}  // namespace metacast

#include "moreforge/spec.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace moreforge {

namespace {

constexpr std::array<std::string_view, 9> kPhenomenonNames = {
    "gravity", "acceleration", "collision", "oscillation", "momentum",
    "buoyancy", "inertia", "pendulum", "pulley",
};

constexpr std::array<Rgb, 12> kPalette = {{
    {220, 40, 40},  {30, 110, 220}, {40, 170, 60},  {240, 150, 20},
    {150, 60, 200}, {20, 180, 190}, {230, 60, 160}, {140, 110, 30},
    {100, 200, 20}, {200, 90, 60},  {60, 60, 180},  {180, 30, 100},
}};

} // namespace

std::string_view to_string(Phenomenon p)
{
    return kPhenomenonNames[static_cast<std::size_t>(p)];
}

std::optional<Phenomenon> phenomenon_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kPhenomenonNames.size(); ++i) {
        if (kPhenomenonNames[i] == name) {
            return static_cast<Phenomenon>(i);
        }
    }
    return std::nullopt;
}

Rgb default_body_color(std::size_t index)
{
    if (index < kPalette.size()) {
        return kPalette[index];
    }
    // Deterministic spread for large scenes; keep channels apart so it is never grey.
    const auto k = static_cast<unsigned>(index);
    return Rgb{static_cast<std::uint8_t>(40 + (k * 67u) % 180),
               static_cast<std::uint8_t>(30 + (k * 131u) % 60),
               static_cast<std::uint8_t>(120 + (k * 29u) % 130)};
}

double shape_area(const Shape& shape)
{
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleShape>) {
                return std::numbers::pi * s.radius * s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                return s.width * s.height;
            } else {
                return (s.p1 - s.p0).length() * s.thickness;
            }
        },
        shape);
}

double BodySpec::effective_mass() const
{
    if (density) {
        return *density * shape_area(shape);
    }
    return mass.value_or(0.0);
}

std::optional<std::size_t> ScenarioSpec::body_index(std::string_view id) const
{
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (bodies[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

long step_count(double duration_s, double dt_s)
{
    return static_cast<long>(std::floor(duration_s / dt_s * (1.0 + 1e-9)));
}

int frame_stride(double dt_s, double fps)
{
    if (!(fps > 0.0) || !(dt_s > 0.0)) {
        throw Error(ErrorKind::StrideMismatch, "fps and dt must be positive");
    }
    const double ratio = 1.0 / (dt_s * fps);
    const double stride = std::round(ratio);
    if (stride < 1.0 || std::abs(dt_s * fps * stride - 1.0) > limits::kStrideTol) {
        std::ostringstream msg;
        msg << "fps " << format_number(fps) << " does not divide 1/dt = " << format_number(1.0 / dt_s);
        throw Error(ErrorKind::StrideMismatch, msg.str(), "render.fps");
    }
    return static_cast<int>(stride);
}

// ---------------------------------------------------------------- validation

namespace {

class Checker {
public:
    std::vector<Violation> out;

    void range(const std::string& path, double v, double lo, double hi, const std::string& allowed)
    {
        if (!std::isfinite(v) || v < lo || v > hi) {
            add(path, v, allowed);
        }
    }
    void positive(const std::string& path, double v)
    {
        if (!std::isfinite(v) || !(v > 0.0)) {
            add(path, v, "(0,∞)");
        }
    }
    void non_negative(const std::string& path, double v)
    {
        if (!std::isfinite(v) || v < 0.0) {
            add(path, v, "[0,∞)");
        }
    }
    void finite(const std::string& path, Vec2 v)
    {
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
            out.push_back({path, "non-finite", "finite"});
        }
    }
    void length(const std::string& path, double v) { range(path, v, limits::kLengthMin, limits::kLengthMax, "[0.01,100]"); }
    void mass(const std::string& path, double v) { range(path, v, limits::kMassMin, limits::kMassMax, "[0.01,1000]"); }
    void density(const std::string& path, double v) { range(path, v, limits::kDensityMin, limits::kDensityMax, "[1,20000]"); }

    void add(const std::string& path, double v, const std::string& allowed)
    {
        out.push_back({path, format_number(v), allowed});
    }
};

std::string idx(const std::string& base, std::size_t i)
{
    return base + "[" + std::to_string(i) + "]";
}

} // namespace

ValidationResult validate_spec(const ScenarioSpec& spec)
{
    Checker c;

    c.range("dt_s", spec.dt_s, limits::kDtMin, limits::kDtMax, "[1e-05,0.1]");
    c.positive("duration_s", spec.duration_s);
    if (spec.dt_s > 0.0 && std::isfinite(spec.duration_s) && spec.duration_s / spec.dt_s > limits::kMaxSteps) {
        c.add("duration_s", spec.duration_s, "duration_s/dt_s ≤ 1e6 steps");
    }

    c.finite("world.gravity", spec.world.gravity);
    c.range("world.gravity", spec.world.gravity.length(), 0.0, limits::kGravityMax, "|g| ≤ 100");
    if (spec.world.bounds) {
        const auto& b = *spec.world.bounds;
        c.finite("world.bounds.min", b.min);
        c.finite("world.bounds.max", b.max);
        if (!(b.max.x > b.min.x && b.max.y > b.min.y)) {
            c.out.push_back({"world.bounds", "empty rectangle", "max > min on both axes"});
        }
    }
    for (std::size_t i = 0; i < spec.world.ground.size(); ++i) {
        const auto& g = spec.world.ground[i];
        const std::string p = idx("world.ground", i);
        c.finite(p + ".p0", g.p0);
        c.finite(p + ".p1", g.p1);
        c.length(p + ".thickness", g.thickness);
        c.length(p + ".length", (g.p1 - g.p0).length());
    }

    if (spec.bodies.empty()) {
        c.out.push_back({"bodies", "0 bodies", "≥ 1 body"});
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        const auto& b = spec.bodies[i];
        const std::string p = idx("bodies", i);
        if (b.id.empty()) {
            c.out.push_back({p + ".id", "\"\"", "non-empty string"});
        } else if (!ids.insert(b.id).second) {
            c.out.push_back({p + ".id", b.id, "unique body id"});
        }
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CircleShape>) {
                    c.length(p + ".shape.radius", s.radius);
                } else if constexpr (std::is_same_v<T, BoxShape>) {
                    c.length(p + ".shape.width", s.width);
                    c.length(p + ".shape.height", s.height);
                } else {
                    c.finite(p + ".shape.p0", s.p0);
                    c.finite(p + ".shape.p1", s.p1);
                    c.length(p + ".shape.thickness", s.thickness);
                    c.length(p + ".shape.length", (s.p1 - s.p0).length());
                    if (!b.is_static) {
                        c.out.push_back({p + ".static", "false", "segment bodies must be static"});
                    }
                }
            },
            b.shape);
        if (!b.is_static) {
            if (b.density) {
                c.density(p + ".density", *b.density);
                c.mass(p + ".mass", b.effective_mass());
            } else if (b.mass) {
                c.mass(p + ".mass", *b.mass);
            } else {
                c.out.push_back({p + ".mass", "absent", "[0.01,1000]"});
            }
        } else if (b.density) {
            c.density(p + ".density", *b.density);
        }
        c.finite(p + ".position", b.position);
        c.finite(p + ".velocity", b.velocity);
        c.range(p + ".velocity", b.velocity.length(), 0.0, limits::kSpeedMax, "|v| ∈ [0,100]");
        c.range(p + ".angle", b.angle, -limits::kAngleMax, limits::kAngleMax, "[-π,π]");
        c.range(p + ".angular_velocity", b.angular_velocity, -limits::kSpeedMax, limits::kSpeedMax, "[-100,100]");
        c.range(p + ".restitution", b.restitution, 0.0, 1.0, "[0,1]");
        c.non_negative(p + ".friction", b.friction);
    }

    auto dynamic_ref = [&](const std::string& path, const std::string& id) -> const BodySpec* {
        auto k = spec.body_index(id);
        if (!k) {
            c.out.push_back({path, id, "existing body id"});
            return nullptr;
        }
        return &spec.bodies[*k];
    };

    for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
        const std::string p = idx("constraints", i);
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, RodSpec>) {
                    c.length(p + ".length", k.length);
                    c.finite(p + ".anchor", k.anchor);
                    if (const auto* b = dynamic_ref(p + ".body", k.body)) {
                        if (b->is_static) {
                            c.out.push_back({p + ".body", k.body, "a dynamic body"});
                        }
                        const double d = (b->position - k.anchor).length();
                        if (std::abs(d - k.length) > limits::kGeometryTol * std::max(1.0, k.length)) {
                            c.out.push_back({p + ".length", format_number(k.length),
                                             "= |position - anchor| = " + format_number(d)});
                        }
                    }
                } else if constexpr (std::is_same_v<T, PinSpec>) {
                    const auto* a = dynamic_ref(p + ".body_a", k.body_a);
                    const auto* b = dynamic_ref(p + ".body_b", k.body_b);
                    if (a && b) {
                        if (k.body_a == k.body_b) {
                            c.out.push_back({p + ".body_b", k.body_b, "a body other than body_a"});
                        } else if (a->is_static && b->is_static) {
                            c.out.push_back({p, "two static bodies", "at least one dynamic body"});
                        }
                    }
                } else if constexpr (std::is_same_v<T, SpringSpec>) {
                    c.range(p + ".stiffness", k.stiffness, 0.0, limits::kStiffnessMax, "(0,1e6]");
                    c.positive(p + ".stiffness", k.stiffness);
                    c.non_negative(p + ".damping", k.damping);
                    c.length(p + ".rest_length", k.rest_length);
                    c.finite(p + ".anchor", k.anchor);
                    if (const auto* b = dynamic_ref(p + ".body", k.body); b && b->is_static) {
                        c.out.push_back({p + ".body", k.body, "a dynamic body"});
                    }
                } else {
                    c.length(p + ".rope_length", k.rope_length);
                    const auto* a = dynamic_ref(p + ".body_a", k.body_a);
                    const auto* b = dynamic_ref(p + ".body_b", k.body_b);
                    if (a && b) {
                        if (k.body_a == k.body_b) {
                            c.out.push_back({p + ".body_b", k.body_b, "a body other than body_a"});
                        } else if (a->is_static && b->is_static) {
                            c.out.push_back({p, "two static bodies", "at least one dynamic body"});
                        }
                        const double minimum = (a->position - k.anchor_a).length() + (b->position - k.anchor_b).length();
                        if (k.rope_length < minimum - limits::kGeometryTol) {
                            c.out.push_back({p + ".rope_length", format_number(k.rope_length),
                                             "≥ straight-line minimum " + format_number(minimum)});
                        }
                    }
                }
            },
            spec.constraints[i]);
    }

    for (std::size_t i = 0; i < spec.fluids.size(); ++i) {
        const auto& f = spec.fluids[i];
        const std::string p = idx("fluids", i);
        c.finite(p + ".rect.min", f.rect.min);
        c.finite(p + ".rect.max", f.rect.max);
        if (!(f.rect.max.x > f.rect.min.x && f.rect.max.y > f.rect.min.y)) {
            c.out.push_back({p + ".rect", "zero area", "positive area"});
        }
        c.density(p + ".density", f.density);
        c.non_negative(p + ".linear_drag", f.linear_drag);
    }

    const auto& r = spec.render;
    if (r.width < 1 || r.width > limits::kImageMax) {
        c.out.push_back({"render.width", std::to_string(r.width), "[1,8192]"});
    }
    if (r.height < 1 || r.height > limits::kImageMax) {
        c.out.push_back({"render.height", std::to_string(r.height), "[1,8192]"});
    }
    c.positive("render.pixels_per_meter", r.pixels_per_meter);
    c.finite("render.camera_origin", r.camera_origin);
    c.positive("render.fps", r.fps);
    if (r.fps > 0.0 && spec.dt_s > 0.0) {
        if (r.fps * spec.dt_s > 1.0 + limits::kStrideTol) {
            c.add("render.fps", r.fps, "≤ 1/dt_s = " + format_number(1.0 / spec.dt_s));
        } else {
            try {
                frame_stride(spec.dt_s, r.fps);
            } catch (const Error&) {
                c.add("render.fps", r.fps, "divisor of 1/dt_s = " + format_number(1.0 / spec.dt_s));
            }
        }
    }
    return {std::move(c.out)};
}

void require_valid(const ScenarioSpec& spec)
{
    auto result = validate_spec(spec);
    if (!result.ok()) {
        Error err(ErrorKind::ValidationFailed, result.violations.front().to_string(), result.violations.front().path);
        err.violations = std::move(result.violations);
        throw err;
    }
}

// ------------------------------------------------------------------- parsing

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what)
{
    throw Error(ErrorKind::Schema, what, path);
}

class Reader {
public:
    Reader(const Json& obj, std::string path, std::initializer_list<std::string_view> allowed)
        : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            schema_error(path_.empty() ? "$" : path_, "expected object");
        }
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            bool known = false;
            for (auto a : allowed) {
                if (a == it.key()) {
                    known = true;
                }
            }
            if (!known) {
                schema_error(sub(it.key()), "unknown field");
            }
        }
    }

    std::string sub(std::string_view key) const
    {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }
    bool has(std::string_view key) const { return obj_.contains(key); }
    const Json& at(std::string_view key) const
    {
        if (!has(key)) {
            schema_error(sub(key), "missing required field");
        }
        return obj_.at(std::string(key));
    }

    double number(std::string_view key) const { return as_number(at(key), sub(key)); }
    double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }
    std::optional<double> opt_number(std::string_view key) const
    {
        return has(key) ? std::optional<double>(number(key)) : std::nullopt;
    }
    std::string string(std::string_view key) const
    {
        const auto& v = at(key);
        if (!v.is_string()) {
            schema_error(sub(key), "expected string");
        }
        return v.get<std::string>();
    }
    std::string string_or(std::string_view key, std::string fallback) const
    {
        return has(key) ? string(key) : std::move(fallback);
    }
    bool boolean_or(std::string_view key, bool fallback) const
    {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = at(key);
        if (!v.is_boolean()) {
            schema_error(sub(key), "expected boolean");
        }
        return v.get<bool>();
    }
    Vec2 vec(std::string_view key) const { return as_vec(at(key), sub(key)); }
    Vec2 vec_or(std::string_view key, Vec2 fallback) const { return has(key) ? vec(key) : fallback; }
    Rgb color_or(std::string_view key, Rgb fallback) const
    {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = at(key);
        const auto p = sub(key);
        if (!v.is_array() || v.size() != 3) {
            schema_error(p, "expected [r,g,b]");
        }
        std::array<std::uint8_t, 3> ch{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number_integer() || v[i].get<long long>() < 0 || v[i].get<long long>() > 255) {
                schema_error(p + "[" + std::to_string(i) + "]", "expected integer in [0,255]");
            }
            ch[i] = static_cast<std::uint8_t>(v[i].get<int>());
        }
        return {ch[0], ch[1], ch[2]};
    }
    const Json& array_or_empty(std::string_view key) const
    {
        static const Json empty = Json::array();
        if (!has(key)) {
            return empty;
        }
        const auto& v = at(key);
        if (!v.is_array()) {
            schema_error(sub(key), "expected array");
        }
        return v;
    }

    static double as_number(const Json& v, const std::string& path)
    {
        if (!v.is_number()) {
            schema_error(path, "expected number");
        }
        return v.get<double>();
    }
    static Vec2 as_vec(const Json& v, const std::string& path)
    {
        if (!v.is_array() || v.size() != 2) {
            schema_error(path, "expected [x,y]");
        }
        return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
    }

private:
    const Json& obj_;
    std::string path_;
};

Rect read_rect(const Json& j, const std::string& path)
{
    Reader r(j, path, {"min", "max"});
    return {r.vec("min"), r.vec("max")};
}

Shape read_shape(const Json& j, const std::string& path)
{
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        schema_error(path + ".type", "missing shape type");
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "circle") {
        Reader r(j, path, {"type", "radius"});
        return CircleShape{r.number("radius")};
    }
    if (type == "box") {
        Reader r(j, path, {"type", "width", "height"});
        return BoxShape{r.number("width"), r.number("height")};
    }
    if (type == "segment") {
        Reader r(j, path, {"type", "p0", "p1", "thickness"});
        return SegmentShape{r.vec("p0"), r.vec("p1"), r.number("thickness")};
    }
    schema_error(path + ".type", "unknown shape type \"" + type + "\"");
}

ConstraintSpec read_constraint(const Json& j, const std::string& path)
{
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        schema_error(path + ".type", "missing constraint type");
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "rod") {
        Reader r(j, path, {"type", "body", "anchor", "length"});
        return RodSpec{r.string("body"), r.vec("anchor"), r.number("length")};
    }
    if (type == "pin") {
        Reader r(j, path, {"type", "body_a", "body_b", "anchor_a", "anchor_b"});
        return PinSpec{r.string("body_a"), r.string("body_b"), r.vec_or("anchor_a", {}), r.vec_or("anchor_b", {})};
    }
    if (type == "spring") {
        Reader r(j, path, {"type", "body", "anchor", "stiffness", "damping", "rest_length"});
        return SpringSpec{r.string("body"), r.vec("anchor"), r.number("stiffness"), r.number_or("damping", 0.0),
                          r.number("rest_length")};
    }
    if (type == "pulley") {
        Reader r(j, path, {"type", "body_a", "body_b", "anchor_a", "anchor_b", "rope_length"});
        return PulleySpec{r.string("body_a"), r.string("body_b"), r.vec("anchor_a"), r.vec("anchor_b"),
                          r.number("rope_length")};
    }
    schema_error(path + ".type", "unknown constraint type \"" + type + "\"");
}

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }
Json rgb_json(Rgb c) { return Json::array({int(c.r), int(c.g), int(c.b)}); }
Json rect_json(const Rect& r) { return Json{{"min", vec_json(r.min)}, {"max", vec_json(r.max)}}; }

} // namespace

ScenarioSpec spec_from_json(const Json& doc)
{
    Reader top(doc, "", {"schema", "phenomenon", "world", "bodies", "constraints", "fluids", "duration_s", "dt_s",
                         "render", "label"});
    ScenarioSpec spec;
    if (top.has("schema") && top.string("schema") != kSchemaVersion) {
        schema_error("schema", "unsupported schema version");
    }
    const auto name = top.string("phenomenon");
    const auto phen = phenomenon_from_string(name);
    if (!phen) {
        schema_error("phenomenon", "unknown phenomenon \"" + name + "\"");
    }
    spec.phenomenon = *phen;
    spec.label = top.string_or("label", "");
    spec.duration_s = top.number_or("duration_s", defaults::kDuration);
    spec.dt_s = top.number_or("dt_s", defaults::kDt);

    if (top.has("world")) {
        Reader w(top.at("world"), "world", {"gravity", "bounds", "ground"});
        spec.world.gravity = w.vec_or("gravity", defaults::kGravity);
        if (w.has("bounds")) {
            spec.world.bounds = read_rect(w.at("bounds"), "world.bounds");
        }
        const auto& ground = w.array_or_empty("ground");
        for (std::size_t i = 0; i < ground.size(); ++i) {
            const std::string p = "world.ground[" + std::to_string(i) + "]";
            Reader g(ground[i], p, {"p0", "p1", "thickness"});
            spec.world.ground.push_back({g.vec("p0"), g.vec("p1"), g.number_or("thickness", 0.05)});
        }
    }

    const auto& bodies = top.at("bodies");
    if (!bodies.is_array()) {
        schema_error("bodies", "expected array");
    }
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const std::string p = "bodies[" + std::to_string(i) + "]";
        Reader b(bodies[i], p,
                 {"id", "shape", "static", "mass", "density", "position", "velocity", "angle", "angular_velocity",
                  "restitution", "friction", "color"});
        BodySpec body;
        body.id = b.string("id");
        body.shape = read_shape(b.at("shape"), p + ".shape");
        body.is_static = b.boolean_or("static", false);
        body.mass = b.opt_number("mass");
        body.density = b.opt_number("density");
        if (!body.is_static && !body.mass && !body.density) {
            schema_error(p + ".mass", "missing required field (mass or density)");
        }
        body.position = b.vec_or("position", {});
        body.velocity = b.vec_or("velocity", {});
        body.angle = b.number_or("angle", 0.0);
        body.angular_velocity = b.number_or("angular_velocity", 0.0);
        body.restitution = b.number_or("restitution", defaults::kRestitution);
        body.friction = b.number_or("friction", defaults::kFriction);
        body.color = b.color_or("color", default_body_color(i));
        spec.bodies.push_back(std::move(body));
    }

    const auto& constraints = top.array_or_empty("constraints");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        spec.constraints.push_back(read_constraint(constraints[i], "constraints[" + std::to_string(i) + "]"));
    }
    const auto& fluids = top.array_or_empty("fluids");
    for (std::size_t i = 0; i < fluids.size(); ++i) {
        const std::string p = "fluids[" + std::to_string(i) + "]";
        Reader f(fluids[i], p, {"rect", "density", "linear_drag"});
        spec.fluids.push_back({read_rect(f.at("rect"), p + ".rect"), f.number("density"), f.number_or("linear_drag", 0.0)});
    }

    if (top.has("render")) {
        Reader r(top.at("render"), "render",
                 {"width", "height", "pixels_per_meter", "camera_origin", "fps", "background"});
        auto integer = [&](std::string_view key, int fallback) {
            if (!r.has(key)) {
                return fallback;
            }
            const auto& v = r.at(key);
            if (!v.is_number_integer()) {
                schema_error(r.sub(key), "expected integer");
            }
            return v.get<int>();
        };
        spec.render.width = integer("width", spec.render.width);
        spec.render.height = integer("height", spec.render.height);
        spec.render.pixels_per_meter = r.number_or("pixels_per_meter", spec.render.pixels_per_meter);
        spec.render.camera_origin = r.vec_or("camera_origin", spec.render.camera_origin);
        spec.render.fps = r.number_or("fps", spec.render.fps);
        spec.render.background = r.color_or("background", spec.render.background);
    }
    return spec;
}

ScenarioSpec parse_spec(std::string_view text)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Syntax, e.what());
    }
    return spec_from_json(doc);
}

Json spec_to_json(const ScenarioSpec& spec)
{
    Json world{{"gravity", vec_json(spec.world.gravity)}};
    if (spec.world.bounds) {
        world["bounds"] = rect_json(*spec.world.bounds);
    }
    Json ground = Json::array();
    for (const auto& g : spec.world.ground) {
        ground.push_back({{"p0", vec_json(g.p0)}, {"p1", vec_json(g.p1)}, {"thickness", g.thickness}});
    }
    world["ground"] = std::move(ground);

    Json bodies = Json::array();
    for (const auto& b : spec.bodies) {
        Json shape = std::visit(
            [](const auto& s) -> Json {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CircleShape>) {
                    return {{"type", "circle"}, {"radius", s.radius}};
                } else if constexpr (std::is_same_v<T, BoxShape>) {
                    return {{"type", "box"}, {"width", s.width}, {"height", s.height}};
                } else {
                    return {{"type", "segment"}, {"p0", vec_json(s.p0)}, {"p1", vec_json(s.p1)}, {"thickness", s.thickness}};
                }
            },
            b.shape);
        Json jb{{"id", b.id},
                {"shape", std::move(shape)},
                {"static", b.is_static},
                {"position", vec_json(b.position)},
                {"velocity", vec_json(b.velocity)},
                {"angle", b.angle},
                {"angular_velocity", b.angular_velocity},
                {"restitution", b.restitution},
                {"friction", b.friction},
                {"color", rgb_json(b.color)}};
        if (b.mass) {
            jb["mass"] = *b.mass;
        }
        if (b.density) {
            jb["density"] = *b.density;
        }
        bodies.push_back(std::move(jb));
    }

    Json constraints = Json::array();
    for (const auto& c : spec.constraints) {
        constraints.push_back(std::visit(
            [](const auto& k) -> Json {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, RodSpec>) {
                    return {{"type", "rod"}, {"body", k.body}, {"anchor", vec_json(k.anchor)}, {"length", k.length}};
                } else if constexpr (std::is_same_v<T, PinSpec>) {
                    return {{"type", "pin"}, {"body_a", k.body_a}, {"body_b", k.body_b},
                            {"anchor_a", vec_json(k.anchor_a)}, {"anchor_b", vec_json(k.anchor_b)}};
                } else if constexpr (std::is_same_v<T, SpringSpec>) {
                    return {{"type", "spring"}, {"body", k.body}, {"anchor", vec_json(k.anchor)},
                            {"stiffness", k.stiffness}, {"damping", k.damping}, {"rest_length", k.rest_length}};
                } else {
                    return {{"type", "pulley"}, {"body_a", k.body_a}, {"body_b", k.body_b},
                            {"anchor_a", vec_json(k.anchor_a)}, {"anchor_b", vec_json(k.anchor_b)},
                            {"rope_length", k.rope_length}};
                }
            },
            c));
    }

    Json fluids = Json::array();
    for (const auto& f : spec.fluids) {
        fluids.push_back({{"rect", rect_json(f.rect)}, {"density", f.density}, {"linear_drag", f.linear_drag}});
    }

    const auto& r = spec.render;
    return Json{{"schema", std::string(kSchemaVersion)},
                {"phenomenon", std::string(to_string(spec.phenomenon))},
                {"world", std::move(world)},
                {"bodies", std::move(bodies)},
                {"constraints", std::move(constraints)},
                {"fluids", std::move(fluids)},
                {"duration_s", spec.duration_s},
                {"dt_s", spec.dt_s},
                {"render",
                 {{"width", r.width},
                  {"height", r.height},
                  {"pixels_per_meter", r.pixels_per_meter},
                  {"camera_origin", vec_json(r.camera_origin)},
                  {"fps", r.fps},
                  {"background", rgb_json(r.background)}}},
                {"label", spec.label}};
}

std::string serialize_spec(const ScenarioSpec& spec)
{
    return canonical_dump(spec_to_json(spec));
}

} // namespace moreforge

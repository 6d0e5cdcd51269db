#include "moreforge/templates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace moreforge {

namespace {

using P = ParamInfo;

constexpr ParamInfo kGravity[] = {
    {"launch_speed", 10.0, 0.0, 30.0, "m/s"},
    {"launch_angle", 45.0, 0.0, 90.0, "deg"},
    {"launch_height", 0.0, 0.0, 50.0, "m"},
    {"direction", 1.0, -1.0, 1.0, "", true},
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"radius", 0.1, 0.05, 1.0, "m"},
    {"restitution", 0.5, 0.0, 1.0, ""},
};
constexpr ParamInfo kAcceleration[] = {
    {"incline_angle", 30.0, 5.0, 60.0, "deg"},
    {"friction", 0.2, 0.0, 1.0, ""},
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"block_size", 0.4, 0.1, 1.0, "m"},
    {"incline_length", 6.0, 2.0, 20.0, "m"},
};
constexpr ParamInfo kCollision[] = {
    {"mass_a", 1.0, 0.01, 1000.0, "kg"},
    {"mass_b", 1.0, 0.01, 1000.0, "kg"},
    {"speed_a", 2.0, 0.0, 20.0, "m/s"},
    {"speed_b", 2.0, 0.0, 20.0, "m/s"},
    {"radius", 0.2, 0.05, 1.0, "m"},
    {"gap", 3.0, 0.5, 20.0, "m"},
    {"restitution", 0.5, 0.0, 1.0, ""},
};
constexpr ParamInfo kOscillation[] = {
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"stiffness", 40.0, 1.0, 10000.0, "N/m"},
    {"damping", 0.0, 0.0, 100.0, "N*s/m"},
    {"amplitude", 0.3, 0.01, 1.0, "m"},
    {"rest_length", 1.0, 0.1, 5.0, "m"},
    {"radius", 0.15, 0.05, 0.5, "m"},
};
constexpr ParamInfo kMomentum[] = {
    {"ball_count", 5.0, 2.0, 10.0, "", true},
    {"radius", 0.1, 0.02, 0.5, "m"},
    {"string_length", 1.0, 0.2, 5.0, "m"},
    {"release_angle", 30.0, 1.0, 90.0, "deg"},
    {"pulled_count", 1.0, 1.0, 9.0, "", true},
    {"pulled_from_right", 0.0, 0.0, 1.0, "", true},
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"restitution", 1.0, 0.0, 1.0, ""},
};
constexpr ParamInfo kBuoyancy[] = {
    {"radius", 0.25, 0.05, 0.4, "m"},
    {"density_ratio", 0.5, 0.1, 0.95, ""},
    {"fluid_density", 1000.0, 100.0, 2000.0, "kg/m^2"},
    {"drag_ratio", 0.5, 0.0, 2.0, ""},
};
constexpr ParamInfo kInertia[] = {
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"speed", 2.0, 0.0, 20.0, "m/s"},
    {"friction", 0.4, 0.0, 1.0, ""},
    {"block_size", 0.3, 0.1, 1.0, "m"},
    {"direction", 1.0, -1.0, 1.0, "", true},
};
constexpr ParamInfo kPendulum[] = {
    {"length", 1.0, 0.1, 10.0, "m"},
    {"release_angle", 30.0, 1.0, 90.0, "deg"},
    {"mass", 1.0, 0.01, 1000.0, "kg"},
    {"radius", 0.1, 0.02, 0.5, "m"},
    {"side", 1.0, -1.0, 1.0, "", true},
};
constexpr ParamInfo kPulley[] = {
    {"mass_a", 2.0, 0.01, 1000.0, "kg"},
    {"mass_b", 1.0, 0.01, 1000.0, "kg"},
    {"box_size", 0.3, 0.1, 1.0, "m"},
    {"separation", 1.0, 0.5, 5.0, "m"},
    {"drop", 2.0, 0.5, 5.0, "m"},
};

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

double q(double v) { return quantize(v); }
Vec2 q(Vec2 v) { return {quantize(v.x), quantize(v.y)}; }

struct Bbox {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    void add(Vec2 p, double pad = 0.0)
    {
        x0 = std::min(x0, p.x - pad);
        y0 = std::min(y0, p.y - pad);
        x1 = std::max(x1, p.x + pad);
        y1 = std::max(y1, p.y + pad);
    }
    Rect rect() const { return {{x0, y0}, {x1, y1}}; }
};

BodySpec circle(std::string id, double radius, double mass, Vec2 pos, std::size_t index)
{
    BodySpec b;
    b.id = std::move(id);
    b.shape = CircleShape{q(radius)};
    b.mass = q(mass);
    b.position = q(pos);
    b.color = default_body_color(index);
    return b;
}

BodySpec box(std::string id, double size, double mass, Vec2 pos, std::size_t index)
{
    BodySpec b;
    b.id = std::move(id);
    b.shape = BoxShape{q(size), q(size)};
    b.mass = q(mass);
    b.position = q(pos);
    b.color = default_body_color(index);
    return b;
}

// Horizontal ground with its top surface at top_y, split into pieces that
// respect the segment length limit.
void add_flat_ground(ScenarioSpec& s, double x0, double x1, double top_y, double thickness = 0.1)
{
    const int pieces = std::max(1, static_cast<int>(std::ceil((x1 - x0) / 50.0)));
    const double y = top_y - thickness / 2;
    for (int i = 0; i < pieces; ++i) {
        const double a = x0 + (x1 - x0) * i / pieces;
        const double b = x0 + (x1 - x0) * (i + 1) / pieces;
        s.world.ground.push_back({q(Vec2{a, y}), q(Vec2{b, y}), q(thickness)});
    }
}

double quarter_ceil(double seconds)
{
    return std::ceil(seconds * 4.0) / 4.0;
}

ScenarioSpec base_spec(Phenomenon p)
{
    ScenarioSpec s;
    s.phenomenon = p;
    s.dt_s = q(defaults::kDt);
    s.duration_s = defaults::kDuration;
    return s;
}

ScenarioSpec build_gravity(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Gravity);
    const double g = 9.81;
    const double speed = tp.get("launch_speed");
    const double angle = deg(tp.get("launch_angle"));
    const double h = tp.get("launch_height");
    const double dir = tp.get("direction") < 0 ? -1.0 : 1.0;
    const double r = tp.get("radius");
    const double vx = dir * speed * std::cos(angle);
    const double vy = speed * std::sin(angle);

    const double flight = (vy + std::sqrt(vy * vy + 2.0 * g * h)) / g;
    s.duration_s = std::clamp(quarter_ceil(1.2 * flight + 0.3), 1.0, 30.0);
    const double reach = std::abs(vx) * (s.duration_s + 0.2);
    const double apex = h + vy * vy / (2.0 * g);

    auto ball = circle("ball", r, tp.get("mass"), {0.0, h + r}, 0);
    ball.velocity = q(Vec2{vx, vy});
    ball.restitution = q(tp.get("restitution"));
    s.bodies.push_back(ball);

    const double far = dir * (reach + 1.0);
    add_flat_ground(s, std::min(-1.0, far), std::max(1.0, far), 0.0);
    Bbox bb;
    bb.add({0.0, 0.0}, 0.5);
    bb.add({dir * reach, apex + 2.0 * r}, 0.5);
    fit_camera(s, bb.rect());
    s.label = "projectile launched at " + format_number(tp.get("launch_angle")) + " deg, " + format_number(speed) +
              " m/s";
    return s;
}

ScenarioSpec build_acceleration(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Acceleration);
    const double g = 9.81;
    const double theta = deg(tp.get("incline_angle"));
    const double mu = tp.get("friction");
    const double size = tp.get("block_size");
    const double len = tp.get("incline_length");
    const double thick = 0.1;

    const Vec2 top{0.0, len * std::sin(theta)};
    const Vec2 down{std::cos(theta), -std::sin(theta)};
    const Vec2 normal{std::sin(theta), std::cos(theta)};
    s.world.ground.push_back({q(top - normal * (thick / 2)), q(top + down * len - normal * (thick / 2)), q(thick)});

    const double start = size / 2 + 0.2;
    auto block = box("block", size, tp.get("mass"), top + down * start + normal * (size / 2), 0);
    block.angle = q(-theta);
    block.friction = q(mu);
    block.restitution = 0.0;
    s.bodies.push_back(block);

    const double accel = g * (std::sin(theta) - mu * std::cos(theta));
    const double travel = 0.75 * (len - start - size / 2);
    s.duration_s = accel > 1e-6 ? std::clamp(quarter_ceil(std::sqrt(2.0 * travel / accel)), 1.0, 5.0) : 2.0;

    Bbox bb;
    bb.add(top, 0.3 + size);
    bb.add(top + down * len, 0.3);
    fit_camera(s, bb.rect());
    s.label = "block sliding down a " + format_number(tp.get("incline_angle")) + " deg incline";
    return s;
}

ScenarioSpec build_collision(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Collision);
    const double r = tp.get("radius");
    const double ma = tp.get("mass_a");
    const double mb = tp.get("mass_b");
    const double va = tp.get("speed_a");
    const double vb = -tp.get("speed_b");
    const double e = tp.get("restitution");
    const double gap = tp.get("gap");

    auto a = circle("ball_a", r, ma, {0.0, r}, 0);
    auto b = circle("ball_b", r, mb, {2 * r + gap, r}, 1);
    a.velocity = q(Vec2{va, 0.0});
    b.velocity = q(Vec2{vb, 0.0});
    for (auto* body : {&a, &b}) {
        body->friction = 0.0;
        body->restitution = q(e);
    }
    s.bodies = {a, b};

    // 1D impact prediction to size the camera.
    const double closing = va - vb;
    const double t_hit = closing > 1e-9 ? gap / closing : s.duration_s;
    const double total = ma + mb;
    const double va2 = (ma * va + mb * vb - mb * e * (va - vb)) / total;
    const double vb2 = (ma * va + mb * vb + ma * e * (va - vb)) / total;
    const double t_after = std::max(0.0, s.duration_s - t_hit);
    Bbox bb;
    bb.add({0.0, 0.0}, r);
    bb.add({2 * r + gap, 2 * r}, r);
    if (t_hit < s.duration_s) {
        const double xa = va * t_hit;
        bb.add({xa + va2 * t_after, r}, r);
        bb.add({xa + 2 * r + vb2 * t_after, r}, r);
    } else {
        bb.add({va * s.duration_s, r}, r);
        bb.add({2 * r + gap + vb * s.duration_s, r}, r);
    }
    add_flat_ground(s, bb.x0 - 2.0, bb.x1 + 2.0, 0.0);
    bb.add({bb.x0, 0.0}, 0.3);
    fit_camera(s, bb.rect());
    s.label = "two balls collide head-on";
    return s;
}

ScenarioSpec build_oscillation(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Oscillation);
    const double g = 9.81;
    const double m = tp.get("mass");
    const double k = tp.get("stiffness");
    const double rest = tp.get("rest_length");
    const double amp = tp.get("amplitude");
    const double r = tp.get("radius");
    const double eq = rest + m * g / k;

    const Vec2 anchor{0.0, 0.0};
    s.bodies.push_back(circle("mass", r, m, {0.0, -(eq + amp)}, 0));
    s.constraints.push_back(SpringSpec{"mass", anchor, q(k), q(tp.get("damping")), q(rest)});

    Bbox bb;
    bb.add(anchor, 0.2);
    bb.add({0.0, -(eq + amp)}, r + 0.1);
    bb.add({0.0, -std::max(0.0, eq - amp)}, r + 0.1);
    bb.add({-0.8, 0.0});
    bb.add({0.8, 0.0});
    fit_camera(s, bb.rect());
    s.label = "mass oscillating on a spring";
    return s;
}

ScenarioSpec build_momentum(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Momentum);
    const int n = static_cast<int>(tp.get("ball_count"));
    const int pulled = std::min(static_cast<int>(tp.get("pulled_count")), n - 1);
    const bool from_right = tp.get("pulled_from_right") > 0.5;
    const double r = tp.get("radius");
    const double len = tp.get("string_length");
    const double alpha = deg(tp.get("release_angle"));

    Bbox bb;
    for (int i = 0; i < n; ++i) {
        const Vec2 anchor = q(Vec2{(i - (n - 1) / 2.0) * 2.0 * r, 0.0});
        const bool displaced = from_right ? i >= n - pulled : i < pulled;
        const double side = from_right ? 1.0 : -1.0;
        const Vec2 offset = displaced ? Vec2{side * len * std::sin(alpha), -len * std::cos(alpha)} : Vec2{0.0, -len};
        auto ball = circle("ball_" + std::to_string(i), r, tp.get("mass"), anchor + offset, static_cast<std::size_t>(i));
        ball.restitution = q(tp.get("restitution"));
        ball.friction = 0.0;
        s.constraints.push_back(RodSpec{ball.id, anchor, q((ball.position - anchor).length())});
        s.bodies.push_back(ball);
        bb.add(anchor, 0.1);
        bb.add(ball.position, r);
        bb.add(anchor + Vec2{len * std::sin(alpha), -len * std::cos(alpha)}, r);
        bb.add(anchor + Vec2{-len * std::sin(alpha), -len * std::cos(alpha)}, r);
    }
    fit_camera(s, bb.rect());
    s.label = "Newton's cradle with " + std::to_string(n) + " balls";
    return s;
}

ScenarioSpec build_buoyancy(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Buoyancy);
    const double g = 9.81;
    const double r = tp.get("radius");
    const double rho_f = tp.get("fluid_density");
    const double rho_b = tp.get("density_ratio") * rho_f;
    const double depth = std::max(1.0, 6.0 * r);
    const double half_width = std::max(1.5, 5.0 * r);

    FluidRegion fluid{{q(Vec2{-half_width, -depth}), {q(half_width), 0.0}}, q(rho_f), 0.0};
    const double mass = rho_b * std::numbers::pi * r * r;
    const double omega = std::sqrt(rho_f * 2.0 * r * g / mass);
    fluid.linear_drag = q(2.0 * tp.get("drag_ratio") * mass * omega);
    s.fluids.push_back(fluid);
    add_flat_ground(s, -half_width, half_width, -depth);

    BodySpec ball;
    ball.id = "floater";
    ball.shape = CircleShape{q(r)};
    ball.density = q(rho_b);
    ball.position = q(Vec2{0.0, 2.0 * r});
    ball.restitution = 0.0;
    ball.color = default_body_color(0);
    s.bodies.push_back(ball);

    Bbox bb;
    bb.add({-half_width, -depth}, 0.2);
    bb.add({half_width, 3.0 * r}, 0.2);
    fit_camera(s, bb.rect());
    s.label = "ball floats in a fluid";
    return s;
}

ScenarioSpec build_inertia(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Inertia);
    const double g = 9.81;
    const double v = tp.get("speed");
    const double mu = tp.get("friction");
    const double size = tp.get("block_size");
    const double dir = tp.get("direction") < 0 ? -1.0 : 1.0;

    auto block = box("block", size, tp.get("mass"), {0.0, size / 2}, 0);
    block.velocity = q(Vec2{dir * v, 0.0});
    block.friction = q(mu);
    block.restitution = 0.0;
    s.bodies.push_back(block);

    double travel = 0.0;
    if (mu > 1e-9) {
        s.duration_s = std::clamp(quarter_ceil(v / (mu * g) + 1.0), 1.0, 10.0);
        travel = v * v / (2.0 * mu * g);
    } else {
        travel = v * s.duration_s;
    }
    Bbox bb;
    bb.add({0.0, 0.0}, size + 0.3);
    bb.add({dir * travel, size}, size + 0.3);
    add_flat_ground(s, bb.x0 - 2.0, bb.x1 + 2.0, 0.0);
    fit_camera(s, bb.rect());
    s.label = "block slides to rest on a rough surface";
    return s;
}

ScenarioSpec build_pendulum(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Pendulum);
    const double len = tp.get("length");
    const double alpha = deg(tp.get("release_angle"));
    const double side = tp.get("side") < 0 ? -1.0 : 1.0;
    const double r = tp.get("radius");
    const Vec2 anchor{0.0, 0.0};

    auto bob = circle("bob", r, tp.get("mass"), {side * len * std::sin(alpha), -len * std::cos(alpha)}, 0);
    s.constraints.push_back(RodSpec{"bob", anchor, q((bob.position - anchor).length())});
    s.bodies.push_back(bob);

    Bbox bb;
    bb.add(anchor, 0.1);
    bb.add({len * std::sin(alpha), -len * std::cos(alpha)}, r);
    bb.add({-len * std::sin(alpha), -len * std::cos(alpha)}, r);
    bb.add({0.0, -len}, r);
    fit_camera(s, bb.rect());
    s.label = "simple pendulum";
    return s;
}

ScenarioSpec build_pulley(const TemplateParams& tp)
{
    auto s = base_spec(Phenomenon::Pulley);
    const double size = tp.get("box_size");
    const double sep = tp.get("separation");
    const double drop = tp.get("drop");
    const Vec2 anchor_a = q(Vec2{-sep / 2, 0.0});
    const Vec2 anchor_b = q(Vec2{sep / 2, 0.0});

    auto a = box("mass_a", size, tp.get("mass_a"), anchor_a + Vec2{0.0, -drop}, 0);
    auto b = box("mass_b", size, tp.get("mass_b"), anchor_b + Vec2{0.0, -drop}, 1);
    a.restitution = b.restitution = 0.0;
    s.constraints.push_back(PulleySpec{"mass_a", "mass_b", anchor_a, anchor_b,
                                       q((a.position - anchor_a).length() + (b.position - anchor_b).length())});
    s.bodies = {a, b};

    // The descending box lands after 40% of the drop, which keeps the rising
    // one below the pulley even after the rope goes slack.
    const double floor_y = -drop - 0.4 * drop - size / 2;
    add_flat_ground(s, -sep / 2 - 1.0, sep / 2 + 1.0, floor_y);
    Bbox bb;
    bb.add(anchor_a, 0.3);
    bb.add(anchor_b, 0.3);
    bb.add({0.0, floor_y}, 0.3);
    fit_camera(s, bb.rect());
    s.label = "Atwood machine";
    return s;
}

} // namespace

std::span<const ParamInfo> template_param_schema(Phenomenon p)
{
    switch (p) {
    case Phenomenon::Gravity: return kGravity;
    case Phenomenon::Acceleration: return kAcceleration;
    case Phenomenon::Collision: return kCollision;
    case Phenomenon::Oscillation: return kOscillation;
    case Phenomenon::Momentum: return kMomentum;
    case Phenomenon::Buoyancy: return kBuoyancy;
    case Phenomenon::Inertia: return kInertia;
    case Phenomenon::Pendulum: return kPendulum;
    case Phenomenon::Pulley: return kPulley;
    }
    throw Error(ErrorKind::UnknownClass, "unknown phenomenon class");
}

double TemplateParams::get(std::string_view name) const
{
    auto it = values.find(std::string(name));
    if (it == values.end()) {
        throw Error(ErrorKind::Schema, "missing template parameter", std::string(name));
    }
    return it->second;
}

TemplateParams default_params(Phenomenon p)
{
    TemplateParams tp{p, {}};
    for (const auto& info : template_param_schema(p)) {
        tp.values.emplace(std::string(info.name), info.default_value);
    }
    return tp;
}

void check_params(const TemplateParams& params)
{
    const auto schema = template_param_schema(params.phenomenon);
    for (const auto& [name, value] : params.values) {
        const auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamInfo& i) { return i.name == name; });
        if (it == schema.end()) {
            throw Error(ErrorKind::Schema, "unknown template parameter", name);
        }
        if (!std::isfinite(value) || value < it->min || value > it->max ||
            (it->integer && value != std::round(value))) {
            throw Error(ErrorKind::Schema,
                        "value " + format_number(value) + " outside [" + format_number(it->min) + "," +
                            format_number(it->max) + "]",
                        name);
        }
    }
    for (const auto& info : schema) {
        if (!params.values.contains(std::string(info.name))) {
            throw Error(ErrorKind::Schema, "missing template parameter", std::string(info.name));
        }
    }
    if (params.phenomenon == Phenomenon::Momentum && params.get("pulled_count") >= params.get("ball_count")) {
        throw Error(ErrorKind::Schema, "pulled_count must be below ball_count", "pulled_count");
    }
}

ScenarioSpec build_template(const TemplateParams& params)
{
    check_params(params);
    switch (params.phenomenon) {
    case Phenomenon::Gravity: return build_gravity(params);
    case Phenomenon::Acceleration: return build_acceleration(params);
    case Phenomenon::Collision: return build_collision(params);
    case Phenomenon::Oscillation: return build_oscillation(params);
    case Phenomenon::Momentum: return build_momentum(params);
    case Phenomenon::Buoyancy: return build_buoyancy(params);
    case Phenomenon::Inertia: return build_inertia(params);
    case Phenomenon::Pendulum: return build_pendulum(params);
    case Phenomenon::Pulley: return build_pulley(params);
    }
    throw Error(ErrorKind::UnknownClass, "unknown phenomenon class");
}

ScenarioSpec build_template(Phenomenon p)
{
    return build_template(default_params(p));
}

ScenarioSpec build_template(int raw_class, const std::map<std::string, double>& values)
{
    if (raw_class < 0 || raw_class >= static_cast<int>(kAllPhenomena.size())) {
        throw Error(ErrorKind::UnknownClass, "class id " + std::to_string(raw_class) + " is not a phenomenon");
    }
    auto params = default_params(static_cast<Phenomenon>(raw_class));
    for (const auto& [k, v] : values) {
        params.values[k] = v;
    }
    return build_template(params);
}

void fit_camera(ScenarioSpec& spec, Rect content)
{
    auto& r = spec.render;
    const double w = std::max(content.max.x - content.min.x, 0.1) * 1.2;
    const double h = std::max(content.max.y - content.min.y, 0.1) * 1.2;
    r.pixels_per_meter = q(std::min(r.width / w, r.height / h));
    const Vec2 view{r.width / r.pixels_per_meter, r.height / r.pixels_per_meter};
    const Vec2 center = (content.min + content.max) * 0.5;
    r.camera_origin = q(center - view * 0.5);
    spec.world.bounds = Rect{r.camera_origin, q(r.camera_origin + view)};
}

} // namespace moreforge

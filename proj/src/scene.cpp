#include "moreforge/scene.hpp"

#include <algorithm>
#include <cmath>

namespace moreforge {

double Collider::bounding_radius() const
{
    return kind == Kind::Circle ? radius : half.length();
}

Collider collider_of(const RigidBody& body)
{
    Collider c;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleShape>) {
                c.kind = Collider::Kind::Circle;
                c.center = body.position;
                c.radius = s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                c.kind = Collider::Kind::Box;
                c.center = body.position;
                c.half = {s.width / 2, s.height / 2};
                c.angle = body.angle;
            } else {
                const Vec2 d = s.p1 - s.p0;
                c.kind = Collider::Kind::Box;
                c.center = body.position + rotate((s.p0 + s.p1) * 0.5, body.angle);
                c.half = {d.length() / 2, s.thickness / 2};
                c.angle = body.angle + std::atan2(d.y, d.x);
            }
        },
        body.shape);
    return c;
}

double moment_of_inertia(const Shape& shape, double mass)
{
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleShape>) {
                return 0.5 * mass * s.radius * s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                return mass * (s.width * s.width + s.height * s.height) / 12.0;
            } else {
                const double len = (s.p1 - s.p0).length();
                return mass * (len * len + s.thickness * s.thickness) / 12.0;
            }
        },
        shape);
}

namespace {

std::size_t index_of(const ScenarioSpec& spec, const std::string& id, const std::string& path)
{
    auto idx = spec.body_index(id);
    if (!idx) {
        throw Error(ErrorKind::Compile, "unknown body '" + id + "'", path);
    }
    return *idx;
}

void require_dynamic(const Scene& scene, std::initializer_list<std::size_t> ids, const std::string& path)
{
    const bool any_dynamic = std::any_of(ids.begin(), ids.end(), [&](std::size_t i) { return !scene.bodies[i].is_static; });
    if (!any_dynamic) {
        throw Error(ErrorKind::Compile, "constraint joins only static bodies", path);
    }
}

} // namespace

Scene compile(const ScenarioSpec& spec)
{
    if (spec.bodies.empty()) {
        throw Error(ErrorKind::Compile, "empty scene", "bodies");
    }
    Scene scene;
    scene.dt = spec.dt_s;
    scene.gravity = spec.world.gravity;
    scene.bounds = spec.world.bounds;
    scene.fluids = spec.fluids;

    for (const auto& b : spec.bodies) {
        RigidBody rb;
        rb.id = b.id;
        rb.shape = b.shape;
        rb.is_static = b.is_static;
        rb.position = b.position;
        rb.angle = b.angle;
        rb.restitution = b.restitution;
        rb.friction = b.friction;
        if (!b.is_static) {
            rb.velocity = b.velocity;
            rb.angular_velocity = b.angular_velocity;
            rb.mass = b.effective_mass();
            if (!(rb.mass > 0.0)) {
                throw Error(ErrorKind::Compile, "dynamic body without positive mass", b.id);
            }
            rb.inv_mass = 1.0 / rb.mass;
            rb.inertia = moment_of_inertia(b.shape, rb.mass);
            rb.inv_inertia = 1.0 / rb.inertia;
        }
        scene.bodies.push_back(std::move(rb));
    }

    for (std::size_t i = 0; i < spec.world.ground.size(); ++i) {
        const auto& g = spec.world.ground[i];
        RigidBody rb;
        rb.id = "ground[" + std::to_string(i) + "]";
        rb.is_static = true;
        rb.adopts_material = true;
        rb.shape = SegmentShape{g.p0, g.p1, g.thickness};
        scene.statics.push_back(std::move(rb));
    }

    for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
        const std::string path = "constraints[" + std::to_string(i) + "]";
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, RodSpec>) {
                    const auto b = index_of(spec, c.body, path);
                    require_dynamic(scene, {b}, path);
                    scene.joints.push_back(RodJoint{b, c.anchor, c.length});
                } else if constexpr (std::is_same_v<T, PinSpec>) {
                    const auto a = index_of(spec, c.body_a, path);
                    const auto b = index_of(spec, c.body_b, path);
                    require_dynamic(scene, {a, b}, path);
                    scene.joints.push_back(PinJoint{a, b, c.anchor_a, c.anchor_b});
                } else if constexpr (std::is_same_v<T, SpringSpec>) {
                    const auto b = index_of(spec, c.body, path);
                    require_dynamic(scene, {b}, path);
                    scene.joints.push_back(SpringForce{b, c.anchor, c.stiffness, c.damping, c.rest_length});
                } else {
                    const auto a = index_of(spec, c.body_a, path);
                    const auto b = index_of(spec, c.body_b, path);
                    require_dynamic(scene, {a, b}, path);
                    scene.joints.push_back(PulleyJoint{a, b, c.anchor_a, c.anchor_b, c.rope_length});
                }
            },
            spec.constraints[i]);
    }
    return scene;
}

} // namespace moreforge

#pragma once

// Runtime state compiled from a validated ScenarioSpec.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "moreforge/spec.hpp"

namespace moreforge {

struct RigidBody {
    std::string id;
    Shape shape;
    bool is_static = false;
    double mass = 0.0;
    double inv_mass = 0.0;
    double inertia = 0.0;
    double inv_inertia = 0.0;
    Vec2 position;
    Vec2 velocity;
    double angle = 0.0;
    double angular_velocity = 0.0;
    double restitution = defaults::kRestitution;
    double friction = defaults::kFriction;
    // World ground takes the material of whatever touches it.
    bool adopts_material = false;

    Vec2 force;
    double torque = 0.0;
};

/// Collision geometry in world space. Segments become thin oriented boxes.
struct Collider {
    enum class Kind { Circle, Box } kind = Kind::Circle;
    Vec2 center;
    double radius = 0.0;  // circle
    Vec2 half;            // box half extents
    double angle = 0.0;   // box orientation

    /// Radius of a disc centred on `center` enclosing the shape.
    double bounding_radius() const;
};

Collider collider_of(const RigidBody& body);

struct RodJoint {
    std::size_t body;
    Vec2 anchor;
    double length;
};

struct PinJoint {
    std::size_t body_a;
    std::size_t body_b;
    Vec2 local_a;
    Vec2 local_b;
};

struct SpringForce {
    std::size_t body;
    Vec2 anchor;
    double stiffness;
    double damping;
    double rest_length;
};

struct PulleyJoint {
    std::size_t body_a;
    std::size_t body_b;
    Vec2 anchor_a;
    Vec2 anchor_b;
    double rope_length;
};

using Joint = std::variant<RodJoint, PinJoint, SpringForce, PulleyJoint>;

struct Scene {
    double dt = defaults::kDt;
    long step = 0;
    Vec2 gravity = defaults::kGravity;
    std::optional<Rect> bounds;
    std::vector<RigidBody> bodies;  // same order as the spec
    std::vector<RigidBody> statics; // world ground pieces
    std::vector<Joint> joints;
    std::vector<FluidRegion> fluids;

    /// Bodies and statics share one index space: [0, bodies) then statics.
    std::size_t collider_count() const { return bodies.size() + statics.size(); }
    RigidBody& at(std::size_t i) { return i < bodies.size() ? bodies[i] : statics[i - bodies.size()]; }
    const RigidBody& at(std::size_t i) const { return i < bodies.size() ? bodies[i] : statics[i - bodies.size()]; }
};

/// Moment of inertia about the centroid for a dynamic shape of mass m.
double moment_of_inertia(const Shape& shape, double mass);

/// Throws CompileError for contradictions validation cannot see, e.g. an
/// empty scene or a joint between two static bodies.
Scene compile(const ScenarioSpec& spec);

} // namespace moreforge

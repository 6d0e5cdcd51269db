#pragma once

#include <array>
#include <optional>

#include "moreforge/scene.hpp"

namespace moreforge {

struct ContactPoint {
    Vec2 point;
    double separation = 0.0; // negative when overlapping
};

/// Contact between colliders a < b; the normal points from a to b.
struct ContactManifold {
    std::size_t a = 0;
    std::size_t b = 0;
    Vec2 normal{0.0, 1.0};
    std::array<ContactPoint, 2> points{};
    int count = 0;
    double restitution = 0.0;
    double friction = 0.0;

    double depth() const;
    double min_separation() const;
};

/// Narrow phase. Returns a manifold when the shapes are closer than `margin`
/// (speculative contacts have positive separation).
std::optional<ContactManifold> collide(const Collider& a, const Collider& b, double margin);

/// Material of a pair: restitution min(e1, e2), friction sqrt(mu1 mu2);
/// ground pieces adopt the other body's material.
void combine_material(ContactManifold& m, const RigidBody& a, const RigidBody& b);

struct ContactImpulse {
    double normal = 0.0;
    double tangent = 0.0;
};

/// Equal and opposite impulse j = -(1+e) vn / k per contact point, clamped
/// at zero, followed by Coulomb friction clamped to mu*j.
ContactImpulse resolve_contact(const ContactManifold& m, RigidBody& a, RigidBody& b, bool with_friction = true);

/// Applies impulse p at world point `at` to b and -p to a.
void apply_impulse_pair(RigidBody& a, RigidBody& b, Vec2 at, Vec2 p);

} // namespace moreforge

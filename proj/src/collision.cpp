#include "moreforge/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace moreforge {

double ContactManifold::min_separation() const
{
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
        s = std::min(s, points[static_cast<std::size_t>(i)].separation);
    }
    return s;
}

double ContactManifold::depth() const
{
    return count ? std::max(0.0, -min_separation()) : 0.0;
}

namespace {

ContactManifold flipped(ContactManifold m)
{
    m.normal = -m.normal;
    return m;
}

std::optional<ContactManifold> circle_circle(const Collider& a, const Collider& b, double margin)
{
    const Vec2 d = b.center - a.center;
    const double dist = d.length();
    const double sep = dist - a.radius - b.radius;
    if (sep > margin) {
        return std::nullopt;
    }
    ContactManifold m;
    m.normal = dist > 1e-12 ? d / dist : Vec2{0.0, 1.0};
    m.points[0] = {a.center + m.normal * (a.radius + sep / 2), sep};
    m.count = 1;
    return m;
}

// Normal points from the box to the circle.
std::optional<ContactManifold> box_circle(const Collider& box, const Collider& circle, double margin)
{
    const Vec2 local = rotate(circle.center - box.center, -box.angle);
    const Vec2 clamped{std::clamp(local.x, -box.half.x, box.half.x), std::clamp(local.y, -box.half.y, box.half.y)};
    Vec2 n_local;
    double sep = 0.0;
    Vec2 surface_local;
    if (clamped == local) {
        // Centre inside the box: leave through the nearest face.
        const double px = box.half.x - std::abs(local.x);
        const double py = box.half.y - std::abs(local.y);
        if (px < py) {
            n_local = {local.x < 0 ? -1.0 : 1.0, 0.0};
            surface_local = {n_local.x * box.half.x, local.y};
            sep = -px - circle.radius;
        } else {
            n_local = {0.0, local.y < 0 ? -1.0 : 1.0};
            surface_local = {local.x, n_local.y * box.half.y};
            sep = -py - circle.radius;
        }
    } else {
        const Vec2 d = local - clamped;
        const double dist = d.length();
        n_local = d / dist;
        surface_local = clamped;
        sep = dist - circle.radius;
    }
    if (sep > margin) {
        return std::nullopt;
    }
    ContactManifold m;
    m.normal = rotate(n_local, box.angle);
    m.points[0] = {box.center + rotate(surface_local, box.angle) + m.normal * (sep / 2), sep};
    m.count = 1;
    return m;
}

struct Box {
    std::array<Vec2, 4> v;
    std::array<Vec2, 4> n; // outward normal of edge v[i] -> v[i+1]
};

Box box_of(const Collider& c)
{
    Box b;
    const Vec2 h = c.half;
    const std::array<Vec2, 4> local = {{{-h.x, -h.y}, {h.x, -h.y}, {h.x, h.y}, {-h.x, h.y}}};
    const std::array<Vec2, 4> normals = {{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
    for (std::size_t i = 0; i < 4; ++i) {
        b.v[i] = c.center + rotate(local[i], c.angle);
        b.n[i] = rotate(normals[i], c.angle);
    }
    return b;
}

// Largest separation of `other` from any face of `ref`.
std::pair<double, std::size_t> max_separation(const Box& ref, const Box& other)
{
    double best = -std::numeric_limits<double>::infinity();
    std::size_t face = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        double s = std::numeric_limits<double>::infinity();
        for (const auto& v : other.v) {
            s = std::min(s, dot(ref.n[i], v - ref.v[i]));
        }
        if (s > best) {
            best = s;
            face = i;
        }
    }
    return {best, face};
}

// Keeps the part of segment [p0, p1] with dot(n, p) <= offset.
int clip(std::array<Vec2, 2>& seg, Vec2 n, double offset)
{
    const double d0 = dot(n, seg[0]) - offset;
    const double d1 = dot(n, seg[1]) - offset;
    if (d0 > 0 && d1 > 0) {
        return 0;
    }
    if (d0 > 0) {
        seg[0] = seg[0] + (seg[1] - seg[0]) * (d0 / (d0 - d1));
    } else if (d1 > 0) {
        seg[1] = seg[0] + (seg[1] - seg[0]) * (d0 / (d0 - d1));
    }
    return 2;
}

std::optional<ContactManifold> box_box(const Collider& ca, const Collider& cb, double margin)
{
    const Box a = box_of(ca);
    const Box b = box_of(cb);
    const auto [sep_a, face_a] = max_separation(a, b);
    if (sep_a > margin) {
        return std::nullopt;
    }
    const auto [sep_b, face_b] = max_separation(b, a);
    if (sep_b > margin) {
        return std::nullopt;
    }

    // Prefer a's face unless b's is clearly better, to keep the choice stable.
    const bool ref_is_a = sep_b <= sep_a + 1e-9;
    const Box& ref = ref_is_a ? a : b;
    const Box& inc = ref_is_a ? b : a;
    const std::size_t rf = ref_is_a ? face_a : face_b;
    const Vec2 n = ref.n[rf];

    std::size_t incident = 0;
    double most = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = dot(inc.n[i], n);
        if (d < most) {
            most = d;
            incident = i;
        }
    }
    std::array<Vec2, 2> seg = {inc.v[incident], inc.v[(incident + 1) % 4]};
    const Vec2 r0 = ref.v[rf];
    const Vec2 r1 = ref.v[(rf + 1) % 4];
    const Vec2 tangent = normalized(r1 - r0);
    if (!clip(seg, -tangent, -dot(tangent, r0)) || !clip(seg, tangent, dot(tangent, r1))) {
        return std::nullopt;
    }

    ContactManifold m;
    for (const auto& p : seg) {
        const double s = dot(n, p - r0);
        if (s <= margin) {
            m.points[static_cast<std::size_t>(m.count++)] = {p - n * (s / 2), s};
        }
    }
    if (m.count == 0) {
        return std::nullopt;
    }
    m.normal = ref_is_a ? n : -n;
    return m;
}

} // namespace

std::optional<ContactManifold> collide(const Collider& a, const Collider& b, double margin)
{
    using K = Collider::Kind;
    if (a.kind == K::Circle && b.kind == K::Circle) {
        return circle_circle(a, b, margin);
    }
    if (a.kind == K::Box && b.kind == K::Circle) {
        return box_circle(a, b, margin);
    }
    if (a.kind == K::Circle && b.kind == K::Box) {
        auto m = box_circle(b, a, margin);
        return m ? std::optional(flipped(*m)) : std::nullopt;
    }
    return box_box(a, b, margin);
}

void combine_material(ContactManifold& m, const RigidBody& a, const RigidBody& b)
{
    if (a.adopts_material && !b.adopts_material) {
        m.restitution = b.restitution;
        m.friction = b.friction;
    } else if (b.adopts_material && !a.adopts_material) {
        m.restitution = a.restitution;
        m.friction = a.friction;
    } else {
        m.restitution = std::min(a.restitution, b.restitution);
        m.friction = std::sqrt(a.friction * b.friction);
    }
}

void apply_impulse_pair(RigidBody& a, RigidBody& b, Vec2 at, Vec2 p)
{
    a.velocity -= p * a.inv_mass;
    a.angular_velocity -= a.inv_inertia * cross(at - a.position, p);
    b.velocity += p * b.inv_mass;
    b.angular_velocity += b.inv_inertia * cross(at - b.position, p);
}

namespace {

Vec2 relative_velocity(const RigidBody& a, const RigidBody& b, Vec2 at)
{
    return b.velocity + cross(b.angular_velocity, at - b.position) - a.velocity -
           cross(a.angular_velocity, at - a.position);
}

double effective_mass_inverse(const RigidBody& a, const RigidBody& b, Vec2 at, Vec2 dir)
{
    const double ra = cross(at - a.position, dir);
    const double rb = cross(at - b.position, dir);
    return a.inv_mass + b.inv_mass + a.inv_inertia * ra * ra + b.inv_inertia * rb * rb;
}

} // namespace

ContactImpulse resolve_contact(const ContactManifold& m, RigidBody& a, RigidBody& b, bool with_friction)
{
    ContactImpulse total;
    for (int i = 0; i < m.count; ++i) {
        const Vec2 at = m.points[static_cast<std::size_t>(i)].point;
        const double vn = dot(relative_velocity(a, b, at), m.normal);
        if (vn >= 0.0) {
            continue;
        }
        const double k = effective_mass_inverse(a, b, at, m.normal);
        if (k <= 0.0) {
            continue;
        }
        const double j = -(1.0 + m.restitution) * vn / k;
        apply_impulse_pair(a, b, at, m.normal * j);
        total.normal += j;

        if (with_friction && m.friction > 0.0) {
            const Vec2 v = relative_velocity(a, b, at);
            const Vec2 t = normalized(v - m.normal * dot(v, m.normal));
            const double kt = effective_mass_inverse(a, b, at, t);
            if (t == Vec2{} || kt <= 0.0) {
                continue;
            }
            const double jt = std::clamp(-dot(v, t) / kt, -m.friction * j, m.friction * j);
            apply_impulse_pair(a, b, at, t * jt);
            total.tangent += jt;
        }
    }
    return total;
}

} // namespace moreforge

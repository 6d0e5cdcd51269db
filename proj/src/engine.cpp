#include "moreforge/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace moreforge {

namespace {

struct Polygon {
    std::vector<Vec2> v;
};

// Sutherland-Hodgman against the half-plane dot(n, p) <= offset.
Polygon clip_half_plane(const Polygon& in, Vec2 n, double offset)
{
    Polygon out;
    const std::size_t count = in.v.size();
    for (std::size_t i = 0; i < count; ++i) {
        const Vec2 p = in.v[i];
        const Vec2 q = in.v[(i + 1) % count];
        const double dp = dot(n, p) - offset;
        const double dq = dot(n, q) - offset;
        if (dp <= 0) {
            out.v.push_back(p);
        }
        if ((dp < 0 && dq > 0) || (dp > 0 && dq < 0)) {
            out.v.push_back(p + (q - p) * (dp / (dp - dq)));
        }
    }
    return out;
}

std::pair<double, Vec2> area_centroid(const Polygon& poly)
{
    double area2 = 0.0;
    Vec2 c;
    const std::size_t n = poly.v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly.v[i];
        const Vec2 q = poly.v[(i + 1) % n];
        const double w = cross(p, q);
        area2 += w;
        c += (p + q) * w;
    }
    if (std::abs(area2) < 1e-300) {
        return {0.0, {}};
    }
    return {std::abs(area2) / 2, c / (3.0 * area2)};
}

std::pair<double, Vec2> clipped_polygon(Polygon poly, const Rect& r)
{
    poly = clip_half_plane(poly, {1, 0}, r.max.x);
    poly = clip_half_plane(poly, {-1, 0}, -r.min.x);
    poly = clip_half_plane(poly, {0, 1}, r.max.y);
    poly = clip_half_plane(poly, {0, -1}, -r.min.y);
    if (poly.v.size() < 3) {
        return {0.0, {}};
    }
    return area_centroid(poly);
}

// Circle cut by a horizontal slab, relative offsets a <= b from the centre.
std::pair<double, double> circle_slab(double r, double a, double b)
{
    a = std::clamp(a, -r, r);
    b = std::clamp(b, -r, r);
    auto F = [r](double y) { return y * std::sqrt(std::max(0.0, r * r - y * y)) + r * r * std::asin(y / r); };
    auto G = [r](double y) { return -2.0 / 3.0 * std::pow(std::max(0.0, r * r - y * y), 1.5); };
    return {F(b) - F(a), G(b) - G(a)};
}

std::pair<double, Vec2> submerged(const RigidBody& body, const FluidRegion& region)
{
    const Collider c = collider_of(body);
    const Rect& r = region.rect;
    if (c.kind == Collider::Kind::Circle) {
        const double rad = c.radius;
        if (c.center.x - rad >= r.min.x && c.center.x + rad <= r.max.x) {
            const auto [area, moment] = circle_slab(rad, r.min.y - c.center.y, r.max.y - c.center.y);
            if (area <= 0.0) {
                return {0.0, {}};
            }
            return {area, {c.center.x, c.center.y + moment / area}};
        }
        // Circle straddles a side wall of the region: use a fine polygon with the same area.
        constexpr int kSides = 256;
        const double scale = std::sqrt(2.0 * std::numbers::pi / (kSides * std::sin(2.0 * std::numbers::pi / kSides)));
        Polygon poly;
        for (int i = 0; i < kSides; ++i) {
            const double a = 2.0 * std::numbers::pi * i / kSides;
            poly.v.push_back(c.center + Vec2{std::cos(a), std::sin(a)} * (rad * scale));
        }
        return clipped_polygon(poly, r);
    }
    Polygon poly;
    const Vec2 h = c.half;
    for (Vec2 corner : {Vec2{-h.x, -h.y}, Vec2{h.x, -h.y}, Vec2{h.x, h.y}, Vec2{-h.x, h.y}}) {
        poly.v.push_back(c.center + rotate(corner, c.angle));
    }
    return clipped_polygon(poly, r);
}

} // namespace

BuoyancyForce buoyancy_force(const RigidBody& body, const FluidRegion& region, Vec2 gravity)
{
    BuoyancyForce f;
    if (body.is_static) {
        return f;
    }
    const auto [area, centroid] = submerged(body, region);
    if (area <= 0.0) {
        return f;
    }
    f.submerged_area = area;
    f.centroid = centroid;
    f.buoyancy = gravity * (-region.density * area);
    f.drag = body.velocity * (-region.linear_drag);
    return f;
}

namespace {

struct SolverPoint {
    Vec2 at;
    double target_vn = 0.0;
    double k_normal = 0.0;
    double k_tangent = 0.0;
    Vec2 tangent;
    double normal_impulse = 0.0;
    double tangent_impulse = 0.0;
    double bounce_impulse = 0.0;
};

struct SolverContact {
    ContactManifold m;
    std::array<SolverPoint, 2> points{};
};

Vec2 relative_velocity(const RigidBody& a, const RigidBody& b, Vec2 at)
{
    return b.velocity + cross(b.angular_velocity, at - b.position) - a.velocity -
           cross(a.angular_velocity, at - a.position);
}

double k_along(const RigidBody& a, const RigidBody& b, Vec2 at, Vec2 dir)
{
    const double ra = cross(at - a.position, dir);
    const double rb = cross(at - b.position, dir);
    return a.inv_mass + b.inv_mass + a.inv_inertia * ra * ra + b.inv_inertia * rb * rb;
}

bool pinned_together(const Scene& scene, std::size_t i, std::size_t j)
{
    for (const auto& joint : scene.joints) {
        if (const auto* pin = std::get_if<PinJoint>(&joint)) {
            if ((pin->body_a == i && pin->body_b == j) || (pin->body_a == j && pin->body_b == i)) {
                return true;
            }
        }
    }
    return false;
}

struct SegmentEnds {
    Vec2 p0;
    Vec2 p1;
};

std::optional<SegmentEnds> static_segment(const RigidBody& b)
{
    const auto* seg = std::get_if<SegmentShape>(&b.shape);
    if (!b.is_static || !seg) {
        return std::nullopt;
    }
    return SegmentEnds{b.position + rotate(seg->p0, b.angle), b.position + rotate(seg->p1, b.angle)};
}

// True when another static segment continues `end` in the same direction, so
// a corner contact there is an artefact of splitting one surface in pieces.
bool continued(const Scene& scene, std::size_t self, Vec2 end, Vec2 dir)
{
    constexpr double kJoinTol = 1e-6;
    for (std::size_t i = 0; i < scene.collider_count(); ++i) {
        if (i == self) {
            continue;
        }
        const auto other = static_segment(scene.at(i));
        if (!other) {
            continue;
        }
        const Vec2 d = normalized(other->p1 - other->p0);
        if (std::abs(cross(d, dir)) > 1e-9) {
            continue;
        }
        if ((other->p0 - end).length() <= kJoinTol || (other->p1 - end).length() <= kJoinTol) {
            return true;
        }
    }
    return false;
}

// Corner contacts against the inner end of a split surface.
bool ghost_contact(const Scene& scene, std::size_t s, const ContactManifold& m)
{
    const auto seg = static_segment(scene.at(s));
    if (!seg) {
        return false;
    }
    const Vec2 axis = seg->p1 - seg->p0;
    const double len = axis.length();
    const Vec2 dir = axis / len;
    if (std::abs(dot(m.normal, dir)) <= 1e-9) {
        return false; // face contact
    }
    for (int k = 0; k < m.count; ++k) {
        const double t = dot(m.points[k].point - seg->p0, dir);
        const bool at_start = t <= 0.0 && continued(scene, s, seg->p0, dir);
        const bool at_end = t >= len && continued(scene, s, seg->p1, dir);
        if (!at_start && !at_end) {
            return false;
        }
    }
    return true;
}

std::vector<ContactManifold> find_contacts(const Scene& scene, bool speculative)
{
    std::vector<ContactManifold> out;
    const std::size_t n = scene.collider_count();
    std::vector<Collider> colliders;
    colliders.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        colliders.push_back(collider_of(scene.at(i)));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const RigidBody& a = scene.at(i);
            const RigidBody& b = scene.at(j);
            if (a.inv_mass == 0.0 && b.inv_mass == 0.0) {
                continue;
            }
            if (pinned_together(scene, i, j)) {
                continue;
            }
            double margin = 0.0;
            if (speculative) {
                const double reach = (a.velocity - b.velocity).length() +
                                     std::abs(a.angular_velocity) * colliders[i].bounding_radius() +
                                     std::abs(b.angular_velocity) * colliders[j].bounding_radius();
                margin = reach * scene.dt + solver::kSlop;
            }
            const double gap = (colliders[j].center - colliders[i].center).length() -
                               colliders[i].bounding_radius() - colliders[j].bounding_radius();
            if (gap > margin) {
                continue;
            }
            if (auto m = collide(colliders[i], colliders[j], margin)) {
                if (ghost_contact(scene, i, *m) || ghost_contact(scene, j, *m)) {
                    continue;
                }
                m->a = i;
                m->b = j;
                combine_material(*m, a, b);
                out.push_back(*m);
            }
        }
    }
    return out;
}

void accumulate_forces(Scene& scene)
{
    for (auto& b : scene.bodies) {
        b.force = {};
        b.torque = 0.0;
        if (!b.is_static) {
            b.force = scene.gravity * b.mass;
        }
    }
    for (const auto& joint : scene.joints) {
        if (const auto* s = std::get_if<SpringForce>(&joint)) {
            RigidBody& b = scene.bodies[s->body];
            const Vec2 d = b.position - s->anchor;
            const double len = d.length();
            if (len < 1e-12) {
                continue;
            }
            const Vec2 dir = d / len;
            b.force += dir * (-s->stiffness * (len - s->rest_length) - s->damping * dot(b.velocity, dir));
        }
    }
    for (const auto& fluid : scene.fluids) {
        for (auto& b : scene.bodies) {
            const auto f = buoyancy_force(b, fluid, scene.gravity);
            if (f.submerged_area > 0.0) {
                b.force += f.buoyancy + f.drag;
                b.torque += cross(f.centroid - b.position, f.buoyancy);
            }
        }
    }
}

// Newton impulses for every contact that closes this step, repeated until the
// impacts stop propagating (a cradle passes its impulse down the row here).
void restitution_sweep(Scene& scene, std::vector<SolverContact>& contacts)
{
    const int max_passes = 2 * static_cast<int>(scene.bodies.size()) + 4;
    for (int pass = 0; pass < max_passes; ++pass) {
        bool applied = false;
        for (auto& c : contacts) {
            if (c.m.restitution <= 0.0) {
                continue;
            }
            RigidBody& a = scene.at(c.m.a);
            RigidBody& b = scene.at(c.m.b);
            for (int i = 0; i < c.m.count; ++i) {
                auto& sp = c.points[static_cast<std::size_t>(i)];
                const double sep = c.m.points[static_cast<std::size_t>(i)].separation;
                const double vn = dot(relative_velocity(a, b, sp.at), c.m.normal);
                if (vn > -solver::kRestitutionThreshold || -vn * scene.dt < sep) {
                    continue;
                }
                const double j = -(1.0 + c.m.restitution) * vn / sp.k_normal;
                apply_impulse_pair(a, b, sp.at, c.m.normal * j);
                sp.bounce_impulse += j;
                applied = true;
            }
        }
        if (!applied) {
            break;
        }
    }
}

void solve_contact(Scene& scene, SolverContact& c)
{
    RigidBody& a = scene.at(c.m.a);
    RigidBody& b = scene.at(c.m.b);
    for (int i = 0; i < c.m.count; ++i) {
        auto& sp = c.points[static_cast<std::size_t>(i)];
        const double vn = dot(relative_velocity(a, b, sp.at), c.m.normal);
        double lambda = -(vn - sp.target_vn) / sp.k_normal;
        const double updated = std::max(sp.normal_impulse + lambda, 0.0);
        lambda = updated - sp.normal_impulse;
        sp.normal_impulse = updated;
        apply_impulse_pair(a, b, sp.at, c.m.normal * lambda);

        if (c.m.friction > 0.0 && sp.k_tangent > 0.0) {
            const double vt = dot(relative_velocity(a, b, sp.at), sp.tangent);
            const double limit = c.m.friction * (sp.normal_impulse + sp.bounce_impulse);
            double lt = -vt / sp.k_tangent;
            const double clamped = std::clamp(sp.tangent_impulse + lt, -limit, limit);
            lt = clamped - sp.tangent_impulse;
            sp.tangent_impulse = clamped;
            apply_impulse_pair(a, b, sp.at, sp.tangent * lt);
        }
    }
}

void solve_joint_velocity(Scene& scene, const Joint& joint, double& accumulated)
{
    if (const auto* rod = std::get_if<RodJoint>(&joint)) {
        RigidBody& b = scene.bodies[rod->body];
        const Vec2 d = b.position - rod->anchor;
        const double len = d.length();
        if (len < 1e-12) {
            return;
        }
        const Vec2 n = d / len;
        b.velocity -= n * dot(b.velocity, n);
    } else if (const auto* pin = std::get_if<PinJoint>(&joint)) {
        RigidBody& a = scene.bodies[pin->body_a];
        RigidBody& b = scene.bodies[pin->body_b];
        const Vec2 ra = rotate(pin->local_a, a.angle);
        const Vec2 rb = rotate(pin->local_b, b.angle);
        const Vec2 cdot = b.velocity + cross(b.angular_velocity, rb) - a.velocity - cross(a.angular_velocity, ra);
        const double m = a.inv_mass + b.inv_mass;
        const double k11 = m + a.inv_inertia * ra.y * ra.y + b.inv_inertia * rb.y * rb.y;
        const double k12 = -a.inv_inertia * ra.x * ra.y - b.inv_inertia * rb.x * rb.y;
        const double k22 = m + a.inv_inertia * ra.x * ra.x + b.inv_inertia * rb.x * rb.x;
        const double det = k11 * k22 - k12 * k12;
        if (std::abs(det) < 1e-300) {
            return;
        }
        const Vec2 p{-(k22 * cdot.x - k12 * cdot.y) / det, -(k11 * cdot.y - k12 * cdot.x) / det};
        a.velocity -= p * a.inv_mass;
        a.angular_velocity -= a.inv_inertia * cross(ra, p);
        b.velocity += p * b.inv_mass;
        b.angular_velocity += b.inv_inertia * cross(rb, p);
    } else if (const auto* pulley = std::get_if<PulleyJoint>(&joint)) {
        RigidBody& a = scene.bodies[pulley->body_a];
        RigidBody& b = scene.bodies[pulley->body_b];
        const Vec2 da = a.position - pulley->anchor_a;
        const Vec2 db = b.position - pulley->anchor_b;
        const double la = da.length();
        const double lb = db.length();
        if (la < 1e-12 || lb < 1e-12) {
            return;
        }
        const Vec2 ua = da / la;
        const Vec2 ub = db / lb;
        const double k = a.inv_mass + b.inv_mass;
        const double cdot = dot(a.velocity, ua) + dot(b.velocity, ub);
        // A slack rope may only take up its slack within this step.
        const double slack = std::max(0.0, pulley->rope_length - la - lb);
        double lambda = -(cdot - slack / scene.dt) / k;
        const double updated = std::min(accumulated + lambda, 0.0);
        lambda = updated - accumulated;
        accumulated = updated;
        a.velocity += ua * (lambda * a.inv_mass);
        b.velocity += ub * (lambda * b.inv_mass);
    }
}

void stabilize_contacts(Scene& scene)
{
    for (const auto& m : find_contacts(scene, false)) {
        const double excess = m.depth() - solver::kSlop;
        if (excess <= 0.0) {
            continue;
        }
        RigidBody& a = scene.at(m.a);
        RigidBody& b = scene.at(m.b);
        const double w = a.inv_mass + b.inv_mass;
        const double c = solver::kBaumgarte * excess / w;
        a.position -= m.normal * (c * a.inv_mass);
        b.position += m.normal * (c * b.inv_mass);
    }
}

// Joints are projected back onto their constraint manifold exactly.
void project_joints(Scene& scene)
{
    for (const auto& joint : scene.joints) {
        if (const auto* rod = std::get_if<RodJoint>(&joint)) {
            RigidBody& b = scene.bodies[rod->body];
            const Vec2 d = b.position - rod->anchor;
            const double len = d.length();
            if (len > 1e-12) {
                b.position = rod->anchor + d * (rod->length / len);
            }
        } else if (const auto* pin = std::get_if<PinJoint>(&joint)) {
            RigidBody& a = scene.bodies[pin->body_a];
            RigidBody& b = scene.bodies[pin->body_b];
            const Vec2 err = (b.position + rotate(pin->local_b, b.angle)) - (a.position + rotate(pin->local_a, a.angle));
            const double w = a.inv_mass + b.inv_mass;
            a.position += err * (a.inv_mass / w);
            b.position -= err * (b.inv_mass / w);
        } else if (const auto* pulley = std::get_if<PulleyJoint>(&joint)) {
            RigidBody& a = scene.bodies[pulley->body_a];
            RigidBody& b = scene.bodies[pulley->body_b];
            for (int it = 0; it < 4; ++it) {
                const Vec2 da = a.position - pulley->anchor_a;
                const Vec2 db = b.position - pulley->anchor_b;
                const double la = da.length();
                const double lb = db.length();
                const double c = la + lb - pulley->rope_length;
                if (c <= 0.0 || la < 1e-12 || lb < 1e-12) {
                    break;
                }
                const double s = c / (a.inv_mass + b.inv_mass);
                a.position -= da / la * (s * a.inv_mass);
                b.position -= db / lb * (s * b.inv_mass);
            }
        }
    }
}

void check_divergence(const Scene& scene)
{
    for (const auto& b : scene.bodies) {
        for (double v : {b.position.x, b.position.y, b.velocity.x, b.velocity.y, b.angular_velocity}) {
            if (!std::isfinite(v) || std::abs(v) > solver::kDivergenceLimit) {
                Error e(ErrorKind::NumericalDivergence,
                        "body '" + b.id + "' diverged at step " + std::to_string(scene.step));
                e.step = scene.step;
                throw e;
            }
        }
    }
}

Sample sample_of(const RigidBody& b, long step, double dt)
{
    return {step, static_cast<double>(step) * dt, b.position.x, b.position.y, b.angle,
            b.velocity.x, b.velocity.y, b.angular_velocity};
}

} // namespace

void step(Scene& scene, std::vector<ContactEvent>* events)
{
    const double dt = scene.dt;

    // (1) forces
    accumulate_forces(scene);

    // (2) velocities
    for (auto& b : scene.bodies) {
        if (b.is_static) {
            continue;
        }
        b.velocity += b.force * (b.inv_mass * dt);
        b.angular_velocity += b.torque * b.inv_inertia * dt;
    }

    // (3) contacts and joints, pairs in (min index, max index) order
    std::vector<SolverContact> contacts;
    for (const auto& m : find_contacts(scene, true)) {
        SolverContact c;
        c.m = m;
        const RigidBody& a = scene.at(m.a);
        const RigidBody& b = scene.at(m.b);
        for (int i = 0; i < m.count; ++i) {
            auto& sp = c.points[static_cast<std::size_t>(i)];
            const auto& cp = m.points[static_cast<std::size_t>(i)];
            sp.at = cp.point;
            sp.target_vn = cp.separation > 0.0 ? -cp.separation / dt : 0.0;
            sp.k_normal = k_along(a, b, sp.at, m.normal);
            sp.tangent = perp(m.normal);
            sp.k_tangent = k_along(a, b, sp.at, sp.tangent);
        }
        contacts.push_back(c);
    }
    restitution_sweep(scene, contacts);
    std::vector<double> joint_impulse(scene.joints.size(), 0.0);
    for (int it = 0; it < solver::kVelocityIterations; ++it) {
        for (auto& c : contacts) {
            solve_contact(scene, c);
        }
        for (std::size_t j = 0; j < scene.joints.size(); ++j) {
            solve_joint_velocity(scene, scene.joints[j], joint_impulse[j]);
        }
    }

    // (4) positions
    for (auto& b : scene.bodies) {
        if (b.is_static) {
            continue;
        }
        b.position += b.velocity * dt;
        b.angle += b.angular_velocity * dt;
    }

    // (5) stabilization
    stabilize_contacts(scene);
    project_joints(scene);

    ++scene.step;
    if (events) {
        for (const auto& c : contacts) {
            double impulse = 0.0;
            for (int i = 0; i < c.m.count; ++i) {
                const auto& sp = c.points[static_cast<std::size_t>(i)];
                impulse += sp.normal_impulse + sp.bounce_impulse;
            }
            if (impulse > 0.0) {
                events->push_back({scene.step, scene.at(c.m.a).id, scene.at(c.m.b).id, c.m.normal, impulse});
            }
        }
    }
    check_divergence(scene);
}

DivergenceError::DivergenceError(std::string message, long at_step, TelemetrySeries partial_series)
    : Error(ErrorKind::NumericalDivergence, std::move(message)), partial(std::move(partial_series))
{
    step = at_step;
}

TelemetrySeries run(Scene& scene, double duration_s)
{
    TelemetrySeries series;
    series.dt_s = scene.dt;
    const long steps = step_count(duration_s, scene.dt);
    for (const auto& b : scene.bodies) {
        series.body_ids.push_back(b.id);
        series.samples.emplace_back();
        series.samples.back().reserve(static_cast<std::size_t>(steps) + 1);
        series.samples.back().push_back(sample_of(b, scene.step, scene.dt));
    }
    for (long k = 0; k < steps; ++k) {
        try {
            step(scene, &series.events);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NumericalDivergence) {
                throw;
            }
            throw DivergenceError("state exceeded 1e6 at step " + std::to_string(e.step), e.step, std::move(series));
        }
        // (6) telemetry
        for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
            series.samples[i].push_back(sample_of(scene.bodies[i], scene.step, scene.dt));
        }
    }
    return series;
}

TelemetrySeries simulate(const ScenarioSpec& spec)
{
    Scene scene = compile(spec);
    return run(scene, spec.duration_s);
}

} // namespace moreforge

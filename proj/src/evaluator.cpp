#include "moreforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>

#include "moreforge/collision.hpp"
#include "moreforge/metrics.hpp"
#include "moreforge/render.hpp"
#include "moreforge/scene.hpp"
#include "moreforge/transport.hpp"

namespace moreforge {

namespace {

// dtw_n reported when the run could not be compared at all.
constexpr double kDivergenceMeasure = 1.0;

struct Tracked {
    std::size_t spec = 0; // index into spec.bodies
    std::size_t tel = 0;  // index into telemetry.samples
    double mass = 0.0;
    double inertia = 0.0;
};

std::vector<Tracked> dynamic_bodies(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    std::vector<Tracked> out;
    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        const auto& b = spec.bodies[i];
        if (b.is_static) {
            continue;
        }
        const auto t = telemetry.body_index(b.id);
        if (!t || telemetry.samples[*t].empty()) {
            continue;
        }
        const double m = b.effective_mass();
        out.push_back({i, *t, m, moment_of_inertia(b.shape, m)});
    }
    return out;
}

double length(Vec2 v) { return v.length(); }

Vec2 pos(const Sample& s) { return {s.x, s.y}; }
Vec2 vel(const Sample& s) { return {s.vx, s.vy}; }

/// Unit vector along which "up" is measured; +y when gravity is zero.
Vec2 up_axis(Vec2 g)
{
    const double n = g.length();
    return n > 0.0 ? g * (-1.0 / n) : Vec2{0.0, 1.0};
}

double height(const Sample& s, Vec2 up) { return dot(pos(s), up); }

std::size_t sample_count(const TelemetrySeries& t, const std::vector<Tracked>& bodies)
{
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (const auto& b : bodies) {
        n = std::min(n, t.samples[b.tel].size());
    }
    return bodies.empty() ? 0 : n;
}

CheckRow skipped(std::string name, double threshold, std::string why)
{
    return {std::move(name), CheckStatus::Skipped, 0.0, threshold, -1, std::move(why)};
}

CheckRow judged(std::string name, double measured, double threshold, long step, bool pass, std::string detail = {})
{
    return {std::move(name), pass ? CheckStatus::Pass : CheckStatus::Fail, measured, threshold, step,
            std::move(detail)};
}

bool has_joints(const ScenarioSpec& spec)
{
    return std::any_of(spec.constraints.begin(), spec.constraints.end(),
                       [](const ConstraintSpec& c) { return !std::holds_alternative<SpringSpec>(c); });
}

bool has_springs(const ScenarioSpec& spec)
{
    return std::any_of(spec.constraints.begin(), spec.constraints.end(),
                       [](const ConstraintSpec& c) { return std::holds_alternative<SpringSpec>(c); });
}

// Why momentum along the unforced axis is not conserved, or "" when it is.
std::string momentum_exemption(const ScenarioSpec& spec, Vec2 axis)
{
    if (!spec.constraints.empty()) {
        return "constraints exert external forces";
    }
    if (!spec.fluids.empty()) {
        return "fluid forces act on the bodies";
    }
    bool statics = !spec.world.ground.empty();
    auto parallel = [&](Vec2 p0, Vec2 p1, double angle) {
        const Vec2 d = rotate(p1 - p0, angle);
        const double n = d.length();
        return n > 0.0 && std::abs(cross(d, axis)) <= 1e-9 * n;
    };
    for (const auto& g : spec.world.ground) {
        if (!parallel(g.p0, g.p1, 0.0)) {
            return "ground is not level";
        }
    }
    for (const auto& b : spec.bodies) {
        if (!b.is_static) {
            continue;
        }
        statics = true;
        const auto* seg = std::get_if<SegmentShape>(&b.shape);
        if (!seg || !parallel(seg->p0, seg->p1, b.angle)) {
            return "static geometry pushes along the axis";
        }
    }
    if (statics) {
        for (const auto& b : spec.bodies) {
            if (!b.is_static && b.friction > 0.0) {
                return "ground friction acts along the axis";
            }
        }
    }
    return {};
}

std::string energy_exemption(const ScenarioSpec& spec)
{
    if (has_springs(spec)) {
        return "spring scene";
    }
    if (!spec.fluids.empty()) {
        return "fluid scene";
    }
    for (const auto& b : spec.bodies) {
        if (b.restitution > 1.0) {
            return "restitution above 1";
        }
    }
    return {};
}

// Largest gain of E over the lowest energy seen so far.
double energy_gain(const std::vector<double>& e, long* worst)
{
    if (e.empty()) {
        return 0.0;
    }
    const double scale = std::max(std::abs(e.front()), 1e-9);
    double lowest = e.front();
    double best = 0.0;
    for (std::size_t k = 1; k < e.size(); ++k) {
        const double gain = (e[k] - lowest) / scale;
        if (gain > best) {
            best = gain;
            if (worst) {
                *worst = static_cast<long>(k);
            }
        }
        lowest = std::min(lowest, e[k]);
    }
    return best;
}

double penetration_depth(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst)
{
    Scene scene = compile(spec);
    std::vector<std::optional<std::size_t>> tel(scene.bodies.size());
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
        if (scene.bodies[i].is_static) {
            continue;
        }
        tel[i] = telemetry.body_index(scene.bodies[i].id);
        n = std::min(n, tel[i] ? telemetry.samples[*tel[i]].size() : std::size_t{0});
    }
    if (n == std::numeric_limits<std::size_t>::max()) {
        return 0.0;
    }
    auto pinned = [&](std::size_t i, std::size_t j) {
        for (const auto& joint : scene.joints) {
            if (const auto* pin = std::get_if<PinJoint>(&joint)) {
                if ((pin->body_a == i && pin->body_b == j) || (pin->body_a == j && pin->body_b == i)) {
                    return true;
                }
            }
        }
        return false;
    };

    double deepest = 0.0;
    std::vector<Collider> colliders(scene.collider_count());
    for (std::size_t i = scene.bodies.size(); i < scene.collider_count(); ++i) {
        colliders[i] = collider_of(scene.at(i));
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
            auto& b = scene.bodies[i];
            if (tel[i]) {
                const auto& s = telemetry.samples[*tel[i]][k];
                b.position = pos(s);
                b.angle = s.angle;
            }
            colliders[i] = collider_of(b);
        }
        for (std::size_t i = 0; i < scene.collider_count(); ++i) {
            for (std::size_t j = i + 1; j < scene.collider_count(); ++j) {
                if ((scene.at(i).is_static && scene.at(j).is_static) || pinned(i, j)) {
                    continue;
                }
                const auto m = collide(colliders[i], colliders[j], 0.0);
                if (m && m->depth() > deepest) {
                    deepest = m->depth();
                    if (worst) {
                        *worst = static_cast<long>(k);
                    }
                }
            }
        }
    }
    return deepest;
}

double bounds_escape(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst)
{
    const Rect r = *spec.world.bounds;
    double escape = 0.0;
    for (const auto& b : dynamic_bodies(spec, telemetry)) {
        const auto& s = telemetry.samples[b.tel];
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double e = std::max({r.min.x - s[k].x, s[k].x - r.max.x, r.min.y - s[k].y, s[k].y - r.max.y});
            if (e > escape) {
                escape = e;
                if (worst) {
                    *worst = static_cast<long>(k);
                }
            }
        }
    }
    return escape;
}

// --- intent helpers -------------------------------------------------------

double top_extent(const Shape& shape, double angle, Vec2 up)
{
    if (const auto* c = std::get_if<CircleShape>(&shape)) {
        return c->radius;
    }
    if (const auto* b = std::get_if<BoxShape>(&shape)) {
        const Vec2 ax = rotate({b->width / 2, 0.0}, angle);
        const Vec2 ay = rotate({0.0, b->height / 2}, angle);
        return std::abs(dot(ax, up)) + std::abs(dot(ay, up));
    }
    return 0.0;
}

bool contains_word(const std::string& label, std::string_view word)
{
    std::string lower = label;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower.find(word) != std::string::npos;
}

CheckRow intent_gravity(const ScenarioSpec& spec, const TelemetrySeries& tel, const std::vector<Tracked>& bodies)
{
    const Vec2 up = up_axis(spec.world.gravity);
    const auto idx = tel.body_index(key_object(spec, tel));
    const auto& s = tel.samples[*idx];
    if (dot(vel(s.front()), up) > 0.0) {
        std::size_t apex = 0;
        for (std::size_t k = 1; k < s.size(); ++k) {
            if (height(s[k], up) > height(s[apex], up)) {
                apex = k;
            }
        }
        const bool inside = apex > 0 && apex + 1 < s.size();
        return judged("apex_reached", s[apex].t, spec.duration_s, static_cast<long>(apex), inside,
                      inside ? "" : "apex not reached");
    }
    double lowest = height(s.front(), up);
    long at = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (height(s[k], up) < lowest) {
            lowest = height(s[k], up);
            at = static_cast<long>(k);
        }
    }
    (void)bodies;
    const double drop = height(s.front(), up) - lowest;
    return judged("falls", drop, 1e-3, at, drop >= 1e-3, drop >= 1e-3 ? "" : "object does not fall");
}

CheckRow intent_accelerates(const ScenarioSpec& spec, const TelemetrySeries& tel)
{
    const auto& s = tel.samples[*tel.body_index(key_object(spec, tel))];
    const double v0 = length(vel(s.front()));
    double gain = 0.0;
    long at = -1;
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double g = length(vel(s[k])) - v0;
        if (g > gain) {
            gain = g;
            at = static_cast<long>(k);
        }
    }
    return judged("accelerates", gain, 1e-3, at, gain >= 1e-3, gain >= 1e-3 ? "" : "object does not speed up");
}

Collider placed(const BodySpec& body, const Sample& s)
{
    RigidBody r;
    r.shape = body.shape;
    r.position = pos(s);
    r.angle = s.angle;
    return collider_of(r);
}

CheckRow intent_impact(const ScenarioSpec& spec, const TelemetrySeries& tel, const std::vector<Tracked>& bodies)
{
    constexpr double kContactGap = 0.01;
    double gap = std::numeric_limits<double>::infinity();
    long at = -1;
    const std::size_t n = sample_count(tel, bodies);
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        for (std::size_t j = i + 1; j < bodies.size(); ++j) {
            const auto& bi = spec.bodies[bodies[i].spec];
            const auto& bj = spec.bodies[bodies[j].spec];
            for (std::size_t k = 0; k < n; ++k) {
                const auto& si = tel.samples[bodies[i].tel][k];
                const auto& sj = tel.samples[bodies[j].tel][k];
                // Speculative contacts resolve up to one step of closing
                // travel before the shapes touch.
                const double reach = (vel(si) - vel(sj)).length() * tel.dt_s;
                const auto m = collide(placed(bi, si), placed(bj, sj), kContactGap + reach);
                if (m && m->min_separation() - reach < gap) {
                    gap = m->min_separation() - reach;
                    at = static_cast<long>(k);
                }
            }
        }
    }
    if (bodies.size() < 2) {
        return judged("impact", 0.0, kContactGap, -1, false, "fewer than two moving bodies");
    }
    const bool hit = at >= 0;
    return judged("impact", hit ? gap : kContactGap, kContactGap, at, hit, hit ? "" : "bodies never touch");
}

CheckRow intent_oscillates(const ScenarioSpec& spec, const TelemetrySeries& tel)
{
    const Vec2 up = up_axis(spec.world.gravity);
    const auto& s = tel.samples[*tel.body_index(key_object(spec, tel))];
    double mean = 0.0;
    for (const auto& q : s) {
        mean += height(q, up);
    }
    mean /= static_cast<double>(s.size());
    int crossings = 0;
    long first = -1;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if ((height(s[k - 1], up) - mean) * (height(s[k], up) - mean) < 0.0) {
            ++crossings;
            if (first < 0) {
                first = static_cast<long>(k);
            }
        }
    }
    return judged("oscillates", crossings, 2, first, crossings >= 2, crossings >= 2 ? "" : "no oscillation");
}

CheckRow intent_cradle(const ScenarioSpec& spec, const TelemetrySeries& tel, const std::vector<Tracked>& bodies)
{
    // Hanging balls ordered by anchor x; released balls start away from
    // directly below their anchor.
    struct Ball {
        std::size_t tel;
        double anchor_x;
        bool released;
    };
    std::vector<Ball> balls;
    for (const auto& c : spec.constraints) {
        const auto* rod = std::get_if<RodSpec>(&c);
        if (!rod) {
            continue;
        }
        const auto t = tel.body_index(rod->body);
        if (!t) {
            continue;
        }
        const auto& s0 = tel.samples[*t].front();
        balls.push_back({*t, rod->anchor.x, std::abs(s0.x - rod->anchor.x) > 1e-6});
    }
    (void)bodies;
    std::sort(balls.begin(), balls.end(), [](const Ball& a, const Ball& b) { return a.anchor_x < b.anchor_x; });
    const auto released = std::count_if(balls.begin(), balls.end(), [](const Ball& b) { return b.released; });
    if (balls.size() < 2 || released == 0 || released == static_cast<long>(balls.size())) {
        return skipped("cradle_transfer", 0.5, "no resting row of hanging balls");
    }
    const bool from_left = balls.front().released;
    const Ball& far = from_left ? balls.back() : balls.front();

    const std::size_t n = tel.samples[far.tel].size();
    std::size_t impact = n;
    for (std::size_t k = 1; k < n && impact == n; ++k) {
        for (const auto& b : balls) {
            if (!b.released && length(vel(tel.samples[b.tel][k])) > 1e-3) {
                impact = k;
                break;
            }
        }
    }
    if (impact == n) {
        return judged("cradle_transfer", 0.0, 0.5, -1, false, "released ball never strikes the row");
    }
    double strike = 0.0;
    for (const auto& b : balls) {
        if (b.released) {
            strike = std::max(strike, length(vel(tel.samples[b.tel][impact - 1])));
        }
    }
    double far_speed = 0.0;
    for (std::size_t k = impact; k < n; ++k) {
        far_speed = std::max(far_speed, length(vel(tel.samples[far.tel][k])));
    }
    const double ratio = strike > 0.0 ? far_speed / strike : 0.0;
    return judged("cradle_transfer", ratio, 0.5, static_cast<long>(impact), ratio >= 0.5,
                  ratio >= 0.5 ? "" : "far ball barely moves after impact");
}

CheckRow intent_buoyancy(const ScenarioSpec& spec, const TelemetrySeries& tel, const std::vector<Tracked>& bodies)
{
    const Vec2 up = up_axis(spec.world.gravity);
    const bool says_float = contains_word(spec.label, "float");
    const bool says_sink = contains_word(spec.label, "sink");
    double worst = std::numeric_limits<double>::infinity();
    long at = -1;
    bool any = false;
    for (const auto& b : bodies) {
        const auto& body = spec.bodies[b.spec];
        const auto& last = tel.samples[b.tel].back();
        const FluidRegion* fluid = nullptr;
        for (const auto& f : spec.fluids) {
            if (last.x >= f.rect.min.x && last.x <= f.rect.max.x) {
                fluid = &f;
                break;
            }
        }
        if (!fluid) {
            continue;
        }
        const double density = body.effective_mass() / shape_area(body.shape);
        const bool expect_float = says_float || (!says_sink && density < fluid->density);
        const double top = height(last, up) + top_extent(body.shape, last.angle, up);
        const double surface = dot(fluid->rect.max, up);
        // Positive margin means the outcome matches the expectation.
        const double margin = expect_float ? top - surface : surface - top;
        any = true;
        if (margin < worst) {
            worst = margin;
            at = static_cast<long>(tel.samples[b.tel].size() - 1);
        }
    }
    if (!any) {
        return skipped("floats", 0.0, "no body over a fluid");
    }
    const std::string name = says_sink ? "sinks" : "floats";
    return judged(name, worst, 0.0, at, worst > 0.0, worst > 0.0 ? "" : "floater sinks below the surface");
}

CheckRow intent_inertia(const ScenarioSpec& spec, const TelemetrySeries& tel)
{
    const auto& s = tel.samples[*tel.body_index(key_object(spec, tel))];
    const Vec2 v0 = vel(s.front());
    const double speed = (v0).length();
    if (speed <= 0.0) {
        return skipped("keeps_direction", 0.0, "object starts at rest");
    }
    const double travel = dot(pos(s.back()) - pos(s.front()), v0) / speed;
    const bool slower = length(vel(s.back())) <= speed + 1e-6;
    const bool ok = travel > 0.0 && slower;
    return judged("keeps_direction", travel, 0.0, static_cast<long>(s.size() - 1), ok,
                  ok ? "" : "object does not coast in its initial direction");
}

CheckRow intent_swings(const ScenarioSpec& spec, const TelemetrySeries& tel)
{
    for (const auto& c : spec.constraints) {
        const auto* rod = std::get_if<RodSpec>(&c);
        if (!rod) {
            continue;
        }
        const auto& s = tel.samples[*tel.body_index(rod->body)];
        int crossings = 0;
        long first = -1;
        for (std::size_t k = 1; k < s.size(); ++k) {
            if ((s[k - 1].x - rod->anchor.x) * (s[k].x - rod->anchor.x) < 0.0) {
                ++crossings;
                if (first < 0) {
                    first = static_cast<long>(k);
                }
            }
        }
        return judged("swings", crossings, 1, first, crossings >= 1, crossings >= 1 ? "" : "bob never passes below the pivot");
    }
    return skipped("swings", 1, "no rod");
}

CheckRow intent_pulley(const ScenarioSpec& spec, const TelemetrySeries& tel)
{
    const Vec2 up = up_axis(spec.world.gravity);
    for (const auto& c : spec.constraints) {
        const auto* p = std::get_if<PulleySpec>(&c);
        if (!p) {
            continue;
        }
        const auto ia = spec.body_index(p->body_a);
        const auto ib = spec.body_index(p->body_b);
        const double ma = spec.bodies[*ia].effective_mass();
        const double mb = spec.bodies[*ib].effective_mass();
        if (std::abs(ma - mb) <= 1e-9 * std::max(ma, mb)) {
            return skipped("heavier_descends", 0.0, "equal masses");
        }
        const auto& s = tel.samples[*tel.body_index(ma > mb ? p->body_a : p->body_b)];
        const double drop = height(s.front(), up) - height(s.back(), up);
        return judged("heavier_descends", drop, 0.0, static_cast<long>(s.size() - 1), drop > 0.0,
                      drop > 0.0 ? "" : "heavier mass does not descend");
    }
    return skipped("heavier_descends", 0.0, "no pulley");
}

std::string num(double v) { return format_number(v); }

Json row_json(const CheckRow& r)
{
    Json j{{"name", r.name},
           {"status", std::string(to_string(r.status))},
           {"measured", r.measured},
           {"threshold", r.threshold},
           {"step", r.step}};
    if (!r.detail.empty()) {
        j["detail"] = r.detail;
    }
    return j;
}

CheckRow row_from_json(const Json& j)
{
    CheckRow r;
    r.name = j.at("name").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    r.status = status == "pass" ? CheckStatus::Pass : status == "fail" ? CheckStatus::Fail : CheckStatus::Skipped;
    if (status != "pass" && status != "fail" && status != "skipped") {
        throw Error(ErrorKind::Schema, "unknown check status '" + status + "'", "status");
    }
    r.measured = j.at("measured").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.step = j.value("step", -1L);
    r.detail = j.value("detail", std::string{});
    return r;
}

bool failing(const FeedbackReport& report, std::string_view name)
{
    for (const auto* section : {&report.physics_section, &report.intent_section}) {
        for (const auto& r : *section) {
            if (r.failed() && r.name == name) {
                return true;
            }
        }
    }
    return false;
}

} // namespace

std::string_view to_string(CheckStatus s)
{
    switch (s) {
    case CheckStatus::Pass:
        return "pass";
    case CheckStatus::Fail:
        return "fail";
    case CheckStatus::Skipped:
        return "skipped";
    }
    return "skipped";
}

void check_rules(const RuleSet& r)
{
    for (double v : {r.momentum_tol, r.energy_tol, r.drift_tol, r.penetration_tol, r.bounds_tol, r.divergence_tol,
                     r.trajectory_dtw_n_tol, r.trajectory_procrustes_tol}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::Schema, "rule thresholds must be positive");
        }
    }
}

std::vector<std::string> FeedbackReport::failing_checks() const
{
    std::vector<std::string> out;
    for (const auto& t : trajectory_section) {
        if (!t.passed) {
            out.push_back("trajectory:" + t.object);
        }
    }
    for (const auto& r : physics_section) {
        if (r.failed()) {
            out.push_back(r.name);
        }
    }
    for (const auto& r : intent_section) {
        if (r.failed()) {
            out.push_back(r.name);
        }
    }
    return out;
}

std::vector<double> discrete_energy(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    const auto bodies = dynamic_bodies(spec, telemetry);
    const std::size_t n = sample_count(telemetry, bodies);
    const Vec2 g = spec.world.gravity;
    // Potential measured from the lowest point reached along each axis.
    Vec2 ref{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (const auto& b : bodies) {
        for (const auto& s : telemetry.samples[b.tel]) {
            ref.x = std::min(ref.x, g.x <= 0.0 ? s.x : -s.x);
            ref.y = std::min(ref.y, g.y <= 0.0 ? s.y : -s.y);
        }
    }
    if (g.x > 0.0) {
        ref.x = -ref.x;
    }
    if (g.y > 0.0) {
        ref.y = -ref.y;
    }
    std::vector<double> e(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (const auto& b : bodies) {
            const auto& s = telemetry.samples[b.tel][k];
            const auto& prev = telemetry.samples[b.tel][k ? k - 1 : 0];
            const Vec2 mid = (pos(s) + pos(prev)) * 0.5;
            e[k] += 0.5 * b.mass * dot(vel(s), vel(s)) + 0.5 * b.inertia * s.omega * s.omega -
                    b.mass * dot(g, mid - ref);
        }
    }
    return e;
}

double max_step_energy_gain(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    const auto e = discrete_energy(spec, telemetry);
    if (e.empty()) {
        return 0.0;
    }
    const double scale = std::max(std::abs(e.front()), 1e-9);
    double worst = 0.0;
    for (std::size_t k = 1; k < e.size(); ++k) {
        worst = std::max(worst, (e[k] - e[k - 1]) / scale);
    }
    return worst;
}

double momentum_drift(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst_step)
{
    const auto bodies = dynamic_bodies(spec, telemetry);
    const std::size_t n = sample_count(telemetry, bodies);
    const Vec2 up = up_axis(spec.world.gravity);
    std::vector<Vec2> axes;
    if (spec.world.gravity.length() > 0.0) {
        axes.push_back({up.y, -up.x});
    } else {
        axes = {{1.0, 0.0}, {0.0, 1.0}};
    }
    double scale = 0.0;
    for (const auto& b : bodies) {
        scale += b.mass * std::max(length(vel(telemetry.samples[b.tel].front())), 1e-3);
    }
    double worst = 0.0;
    for (const Vec2 axis : axes) {
        auto p = [&](std::size_t k) {
            double sum = 0.0;
            for (const auto& b : bodies) {
                sum += b.mass * dot(vel(telemetry.samples[b.tel][k]), axis);
            }
            return sum;
        };
        const double p0 = n ? p(0) : 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            const double d = std::abs(p(k) - p0) / scale;
            if (d > worst) {
                worst = d;
                if (worst_step) {
                    *worst_step = static_cast<long>(k);
                }
            }
        }
    }
    return worst;
}

double constraint_drift(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst_step)
{
    double worst = 0.0;
    auto track = [&](double d, std::size_t k) {
        if (d > worst) {
            worst = d;
            if (worst_step) {
                *worst_step = static_cast<long>(k);
            }
        }
    };
    auto samples_of = [&](const std::string& id) -> const std::vector<Sample>* {
        const auto t = telemetry.body_index(id);
        return t ? &telemetry.samples[*t] : nullptr;
    };
    for (const auto& c : spec.constraints) {
        if (const auto* rod = std::get_if<RodSpec>(&c)) {
            if (const auto* s = samples_of(rod->body)) {
                for (std::size_t k = 0; k < s->size(); ++k) {
                    track(std::abs(length(pos((*s)[k]) - rod->anchor) - rod->length), k);
                }
            }
        } else if (const auto* pin = std::get_if<PinSpec>(&c)) {
            const auto ia = spec.body_index(pin->body_a);
            const auto ib = spec.body_index(pin->body_b);
            const auto* sa = samples_of(pin->body_a);
            const auto* sb = samples_of(pin->body_b);
            // Static bodies have no telemetry: they stay at their spec pose.
            auto world = [&](const std::vector<Sample>* s, std::size_t body, Vec2 local, std::size_t k) {
                const auto& b = spec.bodies[body];
                if (!s) {
                    return b.position + rotate(local, b.angle);
                }
                return pos((*s)[k]) + rotate(local, (*s)[k].angle);
            };
            const std::size_t n = std::min(sa ? sa->size() : SIZE_MAX, sb ? sb->size() : SIZE_MAX);
            for (std::size_t k = 0; k < n && n != SIZE_MAX; ++k) {
                track((world(sa, *ia, pin->anchor_a, k) - world(sb, *ib, pin->anchor_b, k)).length(), k);
            }
        } else if (const auto* p = std::get_if<PulleySpec>(&c)) {
            const auto* sa = samples_of(p->body_a);
            const auto* sb = samples_of(p->body_b);
            if (sa && sb) {
                for (std::size_t k = 0; k < std::min(sa->size(), sb->size()); ++k) {
                    const double len = length(pos((*sa)[k]) - p->anchor_a) + length(pos((*sb)[k]) - p->anchor_b);
                    track(std::max(0.0, len - p->rope_length), k);
                }
            }
        }
    }
    return worst;
}

std::vector<CheckRow> check_physics(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const RuleSet& rules,
                                    const TelemetrySeries* reference)
{
    check_rules(rules);
    std::vector<CheckRow> rows;

    if (rules.momentum) {
        const Vec2 up = up_axis(spec.world.gravity);
        const std::string why = momentum_exemption(spec, {up.y, -up.x});
        if (!why.empty()) {
            rows.push_back(skipped("momentum", rules.momentum_tol, why));
        } else {
            long at = -1;
            const double d = momentum_drift(spec, telemetry, &at);
            rows.push_back(judged("momentum", d, rules.momentum_tol, at, d <= rules.momentum_tol));
        }
    }
    if (rules.energy) {
        const std::string why = energy_exemption(spec);
        if (!why.empty()) {
            rows.push_back(skipped("energy", rules.energy_tol, why));
        } else {
            long at = -1;
            const double gain = energy_gain(discrete_energy(spec, telemetry), &at);
            rows.push_back(judged("energy", gain, rules.energy_tol, at, gain <= rules.energy_tol));
        }
    }
    if (rules.constraint_drift) {
        if (!has_joints(spec)) {
            rows.push_back(skipped("constraint_drift", rules.drift_tol, "no rods, pins or pulleys"));
        } else {
            long at = -1;
            const double d = constraint_drift(spec, telemetry, &at);
            rows.push_back(judged("constraint_drift", d, rules.drift_tol, at, d <= rules.drift_tol));
        }
    }
    if (rules.penetration) {
        long at = -1;
        const double d = penetration_depth(spec, telemetry, &at);
        rows.push_back(judged("penetration", d, rules.penetration_tol, at, d <= rules.penetration_tol));
    }
    if (rules.bounds) {
        if (!spec.world.bounds) {
            rows.push_back(skipped("bounds", rules.bounds_tol, "no world bounds"));
        } else {
            long at = -1;
            const double d = bounds_escape(spec, telemetry, &at);
            rows.push_back(judged("bounds", d, rules.bounds_tol, at, d <= rules.bounds_tol));
        }
    }
    if (rules.divergence) {
        std::optional<TelemetrySeries> own;
        try {
            if (!reference) {
                own = simulate(spec);
                reference = &*own;
            }
            const std::string key = key_object(spec, *reference);
            const auto ri = reference->body_index(key);
            const auto ti = telemetry.body_index(key);
            if (!ti) {
                rows.push_back(judged("divergence", 1.0, rules.divergence_tol, -1, false,
                                      "key object '" + key + "' missing from telemetry"));
            } else {
                const auto row = evaluate_pair(ground_truth(spec, *reference, *ri, Space::World),
                                               ground_truth(spec, telemetry, *ti, Space::World));
                rows.push_back(judged("divergence", row.dtw_n, rules.divergence_tol, -1,
                                      row.dtw_n <= rules.divergence_tol));
            }
        } catch (const DivergenceError& e) {
            rows.push_back(judged("divergence", kDivergenceMeasure, rules.divergence_tol, e.step, false,
                                  "reference run diverged"));
        }
    }
    return rows;
}

std::vector<CheckRow> check_intent(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    std::vector<CheckRow> rows;
    // Body count at every step: every spec body must have a finite sample at
    // each recorded step.
    std::size_t expected = spec.bodies.size();
    std::size_t steps = 0;
    for (const auto& s : telemetry.samples) {
        steps = std::max(steps, s.size());
    }
    std::size_t fewest = expected;
    long at = -1;
    for (std::size_t k = 0; k < steps; ++k) {
        std::size_t present = 0;
        for (const auto& b : spec.bodies) {
            if (b.is_static) {
                ++present;
                continue;
            }
            const auto t = telemetry.body_index(b.id);
            if (t && k < telemetry.samples[*t].size()) {
                const auto& s = telemetry.samples[*t][k];
                present += std::isfinite(s.x) && std::isfinite(s.y) ? 1 : 0;
            }
        }
        if (present < fewest) {
            fewest = present;
            at = static_cast<long>(k);
        }
    }
    const std::size_t extra = telemetry.body_ids.size() > expected ? telemetry.body_ids.size() : 0;
    const bool count_ok = fewest == expected && extra == 0 && steps > 0;
    rows.push_back(judged("body_count", static_cast<double>(extra ? extra : fewest), static_cast<double>(expected), at,
                          count_ok, count_ok ? "" : "object count differs from the spec"));
    if (!count_ok) {
        return rows;
    }

    const auto bodies = dynamic_bodies(spec, telemetry);
    if (bodies.empty()) {
        return rows;
    }
    switch (spec.phenomenon) {
    case Phenomenon::Gravity:
        rows.push_back(intent_gravity(spec, telemetry, bodies));
        break;
    case Phenomenon::Acceleration:
        rows.push_back(intent_accelerates(spec, telemetry));
        break;
    case Phenomenon::Collision:
        rows.push_back(intent_impact(spec, telemetry, bodies));
        break;
    case Phenomenon::Oscillation:
        rows.push_back(intent_oscillates(spec, telemetry));
        break;
    case Phenomenon::Momentum:
        rows.push_back(intent_cradle(spec, telemetry, bodies));
        break;
    case Phenomenon::Buoyancy:
        rows.push_back(intent_buoyancy(spec, telemetry, bodies));
        break;
    case Phenomenon::Inertia:
        rows.push_back(intent_inertia(spec, telemetry));
        break;
    case Phenomenon::Pendulum:
        rows.push_back(intent_swings(spec, telemetry));
        break;
    case Phenomenon::Pulley:
        rows.push_back(intent_pulley(spec, telemetry));
        break;
    }
    return rows;
}

std::vector<TrajectoryRow> compare_trajectories(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                                                const std::vector<Trajectory2D>& observed, const RuleSet& rules)
{
    const int stride = frame_stride(spec.dt_s, spec.render.fps);
    std::vector<TrajectoryRow> rows;
    for (std::size_t i = 0; i < spec.bodies.size() && i < observed.size(); ++i) {
        const auto& body = spec.bodies[i];
        const auto t = telemetry.body_index(body.id);
        if (body.is_static || !t) {
            continue;
        }
        TrajectoryRow row;
        row.object = body.id;
        const auto& est = observed[i];
        if (est.points.size() < 2) {
            row.dtw_n = 1.0;
            row.procrustes = 2.0;
            row.passed = false;
            rows.push_back(row);
            continue;
        }
        const auto gt = project_body(spec, telemetry, *t, stride);
        const auto m = evaluate_pair(gt, est);
        row.dtw_n = m.dtw_n;
        row.procrustes = m.procrustes;
        // Worst step: largest distance between an observed point and the
        // projection at the same time.
        double worst = -1.0;
        std::size_t g = 0;
        for (const auto& p : est.points) {
            while (g + 1 < gt.points.size() && gt.points[g].t < p.t - 0.5 * spec.dt_s) {
                ++g;
            }
            const double d = std::hypot(p.x - gt.points[g].x, p.y - gt.points[g].y);
            if (d > worst) {
                worst = d;
                row.worst_step = std::lround(p.t / spec.dt_s);
            }
        }
        row.passed = m.dtw_n <= rules.trajectory_dtw_n_tol && m.procrustes <= rules.trajectory_procrustes_tol;
        rows.push_back(row);
    }
    return rows;
}

FeedbackReport synthesize_feedback(std::vector<TrajectoryRow> trajectory, std::vector<CheckRow> physics,
                                   std::vector<CheckRow> intent)
{
    FeedbackReport r;
    r.trajectory_section = std::move(trajectory);
    r.physics_section = std::move(physics);
    r.intent_section = std::move(intent);
    for (const auto& t : r.trajectory_section) {
        if (!t.passed) {
            r.summary_lines.push_back("trajectory: " + t.object + " diverges from its telemetry (dtw_n " +
                                      num(t.dtw_n) + ", procrustes " + num(t.procrustes) + ", worst step " +
                                      std::to_string(t.worst_step) + ")");
        }
    }
    for (const auto& c : r.physics_section) {
        if (c.failed()) {
            std::string line = "physics: " + c.name + " failed: measured " + num(c.measured) + ", threshold " +
                               num(c.threshold);
            if (c.step >= 0) {
                line += ", worst at step " + std::to_string(c.step);
            }
            if (!c.detail.empty()) {
                line += " (" + c.detail + ")";
            }
            r.summary_lines.push_back(line);
        }
    }
    for (const auto& c : r.intent_section) {
        if (c.failed()) {
            r.summary_lines.push_back("intent: " + c.name + " failed: " + (c.detail.empty() ? "condition not met" : c.detail) +
                                      " (measured " + num(c.measured) + ", threshold " + num(c.threshold) + ")");
        }
    }
    r.overall = r.summary_lines.empty();
    if (r.overall) {
        r.summary_lines.push_back("all checks passed");
    }
    return r;
}

FeedbackReport evaluate(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const RuleSet& rules)
{
    require_complete(telemetry, spec);
    auto observed = track_centroids(spec, telemetry);
    return synthesize_feedback(compare_trajectories(spec, telemetry, observed, rules),
                               check_physics(spec, telemetry, rules), check_intent(spec, telemetry));
}

FeedbackReport divergence_report(const ScenarioSpec& spec, const DivergenceError& err)
{
    const RuleSet rules;
    (void)spec;
    return synthesize_feedback({}, {judged("divergence", kDivergenceMeasure, rules.divergence_tol, err.step, false,
                                           err.what())},
                               {});
}

Json feedback_to_json(const FeedbackReport& report)
{
    Json traj = Json::array();
    for (const auto& t : report.trajectory_section) {
        traj.push_back({{"object", t.object},
                        {"dtw_n", t.dtw_n},
                        {"procrustes", t.procrustes},
                        {"worst_step", t.worst_step},
                        {"status", t.passed ? "pass" : "fail"}});
    }
    Json physics = Json::array();
    for (const auto& r : report.physics_section) {
        physics.push_back(row_json(r));
    }
    Json intent = Json::array();
    for (const auto& r : report.intent_section) {
        intent.push_back(row_json(r));
    }
    return Json{{"trajectory", traj},
                {"physics", physics},
                {"intent", intent},
                {"summary", report.summary_lines},
                {"overall", report.overall ? "pass" : "fail"}};
}

FeedbackReport feedback_from_json(const Json& doc)
{
    try {
        FeedbackReport r;
        for (const auto& t : doc.at("trajectory")) {
            r.trajectory_section.push_back({t.at("object").get<std::string>(), t.at("dtw_n").get<double>(),
                                            t.at("procrustes").get<double>(), t.at("worst_step").get<long>(),
                                            t.at("status").get<std::string>() == "pass"});
        }
        for (const auto& j : doc.at("physics")) {
            r.physics_section.push_back(row_from_json(j));
        }
        for (const auto& j : doc.at("intent")) {
            r.intent_section.push_back(row_from_json(j));
        }
        r.summary_lines = doc.at("summary").get<std::vector<std::string>>();
        r.overall = doc.at("overall").get<std::string>() == "pass";
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("malformed feedback report: ") + e.what());
    }
}

ScenarioSpec default_refinement(const ScenarioSpec& spec, const FeedbackReport& report)
{
    ScenarioSpec out = spec;
    // Clamp values the range table would reject.
    for (auto& b : out.bodies) {
        b.restitution = std::clamp(b.restitution, 0.0, 1.0);
        b.friction = std::clamp(b.friction, 0.0, 1.0);
        if (b.mass) {
            b.mass = std::clamp(*b.mass, limits::kMassMin, limits::kMassMax);
        }
        if (b.density) {
            b.density = std::clamp(*b.density, limits::kDensityMin, limits::kDensityMax);
        }
        const double speed = b.velocity.length();
        if (speed > limits::kSpeedMax) {
            const Vec2 v = b.velocity * (limits::kSpeedMax / speed);
            b.velocity = {quantize(v.x), quantize(v.y)};
        }
    }
    out.dt_s = std::clamp(out.dt_s, limits::kDtMin, limits::kDtMax);

    const bool diverged = failing(report, "divergence");
    if (diverged && out.dt_s > defaults::kDt) {
        out.dt_s = quantize(defaults::kDt);
    }
    if (failing(report, "apex_reached")) {
        const double cap = limits::kMaxSteps * out.dt_s;
        out.duration_s = quantize(std::min(2.0 * out.duration_s, cap));
    }
    if (failing(report, "floats")) {
        for (auto& b : out.bodies) {
            if (b.is_static) {
                continue;
            }
            for (const auto& f : out.fluids) {
                if (b.position.x >= f.rect.min.x && b.position.x <= f.rect.max.x &&
                    b.effective_mass() / shape_area(b.shape) >= f.density) {
                    b.density = quantize(0.5 * f.density);
                    b.mass.reset();
                }
            }
        }
    }
    return out;
}

RefinementHook http_refinement(std::string url)
{
    return [url = std::move(url)](const ScenarioSpec& spec, const FeedbackReport& report) {
        const Json body{{"spec", spec_to_json(spec)}, {"report", feedback_to_json(report)}};
        const std::string text = http_post_json(url, canonical_dump(body));
        Json doc;
        try {
            doc = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw Error(ErrorKind::ValidationFailed, std::string("refiner returned malformed JSON: ") + e.what());
        }
        try {
            return spec_from_json(doc.contains("spec") ? doc.at("spec") : doc);
        } catch (const Error& e) {
            Error err(ErrorKind::ValidationFailed, std::string("refiner returned an invalid spec: ") + e.what(),
                      e.path());
            err.violations = e.violations;
            throw err;
        }
    };
}

RefinementHook refinement_from_env()
{
    if (const char* url = std::getenv("MOREFORGE_REFINER_URL"); url && *url) {
        return http_refinement(url);
    }
    return default_refinement;
}

ScenarioSpec refine(const ScenarioSpec& spec, const FeedbackReport& report, const RefinementHook& hook)
{
    if (report.overall) {
        return spec;
    }
    ScenarioSpec next = hook(spec, report);
    require_valid(next);
    if (next == spec) {
        throw Error(ErrorKind::NoProgress, "refinement left the spec unchanged; failing checks: " +
                                               [&] {
                                                   std::string s;
                                                   for (const auto& n : report.failing_checks()) {
                                                       s += (s.empty() ? "" : ", ") + n;
                                                   }
                                                   return s;
                                               }());
    }
    return next;
}

} // namespace moreforge

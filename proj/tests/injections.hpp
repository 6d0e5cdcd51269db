#pragma once

// Synthetic-violation corpus: template runs with one physics rule broken by
// hand-editing the telemetry.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "moreforge/engine.hpp"
#include "moreforge/templates.hpp"

namespace moreforge::inject {

struct Injection {
    std::string rule; // the one physics check expected to fail
    ScenarioSpec spec;
    TelemetrySeries telemetry;
};

inline std::size_t index_of(const TelemetrySeries& t, const std::string& id) { return *t.body_index(id); }

// Step at which the two bodies are closest.
inline std::size_t closest_step(const TelemetrySeries& t, std::size_t a, std::size_t b)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < t.sample_count(); ++k) {
        auto d = [&](std::size_t i) {
            return std::hypot(t.samples[a][i].x - t.samples[b][i].x, t.samples[a][i].y - t.samples[b][i].y);
        };
        if (d(k) < d(best)) {
            best = k;
        }
    }
    return best;
}

inline Injection inject_momentum()
{
    Injection in{"momentum", build_template(Phenomenon::Collision), {}};
    in.telemetry = quantized(simulate(in.spec));
    const auto a = index_of(in.telemetry, "ball_a");
    const auto b = index_of(in.telemetry, "ball_b");
    const std::size_t from = closest_step(in.telemetry, a, b) + 10;
    for (std::size_t k = from; k < in.telemetry.sample_count(); ++k) {
        in.telemetry.samples[b][k].vx = -in.telemetry.samples[b][k].vx;
    }
    return in;
}

inline Injection inject_energy()
{
    Injection in{"energy", build_template(Phenomenon::Pendulum), {}};
    in.telemetry = quantized(simulate(in.spec));
    auto& s = in.telemetry.samples[index_of(in.telemetry, "bob")];
    for (std::size_t k = s.size() / 2; k < s.size(); ++k) {
        s[k].vx *= 1.5;
        s[k].vy *= 1.5;
        s[k].omega *= 1.5;
    }
    return in;
}

inline Injection inject_constraint_drift()
{
    Injection in{"constraint_drift", build_template(Phenomenon::Pendulum), {}};
    in.telemetry = quantized(simulate(in.spec));
    auto& s = in.telemetry.samples[index_of(in.telemetry, "bob")];
    for (std::size_t k = s.size() / 2; k < s.size(); ++k) {
        s[k].x += 0.004;
    }
    return in;
}

inline Injection inject_penetration()
{
    Injection in{"penetration", build_template(Phenomenon::Collision), {}};
    in.telemetry = quantized(simulate(in.spec));
    const auto a = index_of(in.telemetry, "ball_a");
    const auto b = index_of(in.telemetry, "ball_b");
    const std::size_t k = closest_step(in.telemetry, a, b);
    auto& sa = in.telemetry.samples[a][k];
    auto& sb = in.telemetry.samples[b][k];
    const double r = std::get<CircleShape>(in.spec.bodies[0].shape).radius +
                     std::get<CircleShape>(in.spec.bodies[1].shape).radius;
    // Push ball_b 5 cm into ball_a.
    sb.x = sa.x + r - 0.05;
    return in;
}

inline Injection inject_bounds()
{
    Injection in{"bounds", build_template(Phenomenon::Collision), {}};
    in.telemetry = quantized(simulate(in.spec));
    Rect box{{1e300, 1e300}, {-1e300, -1e300}};
    for (const auto& s : in.telemetry.samples) {
        for (const auto& q : s) {
            box.min = {std::min(box.min.x, q.x), std::min(box.min.y, q.y)};
            box.max = {std::max(box.max.x, q.x), std::max(box.max.y, q.y)};
        }
    }
    in.spec.world.bounds = Rect{{quantize(box.min.x - 0.1), quantize(box.min.y - 0.1)},
                                {quantize(box.max.x + 0.1), quantize(box.max.y + 0.1)}};
    // Rightmost body at the last step moves 0.5 m further right.
    const std::size_t last = in.telemetry.sample_count() - 1;
    const auto a = index_of(in.telemetry, "ball_a");
    const auto b = index_of(in.telemetry, "ball_b");
    auto& s = in.telemetry.samples[a][last].x > in.telemetry.samples[b][last].x ? in.telemetry.samples[a][last]
                                                                                  : in.telemetry.samples[b][last];
    s.x += 0.5;
    return in;
}

inline Injection inject_divergence()
{
    Injection in{"divergence", build_template(Phenomenon::Gravity), {}};
    in.telemetry = quantized(simulate(in.spec));
    auto& s = in.telemetry.samples[index_of(in.telemetry, "ball")];
    std::size_t apex = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s[k].y > s[apex].y) {
            apex = k;
        }
    }
    // Horizontal motion stops at the apex: the ball drops straight down.
    for (std::size_t k = apex + 1; k < s.size(); ++k) {
        s[k].x = s[apex].x;
    }
    return in;
}

inline std::vector<Injection> injection_corpus()
{
    return {inject_momentum(), inject_energy(), inject_constraint_drift(),
            inject_penetration(), inject_bounds(), inject_divergence()};
}

} // namespace moreforge::inject

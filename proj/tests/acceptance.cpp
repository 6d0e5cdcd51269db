// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "injections.hpp"
#include "moreforge/collision.hpp"
#include "moreforge/engine.hpp"
#include "moreforge/evaluator.hpp"
#include "moreforge/io.hpp"
#include "moreforge/metrics.hpp"
#include "moreforge/parser.hpp"
#include "moreforge/pipeline.hpp"
#include "moreforge/render.hpp"
#include "moreforge/templates.hpp"
#include "oracles.hpp"
#include "param_sampler.hpp"

using namespace moreforge;

namespace {

using Clock = std::chrono::steady_clock;

// Collects failures for one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            failures.push_back(what);
        }
    }
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "moreforge_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

BodySpec ball(const std::string& id, double r, double m, Vec2 pos)
{
    BodySpec b;
    b.id = id;
    b.shape = CircleShape{r};
    b.mass = m;
    b.position = pos;
    return b;
}

RigidBody dynamic_circle(double m, double r, Vec2 pos, Vec2 vel)
{
    RigidBody b;
    b.shape = CircleShape{r};
    b.mass = m;
    b.inv_mass = 1.0 / m;
    b.inertia = moment_of_inertia(b.shape, m);
    b.inv_inertia = 1.0 / b.inertia;
    b.position = pos;
    b.velocity = vel;
    return b;
}

void closed_form(Check& c)
{
    const auto start = Clock::now();
    {
        ScenarioSpec spec;
        spec.phenomenon = Phenomenon::Gravity;
        spec.duration_s = 1.0;
        spec.dt_s = 1.0 / 240.0;
        spec.bodies = {ball("b", 0.1, 1.0, {0, 100})};
        const auto t = simulate(spec);
        const double n = 240;
        const double dt = spec.dt_s;
        const double expected = 9.81 * dt * dt * n * (n + 1) / 2.0;
        const double got = 100.0 - t.samples[0].back().y;
        c.expect(std::abs(got / expected - 1.0) <= 1e-9, "free fall " + fmt(got) + " vs " + fmt(expected));
    }
    {
        const auto spec = build_template(Phenomenon::Gravity);
        const auto t = simulate(spec);
        const auto& s = t.samples[*t.body_index("ball")];
        double top = s[0].y;
        for (const auto& q : s) {
            top = std::max(top, q.y);
        }
        const double vy = spec.bodies[0].velocity.y;
        const double expected = vy * vy / (2.0 * -spec.world.gravity.y);
        c.expect(std::abs((top - s[0].y) / expected - 1.0) <= 0.01, "apex " + fmt(top - s[0].y) + " vs " + fmt(expected));
    }
    {
        auto tp = default_params(Phenomenon::Pendulum);
        tp.values["release_angle"] = 5.0;
        const auto spec = build_template(tp);
        const auto t = simulate(spec);
        const auto& s = t.samples[0];
        double period = 0.0;
        for (std::size_t k = 2; k + 1 < s.size(); ++k) {
            if (s[k].t > 1.0 && s[k].x > s[k - 1].x && s[k].x >= s[k + 1].x) {
                const double y0 = s[k - 1].x, y1 = s[k].x, y2 = s[k + 1].x;
                period = s[k].t + 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2) * spec.dt_s;
                break;
            }
        }
        const double expected = 2.0 * std::numbers::pi * std::sqrt(tp.get("length") / 9.81);
        c.expect(std::abs(period / expected - 1.0) <= 0.01, "pendulum period " + fmt(period) + " vs " + fmt(expected));
    }
    {
        const auto tp = default_params(Phenomenon::Pulley);
        const auto spec = build_template(tp);
        const auto t = simulate(spec);
        const std::size_t k = 120;
        const double m1 = tp.get("mass_a"), m2 = tp.get("mass_b");
        const double expected = 9.81 * std::abs(m1 - m2) / (m1 + m2);
        for (std::size_t b = 0; b < 2; ++b) {
            const auto& s = t.samples[b];
            const double accel = 2.0 * std::abs(s[k].y - s[0].y) / (s[k].t * s[k].t);
            c.expect(std::abs(accel / expected - 1.0) <= 0.02, "atwood " + fmt(accel) + " vs " + fmt(expected));
        }
    }
    {
        auto spec = build_template(Phenomenon::Buoyancy);
        spec.duration_s = 20.0;
        const auto t = simulate(spec);
        const double r = std::get<CircleShape>(spec.bodies[0].shape).radius;
        const double depth = r - (t.samples[0].back().y - spec.fluids[0].rect.max.y);
        c.expect(std::abs(depth / r - 1.0) <= 0.02, "floater depth/r " + fmt(depth / r));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    c.expect(secs < 60.0, "took " + fmt(secs) + " s");
}

void conservation(Check& c)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    double worst_pair = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto a = dynamic_circle(std::abs(u(rng)) + 0.1, 0.2, {0, 0}, {u(rng), u(rng)});
        auto b = dynamic_circle(std::abs(u(rng)) + 0.1, 0.2, {0.35, 0.1}, {u(rng), u(rng)});
        a.angular_velocity = u(rng);
        b.angular_velocity = u(rng);
        ContactManifold m;
        m.normal = normalized(b.position - a.position);
        m.points[0] = {a.position + m.normal * 0.18, -0.01};
        m.count = 1;
        m.restitution = std::abs(u(rng)) / 2;
        m.friction = std::abs(u(rng)) / 2;
        const Vec2 before = a.velocity * a.mass + b.velocity * b.mass;
        resolve_contact(m, a, b);
        const Vec2 after = a.velocity * a.mass + b.velocity * b.mass;
        worst_pair = std::max(worst_pair, (after - before).length());
    }
    c.expect(worst_pair < 1e-9, "pair impulse momentum change " + fmt(worst_pair));

    std::mt19937 srng(11);
    std::uniform_real_distribution<double> v(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ScenarioSpec s;
        s.phenomenon = Phenomenon::Collision;
        s.duration_s = 5.0;
        s.world.ground.push_back({{-50, -0.05}, {0, -0.05}, 0.1});
        s.world.ground.push_back({{0, -0.05}, {50, -0.05}, 0.1});
        for (int i = 0; i < 3; ++i) {
            const double r = 0.1 + 0.2 * v(srng);
            BodySpec b = ball("b" + std::to_string(i), r, 0.5 + 4.0 * v(srng), {-4.0 + 4.0 * i, r});
            b.velocity = {-4.0 + 8.0 * v(srng), 0.0};
            b.restitution = v(srng);
            b.friction = 0.0;
            b.color = default_body_color(static_cast<std::size_t>(i));
            s.bodies.push_back(b);
        }
        const double drift = momentum_drift(s, simulate(s));
        c.expect(drift < 1e-6, "random scene " + std::to_string(trial) + " momentum drift " + fmt(drift));
    }

    for (auto p : kAllPhenomena) {
        const auto spec = build_template(p);
        const bool exempt = !spec.fluids.empty() ||
                            std::any_of(spec.constraints.begin(), spec.constraints.end(),
                                        [](const auto& k) { return std::holds_alternative<SpringSpec>(k); });
        const auto t = simulate(spec);
        if (!exempt) {
            const double gain = max_step_energy_gain(spec, t);
            c.expect(gain <= 1e-6, std::string(to_string(p)) + " energy gain per step " + fmt(gain));
        }
        if (p == Phenomenon::Pendulum) {
            const double drift = constraint_drift(spec, t);
            c.expect(drift <= 1e-3, "pendulum rod drift " + fmt(drift));
        }
    }
}

void metric_oracles(Check& c)
{
    using namespace oracle;
    std::mt19937 rng(1);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    int dtw_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_points(rng, len(rng), 3.0);
        const auto b = random_points(rng, len(rng), 3.0);
        const double fast = dtw_points(a, b).cost;
        dtw_bad += std::abs(fast - brute_dtw(a, b)) <= 1e-12 * std::max(1.0, fast) ? 0 : 1;
    }
    c.expect(dtw_bad == 0, std::to_string(dtw_bad) + " dtw pairs disagree with enumeration");

    std::mt19937 trng(3);
    std::uniform_real_distribution<double> s(0.1, 10.0), ang(-3.14, 3.14), o(-50, 50);
    double worst_inv = 0.0;
    for (int i = 0; i < 500; ++i) {
        const auto a = make(random_points(trng, 2 + i % 9, 2.0));
        const auto b = make(random_points(trng, 2 + i % 5, 2.0));
        const double base = dtw_n(a, b);
        const auto a2 = transformed(a, s(trng), 0.0, {o(trng), o(trng)});
        const auto b2 = transformed(b, s(trng), 0.0, {o(trng), o(trng)});
        worst_inv = std::max(worst_inv, std::abs(dtw_n(a2, b2) - base));
    }
    c.expect(worst_inv <= 1e-12, "dtw_n invariance error " + fmt(worst_inv));

    double worst_proc = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = make(random_points(trng, 3 + i % 20, 2.0));
        const auto b = transformed(a, s(trng), ang(trng), {o(trng), o(trng)}, i % 2 == 1);
        worst_proc = std::max(worst_proc, procrustes(a, b));
    }
    c.expect(worst_proc <= 1e-12, "procrustes under similarity " + fmt(worst_proc));

    Trajectory2D seg;
    seg.points = {{0.0, 0, 0}, {1.0, 2, 0}};
    Trajectory2D ell;
    ell.points = {{0.0, 0, 0}, {0.5, 1, 0}, {1.0, 1, 1}};
    const double got = procrustes(seg, ell, 100);
    const double want = procrustes_oracle(seg, ell, 100);
    c.expect(std::abs(got - want) <= 1e-9, "segment vs right angle " + fmt(got) + " vs " + fmt(want));
}

void self_consistency(Check& c)
{
    const auto start = Clock::now();
    for (auto p : kAllPhenomena) {
        auto spec = build_template(p);
        spec.render.width = 800;
        spec.render.height = 600;
        spec.render.fps = 60.0;
        spec.duration_s = 5.0;
        const auto t = quantized(simulate(spec));
        // Template framing covers the template's own duration; reframe on the 5 s path.
        const Scene scene = compile(spec);
        Rect swept{{1e300, 1e300}, {-1e300, -1e300}};
        for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
            if (spec.bodies[b].is_static) {
                continue;
            }
            const double r = collider_of(scene.bodies[b]).bounding_radius();
            for (const auto& q : t.samples[b]) {
                swept.min = {std::min(swept.min.x, q.x - r), std::min(swept.min.y, q.y - r)};
                swept.max = {std::max(swept.max.x, q.x + r), std::max(swept.max.y, q.y + r)};
            }
        }
        fit_camera(spec, swept);
        const auto tracks = track_centroids(spec, t);
        const auto key = key_object(spec, t);
        std::size_t idx = 0;
        while (spec.bodies[idx].id != key) {
            ++idx;
        }
        const auto row = evaluate_pair(spec, t, tracks[idx], key);
        c.expect(row.dtw_n <= 0.005 && row.procrustes <= 0.001,
                 std::string(to_string(p)) + " " + key + " dtw_n " + fmt(row.dtw_n) + " procrustes " + fmt(row.procrustes));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    c.expect(secs < 300.0, "took " + fmt(secs) + " s");
}

std::map<std::string, std::string> frame_hashes(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        out[e.path().filename().string()] = sha256_hex(read_file(e.path()));
    }
    return out;
}

void determinism(Check& c)
{
    const std::vector<std::string> prompts = {
        "a ball is launched at 45\xC2\xB0 with velocity 10 m/s",
        "a Newton's cradle with five balls; the first two balls are pulled back",
    };
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        std::vector<fs::path> dirs;
        for (const char* run : {"a", "b"}) {
            PipelineOptions o;
            o.prompt = prompts[i];
            o.out = scratch("det_" + std::to_string(i) + run);
            run_pipeline(o);
            dirs.push_back(o.out);
        }
        for (auto f : {bundle::kTelemetry, bundle::kMetrics}) {
            c.expect(read_file(dirs[0] / f) == read_file(dirs[1] / f), prompts[i] + ": " + std::string(f) + " differs");
        }
        const auto fa = frame_hashes(dirs[0] / bundle::kFrames);
        c.expect(!fa.empty() && fa == frame_hashes(dirs[1] / bundle::kFrames), prompts[i] + ": frames differ");
    }
}

void rule_isolation(Check& c)
{
    for (const auto& in : inject::injection_corpus()) {
        const auto failing = evaluate(in.spec, in.telemetry).failing_checks();
        std::string got;
        for (const auto& f : failing) {
            got += (got.empty() ? "" : ",") + f;
        }
        c.expect(failing == std::vector<std::string>{in.rule}, "injected " + in.rule + " fired [" + got + "]");
    }
    for (auto p : kAllPhenomena) {
        const auto spec = build_template(p);
        const auto report = evaluate(spec, quantized(simulate(spec)));
        c.expect(report.failing_checks().empty(), std::string(to_string(p)) + " clean run fails a check");
    }
}

void refinement(Check& c)
{
    auto spec = build_template(Phenomenon::Gravity);
    spec.duration_s = 0.1;
    const auto dir = scratch("refine");
    const auto spec_path = dir / "short_projectile.json";
    write_file(spec_path, canonical_dump(spec_to_json(spec)) + "\n");
    PipelineOptions o;
    o.spec_path = spec_path;
    o.out = dir / "bundle";
    o.iterations = kMaxIterations;
    const auto r = run_pipeline(o);
    c.expect(r.refinements >= 1, "initial spec did not fail");
    c.expect(r.passed && r.refinements <= kMaxIterations,
             "not fixed within " + std::to_string(kMaxIterations) + " rounds (" + std::to_string(r.refinements) + ")");
}

void parser_corpus(Check& c)
{
    std::mt19937_64 rng(20261015);
    int total = 0;
    int ok = 0;
    std::string first_bad;
    for (const auto& t : prompt_templates()) {
        for (int trial = 0; trial <= 25; ++trial) {
            TemplateParams params = trial == 0 ? default_params(t.phenomenon) : sampler::random_params(t.phenomenon, rng);
            for (const auto& [name, value] : t.fixed) {
                params.values[name] = value;
            }
            const std::string prompt = verbalize(t, params);
            ++total;
            try {
                const auto r = parse_prompt(prompt);
                bool good = r.trace.phenomenon == t.phenomenon && validate_spec(r.spec).ok();
                for (const auto& name : t.verbalized) {
                    const double want = params.get(name);
                    good = good && std::abs(r.trace.params.get(name) - want) <= 1e-7 * std::max(1.0, std::abs(want));
                }
                ok += good ? 1 : 0;
                if (!good && first_bad.empty()) {
                    first_bad = prompt;
                }
            } catch (const Error& e) {
                if (first_bad.empty()) {
                    first_bad = prompt + " (" + e.what() + ")";
                }
            }
        }
    }
    c.expect(ok == total, std::to_string(ok) + "/" + std::to_string(total) + " prompts, first miss: " + first_bad);

    const auto r = parse_prompt("a ball is launched at 45\xC2\xB0 with velocity 10 m/s");
    const Vec2 v = r.spec.bodies.at(0).velocity;
    c.expect(std::abs(v.x - 7.0710678) <= 1e-6 && std::abs(v.y - 7.0710678) <= 1e-6,
             "45 degree launch velocity " + fmt(v.x) + "," + fmt(v.y));
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"closed-form mechanics", closed_form},
        {"conservation", conservation},
        {"metric oracles", metric_oracles},
        {"render self-consistency", self_consistency},
        {"determinism", determinism},
        {"rule isolation", rule_isolation},
        {"refinement loop", refinement},
        {"parser corpus", parser_corpus},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        const auto start = Clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const bool pass = c.failures.empty();
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << " (" << fmt(secs) << " s)";
        for (const auto& f : c.failures) {
            std::cout << "\n    " << f;
        }
        std::cout << std::endl;
    }
    fs::remove_all(fs::temp_directory_path() / "moreforge_acceptance");
    return failed == 0 ? 0 : 1;
}

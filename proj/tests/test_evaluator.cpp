#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <random>
#include <thread>

#include "injections.hpp"
#include "moreforge/evaluator.hpp"
#include "moreforge/templates.hpp"

using namespace moreforge;

namespace {

const CheckRow* find_row(const std::vector<CheckRow>& rows, std::string_view name)
{
    for (const auto& r : rows) {
        if (r.name == name) {
            return &r;
        }
    }
    return nullptr;
}

ScenarioSpec short_projectile()
{
    auto spec = build_template(Phenomenon::Gravity);
    spec.duration_s = 0.1;
    return spec;
}

FeedbackReport evaluate_spec(const ScenarioSpec& spec) { return evaluate(spec, quantized(simulate(spec))); }

} // namespace

TEST(Physics, TemplatesPassEveryCheck)
{
    for (auto p : kAllPhenomena) {
        const auto spec = build_template(p);
        const auto report = evaluate_spec(spec);
        EXPECT_TRUE(report.overall) << to_string(p) << ": " << report.summary_lines.front();
        EXPECT_EQ(report.summary_lines, std::vector<std::string>{"all checks passed"});
    }
}

TEST(Physics, FrictionlessCollisionConservesMomentum)
{
    const auto spec = build_template(Phenomenon::Collision);
    const auto rows = check_physics(spec, simulate(spec));
    const auto* m = find_row(rows, "momentum");
    ASSERT_NE(m, nullptr);
    EXPECT_EQ(m->status, CheckStatus::Pass);
    EXPECT_LT(m->measured, 1e-4);
}

TEST(Physics, RandomFrictionlessSceneMomentumDrift)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ScenarioSpec s;
        s.phenomenon = Phenomenon::Collision;
        s.world.ground.push_back({{-50, -0.05}, {0, -0.05}, 0.1});
        s.world.ground.push_back({{0, -0.05}, {50, -0.05}, 0.1});
        for (int i = 0; i < 3; ++i) {
            BodySpec b;
            b.id = "b" + std::to_string(i);
            const double r = 0.1 + 0.2 * u(rng);
            b.shape = CircleShape{r};
            b.mass = 0.5 + 4.0 * u(rng);
            b.position = {-4.0 + 4.0 * i, r};
            b.velocity = {-4.0 + 8.0 * u(rng), 0.0};
            b.restitution = u(rng);
            b.friction = 0.0;
            b.color = default_body_color(static_cast<std::size_t>(i));
            s.bodies.push_back(b);
        }
        const auto v = validate_spec(s);
        ASSERT_TRUE(v.ok()) << v.violations.front().to_string();
        EXPECT_LT(momentum_drift(s, simulate(s)), 1e-6) << "trial " << trial;
    }
}

TEST(Physics, EnergyNeverGrowsPerStep)
{
    for (auto p : kAllPhenomena) {
        const auto spec = build_template(p);
        if (!spec.fluids.empty() || std::any_of(spec.constraints.begin(), spec.constraints.end(), [](const auto& c) {
                return std::holds_alternative<SpringSpec>(c);
            })) {
            continue;
        }
        EXPECT_LE(max_step_energy_gain(spec, simulate(spec)), 1e-6) << to_string(p);
    }
}

TEST(Physics, PendulumRodDrift)
{
    const auto spec = build_template(Phenomenon::Pendulum);
    const auto rows = check_physics(spec, simulate(spec));
    const auto* d = find_row(rows, "constraint_drift");
    ASSERT_NE(d, nullptr);
    EXPECT_EQ(d->status, CheckStatus::Pass);
    EXPECT_LE(d->measured, 1e-3);
    EXPECT_EQ(d->threshold, 1e-3);
}

TEST(Physics, ExemptionsAreSkipped)
{
    const auto spring = build_template(Phenomenon::Oscillation);
    EXPECT_EQ(find_row(check_physics(spring, simulate(spring)), "energy")->status, CheckStatus::Skipped);
    const auto fluid = build_template(Phenomenon::Buoyancy);
    EXPECT_EQ(find_row(check_physics(fluid, simulate(fluid)), "energy")->status, CheckStatus::Skipped);
}

TEST(Physics, TeleportIsCaught)
{
    const auto spec = build_template(Phenomenon::Gravity);
    auto t = quantized(simulate(spec));
    t.samples[0][100].y += 1.0;
    const auto rows = check_physics(spec, t);
    EXPECT_TRUE(find_row(rows, "energy")->failed() || find_row(rows, "divergence")->failed());
}

TEST(Physics, RuleIsolation)
{
    for (const auto& in : inject::injection_corpus()) {
        const auto report = evaluate(in.spec, in.telemetry);
        EXPECT_EQ(report.failing_checks(), std::vector<std::string>{in.rule}) << in.rule;
    }
}

TEST(Physics, NonPositiveThresholdRejected)
{
    RuleSet r;
    r.energy_tol = 0.0;
    const auto spec = build_template(Phenomenon::Gravity);
    EXPECT_THROW(check_physics(spec, simulate(spec), r), Error);
}

TEST(Intent, CradleBodyCount)
{
    const auto spec = build_template(Phenomenon::Momentum);
    const auto rows = check_intent(spec, simulate(spec));
    const auto* c = find_row(rows, "body_count");
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->status, CheckStatus::Pass);
    EXPECT_EQ(c->measured, 5.0);
    EXPECT_EQ(find_row(rows, "cradle_transfer")->status, CheckStatus::Pass);
}

TEST(Intent, MissingBodyFailsCount)
{
    const auto spec = build_template(Phenomenon::Collision);
    auto t = simulate(spec);
    t.body_ids.pop_back();
    t.samples.pop_back();
    const auto rows = check_intent(spec, t);
    EXPECT_TRUE(find_row(rows, "body_count")->failed());
}

TEST(Intent, ApexNotReached)
{
    const auto spec = short_projectile();
    const auto rows = check_intent(spec, simulate(spec));
    const auto* a = find_row(rows, "apex_reached");
    ASSERT_NE(a, nullptr);
    EXPECT_TRUE(a->failed());
    EXPECT_EQ(a->detail, "apex not reached");
}

TEST(Intent, SinkingFloater)
{
    auto spec = build_template(Phenomenon::Buoyancy);
    ASSERT_NE(spec.label.find("floats"), std::string::npos);
    spec.bodies[0].mass.reset();
    spec.bodies[0].density = 2.0 * spec.fluids[0].density;
    const auto rows = check_intent(spec, simulate(spec));
    EXPECT_TRUE(find_row(rows, "floats")->failed());
}

TEST(Feedback, AllPassSummary)
{
    const auto r = synthesize_feedback({}, {{"momentum", CheckStatus::Pass, 0.0, 1e-4, -1, ""}}, {});
    EXPECT_TRUE(r.overall);
    EXPECT_EQ(r.summary_lines, std::vector<std::string>{"all checks passed"});
}

TEST(Feedback, MomentumFailureLine)
{
    const auto r = synthesize_feedback(
        {}, {{"momentum", CheckStatus::Fail, 0.25, 1e-4, 42, ""}, {"energy", CheckStatus::Pass, 0.0, 1e-4, -1, ""}},
        {});
    EXPECT_FALSE(r.overall);
    ASSERT_EQ(r.summary_lines.size(), 1u);
    EXPECT_EQ(r.summary_lines[0], "physics: momentum failed: measured 0.25, threshold 0.0001, worst at step 42");
}

TEST(Feedback, OverallIsConjunction)
{
    const auto r = synthesize_feedback({{"ball", 0.2, 0.1, 10, false}}, {}, {});
    EXPECT_FALSE(r.overall);
    const auto i = synthesize_feedback({}, {}, {{"swings", CheckStatus::Fail, 0, 1, -1, ""}});
    EXPECT_FALSE(i.overall);
    const auto s = synthesize_feedback({}, {{"energy", CheckStatus::Skipped, 0, 1e-4, -1, "spring scene"}}, {});
    EXPECT_TRUE(s.overall);
}

TEST(Feedback, ByteStableAndRoundTrips)
{
    const auto spec = build_template(Phenomenon::Pulley);
    const auto t = quantized(simulate(spec));
    const auto a = canonical_dump(feedback_to_json(evaluate(spec, t)));
    const auto b = canonical_dump(feedback_to_json(evaluate(spec, t)));
    EXPECT_EQ(a, b);
    const auto back = feedback_from_json(Json::parse(a));
    EXPECT_EQ(canonical_dump(feedback_to_json(back)), a);
}

TEST(Refine, PassingReportIsFixedPoint)
{
    const auto spec = build_template(Phenomenon::Gravity);
    const auto report = evaluate_spec(spec);
    ASSERT_TRUE(report.overall);
    EXPECT_EQ(refine(spec, report), spec);
    EXPECT_EQ(refine(refine(spec, report), report), spec);
}

TEST(Refine, ApexDoublesDuration)
{
    const auto spec = short_projectile();
    const auto next = refine(spec, evaluate_spec(spec));
    EXPECT_DOUBLE_EQ(next.duration_s, 0.2);
}

TEST(Refine, DurationBoundedByStepLimit)
{
    auto spec = short_projectile();
    spec.dt_s = 1e-4;
    spec.render.fps = 50.0;
    spec.duration_s = 80.0;
    FeedbackReport r = synthesize_feedback({}, {}, {{"apex_reached", CheckStatus::Fail, 0, 1, -1, "apex not reached"}});
    const auto next = refine(spec, r);
    EXPECT_LE(next.duration_s / next.dt_s, limits::kMaxSteps * (1 + 1e-9));
}

TEST(Refine, DivergenceRestoresDefaultDt)
{
    auto spec = build_template(Phenomenon::Pendulum);
    spec.dt_s = quantize(1.0 / 60.0);
    FeedbackReport r = synthesize_feedback({}, {{"divergence", CheckStatus::Fail, 1, 0.05, -1, ""}}, {});
    EXPECT_DOUBLE_EQ(refine(spec, r).dt_s, quantize(defaults::kDt));
}

TEST(Refine, ApexLoopConvergesWithinCap)
{
    auto spec = short_projectile();
    auto report = evaluate_spec(spec);
    int rounds = 0;
    while (!report.overall && rounds < kMaxIterations) {
        spec = refine(spec, report);
        report = evaluate_spec(spec);
        ++rounds;
    }
    EXPECT_TRUE(report.overall);
    EXPECT_EQ(rounds, 3);
    EXPECT_DOUBLE_EQ(spec.duration_s, 0.8);
}

TEST(Refine, BadHookResponseFailsValidation)
{
    const auto spec = short_projectile();
    auto hook = [](const ScenarioSpec& s, const FeedbackReport&) {
        auto out = s;
        out.bodies[0].restitution = 1.5;
        return out;
    };
    try {
        refine(spec, evaluate_spec(spec), hook);
        FAIL() << "expected ValidationFailed";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ValidationFailed);
    }
}

TEST(Refine, UnchangedSpecIsNoProgress)
{
    const auto spec = short_projectile();
    auto identity = [](const ScenarioSpec& s, const FeedbackReport&) { return s; };
    try {
        refine(spec, evaluate_spec(spec), identity);
        FAIL() << "expected NoProgress";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoProgress);
    }
}

TEST(Refine, HttpHook)
{
    httplib::Server server;
    std::string received;
    server.Post("/refine", [&](const httplib::Request& req, httplib::Response& res) {
        received = req.body;
        const auto doc = Json::parse(req.body);
        auto spec = spec_from_json(doc.at("spec"));
        spec.duration_s = 1.5;
        res.set_content(serialize_spec(spec), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto spec = short_projectile();
    const auto report = evaluate_spec(spec);
    const auto next = refine(spec, report, http_refinement("http://127.0.0.1:" + std::to_string(port) + "/refine"));
    server.stop();
    th.join();

    EXPECT_DOUBLE_EQ(next.duration_s, 1.5);
    const auto sent = Json::parse(received);
    EXPECT_TRUE(sent.contains("spec"));
    EXPECT_EQ(sent.at("report").at("overall"), "fail");
}

TEST(Refine, UnreachableHookIsTransportError)
{
    const auto spec = short_projectile();
    try {
        refine(spec, evaluate_spec(spec), http_refinement("http://127.0.0.1:1/refine"));
        FAIL() << "expected Transport";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Transport);
    }
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "moreforge/engine.hpp"
#include "moreforge/metrics.hpp"
#include "moreforge/render.hpp"
#include "moreforge/templates.hpp"
#include "oracles.hpp"

using namespace moreforge;

using namespace moreforge::oracle;

TEST(Dtw, Examples)
{
    const auto a = make({{0, 0}, {1, 0}});
    EXPECT_EQ(dtw(a, a), 0.0);
    EXPECT_EQ(dtw(a, make({{0, 0}, {0, 0}, {1, 0}})), 0.0);
    EXPECT_DOUBLE_EQ(dtw(make({{0, 0}, {0, 0}}), make({{3, 4}, {3, 4}})), 10.0);
    EXPECT_EQ(dtw_points({{0, 0}, {0, 0}}, {{3, 4}, {3, 4}}).path_length, 2u);
}

TEST(Dtw, MatchesExhaustiveEnumeration)
{
    std::mt19937 rng(1);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    std::vector<std::vector<Vec2>> corpus;
    for (int i = 0; i < 1000; ++i) {
        corpus.push_back(random_points(rng, len(rng), 3.0));
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& a = corpus[i];
        const auto& b = corpus[(i * 7 + 3) % corpus.size()];
        const double fast = dtw_points(a, b).cost;
        EXPECT_NEAR(fast, brute_dtw(a, b), 1e-12 * std::max(1.0, fast));
        EXPECT_NEAR(fast, dtw_points(b, a).cost, 1e-12 * std::max(1.0, fast));
        EXPECT_EQ(dtw_points(a, a).cost, 0.0);
    }
}

TEST(Dtw, SpaceMismatch)
{
    const auto a = make({{0, 0}, {1, 0}});
    const auto b = make({{0, 0}, {1, 0}}, Space::Pixel);
    try {
        dtw(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SpaceMismatch);
    }
}

TEST(Normalize, SquareAndIdempotence)
{
    const auto n = normalize_traj(make({{0, 0}, {2, 0}, {2, 2}, {0, 2}}));
    EXPECT_EQ(n.space, Space::Normalized);
    const std::vector<TrajPoint> expect = {{0, 0, 0}, {1, 1, 0}, {2, 1, 1}, {3, 0, 1}};
    EXPECT_EQ(n.points, expect);
    std::mt19937 rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto a = make(random_points(rng, 8, 5.0));
        const auto na = normalize_traj(a);
        const auto nna = normalize_traj(na);
        for (std::size_t k = 0; k < na.points.size(); ++k) {
            EXPECT_NEAR(na.points[k].x, nna.points[k].x, 1e-15);
            EXPECT_NEAR(na.points[k].y, nna.points[k].y, 1e-15);
            EXPECT_GE(na.points[k].x, 0.0);
            EXPECT_LE(na.points[k].y, 1.0);
        }
        const auto moved = normalize_traj(transformed(a, 3.5, 0.0, {7, -2}));
        for (std::size_t k = 0; k < na.points.size(); ++k) {
            EXPECT_NEAR(na.points[k].x, moved.points[k].x, 1e-12);
            EXPECT_NEAR(na.points[k].y, moved.points[k].y, 1e-12);
        }
    }
    EXPECT_THROW(normalize_traj(make({{1, 1}, {1, 1}})), Error);
}

TEST(DtwN, ScaleTranslationInvariance)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> s(0.1, 10.0), o(-50, 50);
    for (int i = 0; i < 500; ++i) {
        const auto a = make(random_points(rng, 2 + i % 9, 2.0));
        const auto b = make(random_points(rng, 2 + i % 5, 2.0));
        const double base = dtw_n(a, b);
        const auto a2 = transformed(a, s(rng), 0.0, {o(rng), o(rng)});
        const auto b2 = transformed(b, s(rng), 0.0, {o(rng), o(rng)});
        EXPECT_NEAR(dtw_n(a2, b2), base, 1e-12);
        EXPECT_NEAR(dtw_n(a, transformed(a, s(rng), 0.0, {o(rng), o(rng)})), 0.0, 1e-12);
        EXPECT_NEAR(dtw_n(a, b), dtw_n(b, a), 1e-15);
    }
}

TEST(DtwN, DoubledSampleRate)
{
    const std::vector<Vec2> l = {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}, {1, 0.25}, {1, 0.5}, {1, 0.75}, {1, 1}};
    std::vector<Vec2> doubled;
    for (const auto& p : l) {
        doubled.push_back(p);
        doubled.push_back(p);
    }
    const double v = dtw_n(make(l), make(doubled));
    EXPECT_LT(v, 1e-9);
    EXPECT_NEAR(v, brute_dtw(l, doubled), 1e-12);
}

TEST(Procrustes, SimilarityInvariance)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> s(0.1, 10.0), ang(-3.14, 3.14), o(-50, 50);
    for (int i = 0; i < 1000; ++i) {
        const auto a = make(random_points(rng, 3 + i % 20, 2.0));
        const auto b = transformed(a, s(rng), ang(rng), {o(rng), o(rng)}, i % 2 == 1);
        EXPECT_LE(procrustes(a, b), 1e-12);
        const auto c = make(random_points(rng, 3 + i % 20, 2.0));
        const double ac = procrustes(a, c);
        EXPECT_NEAR(ac, procrustes(c, a), 1e-12);
        EXPECT_LE(ac, 2.0);
        EXPECT_GE(ac, 0.0);
    }
}

TEST(Procrustes, MirrorScoresZero)
{
    const auto a = make({{0, 0}, {1, 0.2}, {2, 1}, {2.5, 3}});
    EXPECT_LE(procrustes(a, transformed(a, 1.0, 0.0, {}, true)), 1e-12);
}

TEST(Procrustes, SegmentVersusRightAngleGolden)
{
    Trajectory2D seg;
    seg.points = {{0.0, 0, 0}, {1.0, 2, 0}};
    Trajectory2D ell;
    ell.points = {{0.0, 0, 0}, {0.5, 1, 0}, {1.0, 1, 1}};
    const double oracle = procrustes_oracle(seg, ell, 100);
    EXPECT_NEAR(procrustes(seg, ell, 100), oracle, 1e-9);
    // Pinned from the closed-form oracle.
    EXPECT_NEAR(oracle, 0.211091944586051, 1e-12);
}

TEST(Procrustes, Degenerate)
{
    EXPECT_THROW(procrustes(make({{1, 1}, {1, 1}, {1, 1}}), make({{0, 0}, {1, 0}})), Error);
}

TEST(EvaluatePair, IdentityAndJitter)
{
    const auto spec = build_template(Phenomenon::Pendulum);
    const auto t = simulate(spec);
    const auto gt = ground_truth(spec, t, 0, Space::Pixel);
    ASSERT_EQ(gt.points.size(), 301u);
    const auto row = evaluate_pair(spec, t, gt);
    EXPECT_EQ(row.object, "bob");
    EXPECT_EQ(row.dtw, 0.0);
    EXPECT_EQ(row.dtw_n, 0.0);
    EXPECT_LE(row.procrustes, 1e-12);

    std::mt19937 rng(8);
    std::uniform_real_distribution<double> j(-0.5, 0.5);
    auto est = gt;
    for (auto& p : est.points) {
        p.x += j(rng);
        p.y += j(rng);
    }
    ASSERT_EQ(spec.render.height, 600);
    EXPECT_LE(evaluate_pair(spec, t, est).dtw_n, 0.002);
}

TEST(EvaluatePair, KeyObjectOnCradle)
{
    const auto spec = build_template(Phenomenon::Momentum);
    const auto t = simulate(spec);
    const auto key = key_object(spec, t);
    EXPECT_TRUE(key == "ball_0" || key == "ball_4") << key;
    // Oracle: path length of every ball from telemetry.
    std::vector<double> path(t.body_ids.size());
    for (std::size_t b = 0; b < path.size(); ++b) {
        for (std::size_t k = 1; k < t.sample_count(); ++k) {
            path[b] += std::hypot(t.samples[b][k].x - t.samples[b][k - 1].x, t.samples[b][k].y - t.samples[b][k - 1].y);
        }
    }
    const auto best = std::max_element(path.begin(), path.end()) - path.begin();
    EXPECT_EQ(key, t.body_ids[static_cast<std::size_t>(best)]);
    for (std::size_t mid = 1; mid + 1 < path.size(); ++mid) {
        EXPECT_LT(path[mid], path[static_cast<std::size_t>(best)]);
    }
}

TEST(EvaluatePair, MissingObjectAndStaticFallback)
{
    const auto spec = build_template(Phenomenon::Pendulum);
    const auto t = simulate(spec);
    try {
        evaluate_pair(spec, t, ground_truth(spec, t, 0, Space::Pixel), std::string("ghost"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingObject);
    }
    Trajectory2D still;
    still.points = {{0, 1, 1}, {1, 1, 1}, {2, 1, 1}};
    auto row = evaluate_pair(still, still);
    EXPECT_EQ(row.dtw_n, 0.0);
    EXPECT_EQ(row.procrustes, 0.0);
    Trajectory2D moving;
    moving.points = {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}};
    row = evaluate_pair(still, moving);
    EXPECT_GT(row.dtw_n, 0.0);
    EXPECT_LE(row.procrustes, 2.0);
}

TEST(Aggregate, Statistics)
{
    MetricRow r;
    r.phenomenon = "gravity";
    auto one = aggregate({r});
    EXPECT_EQ(one.overall.dtw.std, 0.0);
    MetricRow a = r, b = r;
    a.entry = "a";
    b.entry = "b";
    a.dtw = 0.0;
    b.dtw = 2.0;
    const auto two = aggregate({a, b});
    EXPECT_DOUBLE_EQ(two.overall.dtw.mean, 1.0);
    EXPECT_DOUBLE_EQ(two.overall.dtw.std, std::sqrt(2.0));
    EXPECT_EQ(aggregate({b, a}), two);
    EXPECT_THROW(aggregate({}), Error);
}

TEST(Aggregate, PermutationInvarianceAndJson)
{
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<MetricRow> rows;
    for (int i = 0; i < 30; ++i) {
        rows.push_back({"e" + std::to_string(i), std::string(to_string(kAllPhenomena[static_cast<std::size_t>(i % 9)])),
                        "obj", u(rng), u(rng), u(rng)});
    }
    const auto base = aggregate(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    EXPECT_EQ(aggregate(rows), base);
    EXPECT_EQ(base.classes.size(), 9u);
    const auto text = canonical_dump(report_to_json(base));
    EXPECT_EQ(canonical_dump(report_to_json(report_from_json(Json::parse(text)))), text);
    EXPECT_NE(report_table(base).find("overall"), std::string::npos);
    EXPECT_NE(report_markdown(base).find("| overall |"), std::string::npos);
}

TEST(TrajectoryCsv, RoundTrip)
{
    Trajectory2D t;
    t.space = Space::Pixel;
    t.frame_size = FrameSize{800, 600};
    t.points = {{0, 1.5, 2.5}, {0.5, 3, 4}};
    const auto csv = trajectory_to_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "# space: pixel 800x600");
    EXPECT_EQ(trajectory_from_csv(csv), t);
    EXPECT_THROW(trajectory_from_csv("t,x,y\n1,2\n"), Error);
}

#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "moreforge/parser.hpp"
#include "param_sampler.hpp"

using namespace moreforge;
using moreforge::sampler::random_params;

namespace {

ErrorKind kind_of(std::string_view prompt)
{
    try {
        parse_prompt(prompt);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for: " << prompt;
    return ErrorKind::Usage;
}

const BodySpec& body(const ScenarioSpec& spec, std::string_view id)
{
    for (const auto& b : spec.bodies) {
        if (b.id == id) {
            return b;
        }
    }
    throw std::runtime_error("no body " + std::string(id));
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-7 * std::max(1.0, std::abs(b)); }

} // namespace

TEST(Classify, EachClassHasACue)
{
    const std::vector<std::pair<std::string, Phenomenon>> cases = {
        {"a ball is thrown", Phenomenon::Gravity},         {"a block on a ramp", Phenomenon::Acceleration},
        {"two carts collide", Phenomenon::Collision},     {"a mass on a spring", Phenomenon::Oscillation},
        {"a Newton's cradle", Phenomenon::Momentum},       {"a cork floats", Phenomenon::Buoyancy},
        {"a puck coasts on ice", Phenomenon::Inertia},     {"a pendulum", Phenomenon::Pendulum},
        {"an Atwood machine", Phenomenon::Pulley},
    };
    for (const auto& [prompt, expected] : cases) {
        EXPECT_EQ(classify_phenomenon(prompt).phenomenon, expected) << prompt;
    }
}

TEST(Classify, ConfidenceIsWinningShare)
{
    const auto c = classify_phenomenon("a Newton's cradle where balls swing");
    EXPECT_EQ(c.phenomenon, Phenomenon::Momentum);
    EXPECT_DOUBLE_EQ(c.confidence, 3.0 / 4.0);
}

TEST(Classify, NoCueIsUnclassifiable)
{
    EXPECT_EQ(kind_of("stock market"), ErrorKind::Unclassifiable);
}

TEST(Classify, EmptyAndOversizedPromptsAreSyntaxErrors)
{
    EXPECT_EQ(kind_of("   "), ErrorKind::Syntax);
    EXPECT_EQ(kind_of(std::string(kMaxPromptLength + 1, 'a')), ErrorKind::Syntax);
}

TEST(Parse, LaunchAngleAndSpeed)
{
    const auto r = parse_prompt("a ball is launched at 45\xC2\xB0 with velocity 10 m/s");
    EXPECT_EQ(r.trace.phenomenon, Phenomenon::Gravity);
    const auto& v = body(r.spec, "ball").velocity;
    EXPECT_NEAR(v.x, 7.0710678, 1e-6);
    EXPECT_NEAR(v.y, 7.0710678, 1e-6);
}

TEST(Parse, CradleFirstTwoBallsDisplaced)
{
    const auto r = parse_prompt("a Newton's cradle with five balls; the first two balls are pulled back");
    EXPECT_EQ(r.trace.params.get("ball_count"), 5.0);
    EXPECT_EQ(r.trace.params.get("pulled_count"), 2.0);
    EXPECT_EQ(r.trace.params.get("pulled_from_right"), 0.0);
    const double rest_y = body(r.spec, "ball_2").position.y;
    EXPECT_GT(body(r.spec, "ball_0").position.y, rest_y + 1e-6);
    EXPECT_GT(body(r.spec, "ball_1").position.y, rest_y + 1e-6);
    EXPECT_NEAR(body(r.spec, "ball_3").position.y, rest_y, 1e-12);
    EXPECT_NEAR(body(r.spec, "ball_4").position.y, rest_y, 1e-12);
}

TEST(Parse, LastBallComesFromTheRight)
{
    const auto r = parse_prompt("a Newton's cradle with 4 balls; the last ball is pulled back");
    EXPECT_EQ(r.trace.params.get("pulled_from_right"), 1.0);
    const double rest_y = body(r.spec, "ball_0").position.y;
    EXPECT_GT(body(r.spec, "ball_3").position.y, rest_y + 1e-6);
}

TEST(Parse, PushedFromTheRight)
{
    const auto r = parse_prompt("a block is pushed from the right at 2 m/s");
    EXPECT_EQ(r.trace.phenomenon, Phenomenon::Inertia);
    const auto& v = r.spec.bodies.back().velocity;
    EXPECT_DOUBLE_EQ(v.x, -2.0);
    EXPECT_DOUBLE_EQ(v.y, 0.0);
}

TEST(Parse, UnitsConvertToSi)
{
    const auto r = parse_prompt("a 500 g ball is thrown at 36 km/h at 0.5 rad from 150 cm above the ground");
    EXPECT_DOUBLE_EQ(r.trace.params.get("mass"), 0.5);
    EXPECT_DOUBLE_EQ(r.trace.params.get("launch_speed"), 10.0);
    EXPECT_NEAR(r.trace.params.get("launch_angle"), 0.5 * 180.0 / M_PI, 1e-12);
    EXPECT_DOUBLE_EQ(r.trace.params.get("launch_height"), 1.5);
}

TEST(Parse, UnknownUnitIsSyntaxError)
{
    EXPECT_EQ(kind_of("a ball is thrown at 30 mph"), ErrorKind::Syntax);
    EXPECT_EQ(kind_of("a ball is dropped from 10 ft"), ErrorKind::Syntax);
    EXPECT_EQ(kind_of("a spring with stiffness 40 N/m"), ErrorKind::Syntax);
}

TEST(Parse, ConflictingValuesAreContradictions)
{
    EXPECT_EQ(kind_of("a Newton's cradle with 5 balls where both balls swing"), ErrorKind::Contradiction);
    EXPECT_EQ(kind_of("three balls collide head-on"), ErrorKind::Contradiction);
    EXPECT_EQ(kind_of("a ball is dropped horizontally straight up"), ErrorKind::Contradiction);
    EXPECT_EQ(kind_of("a ball sinks in water"), ErrorKind::Contradiction);
}

TEST(Parse, OutOfRangeValueIsSchemaError)
{
    EXPECT_EQ(kind_of("a ball is launched at 45\xC2\xB0 with velocity 80 m/s"), ErrorKind::Schema);
    EXPECT_EQ(kind_of("a Newton's cradle with 3 balls; the first three balls are pulled back"), ErrorKind::Schema);
}

TEST(Parse, InferredAndBoundPartitionTheSchema)
{
    for (const auto& prompt : {"a block slides down a 30\xC2\xB0 incline", "two balls collide head-on at 1 m/s and 2 m/s",
                               "a pendulum"}) {
        const auto r = parse_prompt(prompt);
        std::set<std::string> seen;
        for (const auto& name : r.trace.bound_params) {
            EXPECT_TRUE(seen.insert("params." + name).second);
        }
        for (const auto& f : r.trace.inferred_fields) {
            EXPECT_TRUE(seen.insert(f.path).second) << f.path;
            EXPECT_NE(f.source.find("class default"), std::string::npos);
        }
        EXPECT_EQ(seen.size(), template_param_schema(r.trace.phenomenon).size()) << prompt;
    }
}

TEST(Parse, RulesAreSortedAndDisjoint)
{
    const auto r = parse_prompt("a 2 kg ball moving at 3 m/s hits a 1 kg ball moving at 1 m/s elastically");
    const std::string prompt = "a 2 kg ball moving at 3 m/s hits a 1 kg ball moving at 1 m/s elastically";
    ASSERT_FALSE(r.trace.matched_rules.empty());
    for (std::size_t i = 1; i < r.trace.matched_rules.size(); ++i) {
        EXPECT_LE(r.trace.matched_rules[i - 1].span.end, r.trace.matched_rules[i].span.begin);
    }
    for (const auto& m : r.trace.matched_rules) {
        EXPECT_LE(m.span.end, prompt.size());
    }
    EXPECT_DOUBLE_EQ(r.trace.params.get("mass_a"), 2.0);
    EXPECT_DOUBLE_EQ(r.trace.params.get("mass_b"), 1.0);
    EXPECT_DOUBLE_EQ(r.trace.params.get("speed_b"), 1.0);
    EXPECT_DOUBLE_EQ(r.trace.params.get("restitution"), 1.0);
}

TEST(Parse, StrayQuantityIsUnresolved)
{
    const auto r = parse_prompt("a pendulum released from 20\xC2\xB0 pulled by a 3 N force");
    ASSERT_EQ(r.trace.unresolved.size(), 1u);
    const Span s = r.trace.unresolved[0];
    EXPECT_EQ(std::string("a pendulum released from 20\xC2\xB0 pulled by a 3 N force").substr(s.begin, s.end - s.begin),
              "3 N");
}

TEST(Parse, IsDeterministic)
{
    const std::string prompt = "two balls of radius 0.2 m, 3 m apart, collide elastically at 2 m/s and 1 m/s";
    const auto a = parse_prompt(prompt);
    const auto b = parse_prompt(prompt);
    EXPECT_EQ(serialize_spec(a.spec), serialize_spec(b.spec));
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(canonical_dump(trace_to_json(a.trace)), canonical_dump(trace_to_json(b.trace)));
}

TEST(Corpus, AtLeastFiveTemplatesPerClass)
{
    for (auto p : kAllPhenomena) {
        std::size_t count = 0;
        for (const auto& t : prompt_templates()) {
            count += t.phenomenon == p ? 1 : 0;
        }
        EXPECT_GE(count, 5u) << to_string(p);
    }
}

TEST(Corpus, DefaultsParseIntoValidSpecs)
{
    for (const auto& t : prompt_templates()) {
        const std::string prompt = verbalize(t, default_params(t.phenomenon));
        const auto r = parse_prompt(prompt);
        EXPECT_EQ(r.trace.phenomenon, t.phenomenon) << prompt;
        EXPECT_TRUE(validate_spec(r.spec).ok()) << prompt;
    }
}

TEST(Corpus, RandomParamsRoundTripThroughEveryTemplate)
{
    std::mt19937_64 rng(20261015);
    for (const auto& t : prompt_templates()) {
        for (int trial = 0; trial < 25; ++trial) {
            TemplateParams params = random_params(t.phenomenon, rng);
            for (const auto& [name, value] : t.fixed) {
                params.values[name] = value;
            }
            const std::string prompt = verbalize(t, params);
            ParseResult r;
            try {
                r = parse_prompt(prompt);
            } catch (const Error& e) {
                ADD_FAILURE() << prompt << ": " << e.what();
                continue;
            }
            ASSERT_EQ(r.trace.phenomenon, t.phenomenon) << prompt;
            for (const auto& name : t.verbalized) {
                EXPECT_TRUE(close(r.trace.params.get(name), params.get(name)))
                    << prompt << "\n  " << name << ": " << r.trace.params.get(name) << " vs " << params.get(name);
            }
            EXPECT_TRUE(validate_spec(r.spec).ok()) << prompt;
        }
    }
}

TEST(External, AcceptsValidSpecAndRejectsInvalidOne)
{
    httplib::Server server;
    std::string received;
    double restitution = 0.5;
    server.Post("/parse", [&](const httplib::Request& req, httplib::Response& res) {
        received = req.body;
        auto spec = build_template(Phenomenon::Collision);
        for (auto& b : spec.bodies) {
            b.restitution = restitution;
        }
        res.set_content(serialize_spec(spec), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/parse";

    const auto spec = external_parse("two balls collide", url);
    EXPECT_EQ(spec.phenomenon, Phenomenon::Collision);
    EXPECT_EQ(Json::parse(received).at("prompt"), "two balls collide");

    restitution = 1.5;
    try {
        external_parse("two balls collide", url);
        ADD_FAILURE() << "invalid spec accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ValidationFailed);
    }
    server.stop();
    th.join();
}

TEST(External, UnreachableServiceIsTransportError)
{
    try {
        external_parse("a pendulum", "http://127.0.0.1:1/parse");
        ADD_FAILURE() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Transport);
    }
}

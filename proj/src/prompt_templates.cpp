#include <cmath>
#include <numbers>

#include "moreforge/parser.hpp"

namespace moreforge {

namespace {

std::string n(double v) { return format_number(v); }
std::string cm(double m) { return format_number(m * 100.0); }
std::string grams(double kg) { return format_number(kg * 1000.0); }
std::string kmh(double ms) { return format_number(ms * 3.6); }
std::string rad(double deg) { return format_number(deg * std::numbers::pi / 180.0); }

std::string word(double v)
{
    static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
    const int i = static_cast<int>(std::lround(v));
    return i >= 0 && i <= 10 ? words[i] : std::to_string(i);
}

std::string integer(double v) { return std::to_string(std::lround(v)); }

std::string heading(double direction) { return direction < 0 ? "to the left" : "to the right"; }
std::string origin(double direction) { return direction < 0 ? "from the right" : "from the left"; }

// "the first two balls are" / "the last ball is"
std::string pulled(const TemplateParams& p, bool right_word)
{
    const double k = p.get("pulled_count");
    const std::string end = p.get("pulled_from_right") > 0.5 ? (right_word ? "rightmost" : "last")
                                                             : (right_word ? "leftmost" : "first");
    if (std::lround(k) == 1) {
        return "the " + end + " ball is";
    }
    return "the " + end + " " + word(k) + " balls are";
}

using P = Phenomenon;
using V = std::vector<std::string>;
using F = std::vector<std::pair<std::string, double>>;

} // namespace

const std::vector<PromptTemplate>& prompt_templates()
{
    static const std::vector<PromptTemplate> all = {
        // gravity
        {P::Gravity, V{"launch_speed", "launch_angle"}, F{},
         [](const TemplateParams& p) {
             return "a ball is launched at " + n(p.get("launch_angle")) + "\xC2\xB0 with velocity " +
                    n(p.get("launch_speed")) + " m/s";
         }},
        {P::Gravity, V{"launch_speed", "launch_angle", "launch_height", "direction"}, F{},
         [](const TemplateParams& p) {
             return "a projectile is fired " + heading(p.get("direction")) + " at " + n(p.get("launch_speed")) +
                    " m/s at an angle of " + n(p.get("launch_angle")) + " degrees from a height of " +
                    n(p.get("launch_height")) + " m";
         }},
        {P::Gravity, V{"mass", "restitution", "launch_speed", "launch_angle"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg ball with restitution " + n(p.get("restitution")) + " is thrown at " +
                    kmh(p.get("launch_speed")) + " km/h at " + rad(p.get("launch_angle")) + " rad";
         }},
        {P::Gravity, V{"radius", "launch_height", "launch_speed"}, F{{"launch_speed", 0.0}},
         [](const TemplateParams& p) {
             return "a ball of radius " + cm(p.get("radius")) + " cm is dropped from a height of " +
                    n(p.get("launch_height")) + " m";
         }},
        {P::Gravity, V{"mass", "launch_speed", "launch_height", "launch_angle"}, F{{"launch_angle", 0.0}},
         [](const TemplateParams& p) {
             return "a " + grams(p.get("mass")) + " g ball is tossed horizontally at " + n(p.get("launch_speed")) +
                    " m/s from " + n(p.get("launch_height")) + " m above the ground";
         }},

        // acceleration
        {P::Acceleration, V{"incline_angle"}, F{},
         [](const TemplateParams& p) { return "a block slides down a " + n(p.get("incline_angle")) + "\xC2\xB0 incline"; }},
        {P::Acceleration, V{"mass", "incline_angle", "friction"}, F{{"friction", 0.0}},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg block slides down a frictionless ramp inclined at " +
                    n(p.get("incline_angle")) + " degrees";
         }},
        {P::Acceleration, V{"block_size", "incline_length", "incline_angle", "friction"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("block_size")) + " m block is released on a " + n(p.get("incline_length")) +
                    " m long slope at " + n(p.get("incline_angle")) + "\xC2\xB0 with friction coefficient " +
                    n(p.get("friction"));
         }},
        {P::Acceleration, V{"incline_angle", "incline_length", "mass", "friction"}, F{},
         [](const TemplateParams& p) {
             return "on an inclined plane at " + n(p.get("incline_angle")) + " degrees with length " +
                    n(p.get("incline_length")) + " m, a " + n(p.get("mass")) +
                    " kg box slides down with coefficient of friction " + n(p.get("friction"));
         }},
        {P::Acceleration, V{"mass", "incline_angle"}, F{},
         [](const TemplateParams& p) {
             return "a " + grams(p.get("mass")) + " g block slides down a " + rad(p.get("incline_angle")) + " rad slope";
         }},

        // collision
        {P::Collision, V{"speed_a", "speed_b"}, F{},
         [](const TemplateParams& p) {
             return "two balls collide head-on at " + n(p.get("speed_a")) + " m/s and " + n(p.get("speed_b")) + " m/s";
         }},
        {P::Collision, V{"mass_a", "speed_a", "mass_b", "speed_b"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass_a")) + " kg ball moving at " + n(p.get("speed_a")) + " m/s hits a " +
                    n(p.get("mass_b")) + " kg ball moving at " + n(p.get("speed_b")) + " m/s";
         }},
        {P::Collision, V{"radius", "gap", "restitution", "speed_a", "speed_b"}, F{{"restitution", 1.0}},
         [](const TemplateParams& p) {
             return "two balls of radius " + n(p.get("radius")) + " m, " + n(p.get("gap")) +
                    " m apart, collide elastically at " + n(p.get("speed_a")) + " m/s and " + n(p.get("speed_b")) +
                    " m/s";
         }},
        {P::Collision, V{"mass_a", "speed_a", "mass_b", "speed_b", "restitution"}, F{},
         [](const TemplateParams& p) {
             return "in a collision, the first ball has mass " + n(p.get("mass_a")) + " kg and speed " +
                    n(p.get("speed_a")) + " m/s; the second ball has mass " + n(p.get("mass_b")) + " kg and speed " +
                    n(p.get("speed_b")) + " m/s; restitution " + n(p.get("restitution"));
         }},
        {P::Collision, V{"mass_a", "speed_a", "restitution"}, F{},
         [](const TemplateParams& p) {
             return "two balls of " + n(p.get("mass_a")) + " kg each crash into each other at " + kmh(p.get("speed_a")) +
                    " km/h each, with restitution " + n(p.get("restitution"));
         }},

        // oscillation
        {P::Oscillation, V{"mass", "stiffness"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg mass oscillates on a spring with spring constant " +
                    n(p.get("stiffness"));
         }},
        {P::Oscillation, V{"stiffness", "amplitude"}, F{},
         [](const TemplateParams& p) {
             return "a mass on a spring of stiffness " + n(p.get("stiffness")) + " is pulled down by " +
                    cm(p.get("amplitude")) + " cm and released";
         }},
        {P::Oscillation, V{"mass", "rest_length", "stiffness", "damping"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg block hangs from a " + n(p.get("rest_length")) +
                    " m long spring with stiffness " + n(p.get("stiffness")) + " and damping " + n(p.get("damping"));
         }},
        {P::Oscillation, V{"mass", "amplitude", "radius", "damping"}, F{{"damping", 0.0}},
         [](const TemplateParams& p) {
             return "an undamped spring oscillator: mass " + n(p.get("mass")) + " kg, amplitude " +
                    n(p.get("amplitude")) + " m, radius " + n(p.get("radius")) + " m";
         }},
        {P::Oscillation, V{"mass", "stiffness", "amplitude"}, F{},
         [](const TemplateParams& p) {
             return "a " + grams(p.get("mass")) + " g ball bounces on a spring (constant " + n(p.get("stiffness")) +
                    ") with an amplitude of " + n(p.get("amplitude")) + " m";
         }},

        // momentum
        {P::Momentum, V{"ball_count"}, F{},
         [](const TemplateParams& p) { return "a Newton's cradle with " + word(p.get("ball_count")) + " balls"; }},
        {P::Momentum, V{"ball_count", "pulled_count", "pulled_from_right"}, F{},
         [](const TemplateParams& p) {
             return "a Newton's cradle with " + integer(p.get("ball_count")) + " balls; " + pulled(p, false) +
                    " pulled back";
         }},
        {P::Momentum, V{"ball_count", "mass", "string_length", "release_angle", "pulled_count", "pulled_from_right"},
         F{{"pulled_count", 1.0}, {"pulled_from_right", 0.0}},
         [](const TemplateParams& p) {
             return "Newton's cradle: " + integer(p.get("ball_count")) + " balls of " + n(p.get("mass")) + " kg on " +
                    n(p.get("string_length")) + " m strings, the first ball released from " +
                    n(p.get("release_angle")) + "\xC2\xB0";
         }},
        {P::Momentum, V{"ball_count", "radius", "restitution", "release_angle", "pulled_count", "pulled_from_right"},
         F{{"pulled_count", 1.0}, {"pulled_from_right", 1.0}},
         [](const TemplateParams& p) {
             return "a cradle of " + integer(p.get("ball_count")) + " steel balls with radius " + cm(p.get("radius")) +
                    " cm, restitution " + n(p.get("restitution")) + ", the last ball pulled back to " +
                    n(p.get("release_angle")) + " degrees";
         }},
        {P::Momentum, V{"ball_count", "string_length", "pulled_count", "pulled_from_right", "release_angle"}, F{},
         [](const TemplateParams& p) {
             return "momentum transfer in a Newton's cradle with " + word(p.get("ball_count")) +
                    " balls hanging from " + cm(p.get("string_length")) + " cm strings; " + pulled(p, true) +
                    " raised to " + rad(p.get("release_angle")) + " rad";
         }},

        // buoyancy
        {P::Buoyancy, V{"radius"}, F{},
         [](const TemplateParams& p) { return "a ball of radius " + n(p.get("radius")) + " m floats in water"; }},
        {P::Buoyancy, V{"density_ratio"}, F{{"density_ratio", 0.5}},
         [](const TemplateParams&) { return std::string("a ball with half the density of water floats in a pool"); }},
        {P::Buoyancy, V{"radius", "density_ratio", "fluid_density"}, F{},
         [](const TemplateParams& p) {
             return "a ball of radius " + cm(p.get("radius")) + " cm and relative density " +
                    n(p.get("density_ratio")) + " is placed in a fluid with fluid density " +
                    n(p.get("fluid_density"));
         }},
        {P::Buoyancy, V{"density_ratio", "drag_ratio"}, F{},
         [](const TemplateParams& p) {
             return "a buoyant ball (density ratio " + n(p.get("density_ratio")) + ") bobs in a liquid with drag ratio " +
                    n(p.get("drag_ratio"));
         }},
        {P::Buoyancy, V{"radius", "density_ratio", "drag_ratio", "fluid_density"}, F{},
         [](const TemplateParams& p) {
             return "a floating ball of radius " + n(p.get("radius")) + " m, density ratio " +
                    n(p.get("density_ratio")) + ", drag ratio " + n(p.get("drag_ratio")) +
                    ", in a fluid of fluid density " + n(p.get("fluid_density"));
         }},

        // inertia
        {P::Inertia, V{"speed", "direction"}, F{},
         [](const TemplateParams& p) {
             return "a block is pushed " + origin(p.get("direction")) + " at " + n(p.get("speed")) + " m/s";
         }},
        {P::Inertia, V{"mass", "speed", "friction"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg block slides across a rough floor at " + n(p.get("speed")) +
                    " m/s with friction coefficient " + n(p.get("friction"));
         }},
        {P::Inertia, V{"block_size", "direction", "speed"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("block_size")) + " m box is kicked " + heading(p.get("direction")) +
                    " with a speed of " + kmh(p.get("speed")) + " km/h";
         }},
        {P::Inertia, V{"mass", "speed", "friction"}, F{{"friction", 0.0}},
         [](const TemplateParams& p) {
             return "a " + grams(p.get("mass")) + " g puck coasts at " + n(p.get("speed")) +
                    " m/s on a frictionless surface";
         }},
        {P::Inertia, V{"block_size", "mass", "speed", "friction"}, F{},
         [](const TemplateParams& p) {
             return "a block of side " + n(p.get("block_size")) + " m and mass " + n(p.get("mass")) +
                    " kg is shoved at " + n(p.get("speed")) + " m/s; friction " + n(p.get("friction"));
         }},

        // pendulum
        {P::Pendulum, V{"length", "release_angle"}, F{},
         [](const TemplateParams& p) {
             return "a simple pendulum of length " + n(p.get("length")) + " m released from " +
                    n(p.get("release_angle")) + "\xC2\xB0";
         }},
        {P::Pendulum, V{"mass", "length", "release_angle", "side"}, F{},
         [](const TemplateParams& p) {
             return "a " + n(p.get("mass")) + " kg bob swings on a " + n(p.get("length")) + " m string, starting at " +
                    n(p.get("release_angle")) + " degrees " + heading(p.get("side"));
         }},
        {P::Pendulum, V{"length", "radius", "release_angle"}, F{},
         [](const TemplateParams& p) {
             return "a pendulum " + cm(p.get("length")) + " cm long with a bob of radius " + n(p.get("radius")) +
                    " m is pulled to " + rad(p.get("release_angle")) + " rad";
         }},
        {P::Pendulum, V{"mass", "side", "release_angle"}, F{},
         [](const TemplateParams& p) {
             return "a pendulum with a " + grams(p.get("mass")) + " g bob is released " +
                    (p.get("side") < 0 ? std::string("from the left") : std::string("from the right")) + " at " +
                    n(p.get("release_angle")) + "\xC2\xB0";
         }},
        {P::Pendulum, V{"release_angle", "length", "mass"}, F{},
         [](const TemplateParams& p) {
             return "a pendulum swings from " + n(p.get("release_angle")) + " degrees; string length " +
                    n(p.get("length")) + " m, bob mass " + n(p.get("mass")) + " kg";
         }},

        // pulley
        {P::Pulley, V{"mass_a", "mass_b"}, F{},
         [](const TemplateParams& p) {
             return "an Atwood machine with masses " + n(p.get("mass_a")) + " kg and " + n(p.get("mass_b")) + " kg";
         }},
        {P::Pulley, V{"mass_a", "mass_b"}, F{},
         [](const TemplateParams& p) {
             return "two boxes of " + n(p.get("mass_a")) + " kg and " + n(p.get("mass_b")) + " kg hang over a pulley";
         }},
        {P::Pulley, V{"mass_a", "mass_b", "drop", "separation"}, F{},
         [](const TemplateParams& p) {
             return "a pulley holds a " + n(p.get("mass_a")) + " kg box and a " + n(p.get("mass_b")) + " kg box " +
                    n(p.get("drop")) + " m below it, " + n(p.get("separation")) + " m apart";
         }},
        {P::Pulley, V{"mass_a", "mass_b", "box_size"}, F{},
         [](const TemplateParams& p) {
             return "an Atwood machine: the first mass is " + grams(p.get("mass_a")) + " g, the second mass is " +
                    grams(p.get("mass_b")) + " g, boxes of size " + n(p.get("box_size")) + " m";
         }},
        {P::Pulley, V{"mass_a", "mass_b", "drop"}, F{},
         [](const TemplateParams& p) {
             return "two masses, " + n(p.get("mass_a")) + " kg and " + n(p.get("mass_b")) +
                    " kg, connected by a rope over a pulley, hanging " + n(p.get("drop")) + " m below the pulley";
         }},
    };
    return all;
}

} // namespace moreforge

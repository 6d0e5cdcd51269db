#pragma once

// Structured Newtonian scenario description and its JSON form.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "moreforge/canonical_json.hpp"
#include "moreforge/error.hpp"
#include "moreforge/vec2.hpp"

namespace moreforge {

inline constexpr std::string_view kSchemaVersion = "moreforge-1";

enum class Phenomenon {
    Gravity,
    Acceleration,
    Collision,
    Oscillation,
    Momentum,
    Buoyancy,
    Inertia,
    Pendulum,
    Pulley,
};

inline constexpr std::array<Phenomenon, 9> kAllPhenomena = {
    Phenomenon::Gravity,  Phenomenon::Acceleration, Phenomenon::Collision,
    Phenomenon::Oscillation, Phenomenon::Momentum,  Phenomenon::Buoyancy,
    Phenomenon::Inertia,  Phenomenon::Pendulum,     Phenomenon::Pulley,
};

std::string_view to_string(Phenomenon p);
std::optional<Phenomenon> phenomenon_from_string(std::string_view name);

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Distinct flat colour for the body at `index`; never grey, so it cannot
/// collide with background, ground or constraint line colours.
Rgb default_body_color(std::size_t index);

struct Rect {
    Vec2 min;
    Vec2 max;
    bool operator==(const Rect&) const = default;
};

struct SegmentSpec {
    Vec2 p0;
    Vec2 p1;
    double thickness = 0.05;
    bool operator==(const SegmentSpec&) const = default;
};

struct WorldParams {
    Vec2 gravity{0.0, -9.81};
    std::optional<Rect> bounds;
    std::vector<SegmentSpec> ground;
    bool operator==(const WorldParams&) const = default;
};

struct CircleShape {
    double radius = 0.1;
    bool operator==(const CircleShape&) const = default;
};

struct BoxShape {
    double width = 0.2;
    double height = 0.2;
    bool operator==(const BoxShape&) const = default;
};

/// Thick static segment; endpoints are in the body's local frame.
struct SegmentShape {
    Vec2 p0;
    Vec2 p1;
    double thickness = 0.05;
    bool operator==(const SegmentShape&) const = default;
};

using Shape = std::variant<CircleShape, BoxShape, SegmentShape>;

double shape_area(const Shape& shape);

struct BodySpec {
    std::string id;
    Shape shape = CircleShape{};
    bool is_static = false;
    std::optional<double> mass;
    std::optional<double> density; // kg/m^2, overrides mass when present
    Vec2 position;
    Vec2 velocity;
    double angle = 0.0;
    double angular_velocity = 0.0;
    double restitution = 0.5;
    double friction = 0.4;
    Rgb color;
    bool operator==(const BodySpec&) const = default;

    /// Mass after applying density; only meaningful for dynamic bodies.
    double effective_mass() const;
};

struct RodSpec {
    std::string body;
    Vec2 anchor; // world
    double length = 1.0;
    bool operator==(const RodSpec&) const = default;
};

struct PinSpec {
    std::string body_a;
    std::string body_b;
    Vec2 anchor_a; // local to body_a
    Vec2 anchor_b; // local to body_b
    bool operator==(const PinSpec&) const = default;
};

struct SpringSpec {
    std::string body;
    Vec2 anchor; // world
    double stiffness = 50.0;
    double damping = 0.0;
    double rest_length = 1.0;
    bool operator==(const SpringSpec&) const = default;
};

struct PulleySpec {
    std::string body_a;
    std::string body_b;
    Vec2 anchor_a; // world
    Vec2 anchor_b; // world
    double rope_length = 2.0;
    bool operator==(const PulleySpec&) const = default;
};

using ConstraintSpec = std::variant<RodSpec, PinSpec, SpringSpec, PulleySpec>;

struct FluidRegion {
    Rect rect;
    double density = 1000.0;
    double linear_drag = 0.0;
    bool operator==(const FluidRegion&) const = default;
};

struct RenderParams {
    int width = 800;
    int height = 600;
    double pixels_per_meter = 100.0;
    Vec2 camera_origin;
    double fps = 60.0;
    Rgb background{255, 255, 255};
    bool operator==(const RenderParams&) const = default;
};

namespace defaults {
inline constexpr double kDt = 1.0 / 240.0;
inline constexpr double kDuration = 5.0;
inline constexpr double kRestitution = 0.5;
inline constexpr double kFriction = 0.4;
inline constexpr Vec2 kGravity{0.0, -9.81};
} // namespace defaults

/// Range table shared by every phenomenon schema.
namespace limits {
inline constexpr double kMassMin = 0.01, kMassMax = 1000.0;
inline constexpr double kSpeedMax = 100.0;
inline constexpr double kAngleMax = 3.14159265358979323846;
inline constexpr double kLengthMin = 0.01, kLengthMax = 100.0;
inline constexpr double kDensityMin = 1.0, kDensityMax = 20000.0;
inline constexpr double kGravityMax = 100.0;
inline constexpr double kDtMin = 1e-5, kDtMax = 0.1;
inline constexpr double kMaxSteps = 1e6;
inline constexpr int kImageMax = 8192;
inline constexpr double kStiffnessMax = 1e6;
/// Rope/rod geometric tolerance at t = 0 (absorbs 9-digit serialisation).
inline constexpr double kGeometryTol = 1e-6;
/// Relative tolerance for fps dividing 1/dt.
inline constexpr double kStrideTol = 1e-8;
} // namespace limits

struct ScenarioSpec {
    Phenomenon phenomenon = Phenomenon::Gravity;
    WorldParams world;
    std::vector<BodySpec> bodies;
    std::vector<ConstraintSpec> constraints;
    std::vector<FluidRegion> fluids;
    double duration_s = defaults::kDuration;
    double dt_s = defaults::kDt;
    RenderParams render;
    std::string label;
    bool operator==(const ScenarioSpec&) const = default;

    /// Index of the body with this id, if any.
    std::optional<std::size_t> body_index(std::string_view id) const;
};

/// Number of integration steps: floor(duration / dt), tolerant to the
/// last-ulp error of the division.
long step_count(double duration_s, double dt_s);

/// Frame stride round((1/dt)/fps); throws StrideMismatch when fps does not
/// divide 1/dt.
int frame_stride(double dt_s, double fps);

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

ValidationResult validate_spec(const ScenarioSpec& spec);

/// Throws ValidationFailed carrying the violation list when invalid.
void require_valid(const ScenarioSpec& spec);

ScenarioSpec parse_spec(std::string_view text);
ScenarioSpec spec_from_json(const Json& doc);
Json spec_to_json(const ScenarioSpec& spec);
std::string serialize_spec(const ScenarioSpec& spec);

} // namespace moreforge

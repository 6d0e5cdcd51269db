#pragma once

// Fixed-step integrator with sequential-impulse contacts and joints.

#include "moreforge/collision.hpp"
#include "moreforge/scene.hpp"
#include "moreforge/telemetry.hpp"

namespace moreforge {

namespace solver {
inline constexpr int kVelocityIterations = 10;
inline constexpr double kBaumgarte = 0.2;
inline constexpr double kSlop = 0.005;
/// Approach speeds below this are treated as resting contact (no bounce).
inline constexpr double kRestitutionThreshold = 0.1;
inline constexpr double kDivergenceLimit = 1e6;
} // namespace solver

struct BuoyancyForce {
    double submerged_area = 0.0;
    Vec2 centroid;  // where the buoyant force acts
    Vec2 buoyancy;  // -rho * A * g
    Vec2 drag;      // -c * v, applied at the centre of mass
};

/// Zero force when the body and region are disjoint.
BuoyancyForce buoyancy_force(const RigidBody& body, const FluidRegion& region, Vec2 gravity);

/// Advances the scene by one dt. Contact events of this step are appended to
/// `events` when given.
void step(Scene& scene, std::vector<ContactEvent>* events = nullptr);

class DivergenceError : public Error {
public:
    DivergenceError(std::string message, long at_step, TelemetrySeries partial_series);
    TelemetrySeries partial;
};

/// Records the initial state and then floor(duration/dt) steps.
TelemetrySeries run(Scene& scene, double duration_s);

/// compile + run for the spec's duration.
TelemetrySeries simulate(const ScenarioSpec& spec);

} // namespace moreforge

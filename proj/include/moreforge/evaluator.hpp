#pragma once

// Rule checks on telemetry, trajectory divergence and the refinement hook.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moreforge/canonical_json.hpp"
#include "moreforge/engine.hpp"
#include "moreforge/spec.hpp"
#include "moreforge/telemetry.hpp"
#include "moreforge/trajectory.hpp"

namespace moreforge {

inline constexpr int kMaxIterations = 3;

struct RuleSet {
    bool momentum = true;
    bool energy = true;
    bool constraint_drift = true;
    bool penetration = true;
    bool bounds = true;
    bool divergence = true;

    double momentum_tol = 1e-4;                   // relative, unforced axis
    double energy_tol = 1e-4;                     // relative gain
    double drift_tol = 1e-3;                      // m
    double penetration_tol = 2.0 * solver::kSlop; // m
    double bounds_tol = 1e-3;                     // m outside world.bounds
    double divergence_tol = 0.05;                 // dtw_n vs reference run

    // Trajectory section: observed (tracked) vs telemetry projection.
    double trajectory_dtw_n_tol = 0.05;
    double trajectory_procrustes_tol = 0.01;
};

/// Throws SchemaError when a threshold is not positive.
void check_rules(const RuleSet& rules);

enum class CheckStatus { Pass, Fail, Skipped };

std::string_view to_string(CheckStatus s);

struct CheckRow {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double measured = 0.0;
    double threshold = 0.0;
    long step = -1; // step of the worst sample, -1 when not applicable
    std::string detail;
    bool operator==(const CheckRow&) const = default;

    bool failed() const { return status == CheckStatus::Fail; }
};

struct TrajectoryRow {
    std::string object;
    double dtw_n = 0.0;
    double procrustes = 0.0;
    long worst_step = -1;
    bool passed = true;
    bool operator==(const TrajectoryRow&) const = default;
};

struct FeedbackReport {
    std::vector<TrajectoryRow> trajectory_section;
    std::vector<CheckRow> physics_section;
    std::vector<CheckRow> intent_section;
    std::vector<std::string> summary_lines;
    bool overall = true;
    bool operator==(const FeedbackReport&) const = default;

    /// Names of failing rows across every section, in report order.
    std::vector<std::string> failing_checks() const;
};

/// Staggered discrete energy per sample: kinetic energy at step k plus the
/// potential at the midpoint of steps k-1 and k. Static bodies are ignored.
std::vector<double> discrete_energy(const ScenarioSpec& spec, const TelemetrySeries& telemetry);

/// Largest single-step energy gain, relative to |E(0)|.
double max_step_energy_gain(const ScenarioSpec& spec, const TelemetrySeries& telemetry);

/// Largest |P(k) - P(0)| along the axis perpendicular to gravity, relative to
/// the summed initial momentum magnitudes.
double momentum_drift(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst_step = nullptr);

/// Largest rod/pin violation and pulley stretch over the run, in metres.
double constraint_drift(const ScenarioSpec& spec, const TelemetrySeries& telemetry, long* worst_step = nullptr);

std::vector<CheckRow> check_physics(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                                    const RuleSet& rules = {},
                                    const TelemetrySeries* reference = nullptr);

std::vector<CheckRow> check_intent(const ScenarioSpec& spec, const TelemetrySeries& telemetry);

/// Per dynamic body: observed pixel trajectory vs the telemetry projection.
std::vector<TrajectoryRow> compare_trajectories(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                                                const std::vector<Trajectory2D>& observed,
                                                const RuleSet& rules = {});

FeedbackReport synthesize_feedback(std::vector<TrajectoryRow> trajectory, std::vector<CheckRow> physics,
                                   std::vector<CheckRow> intent);

/// Renders, tracks and runs every check.
FeedbackReport evaluate(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const RuleSet& rules = {});

/// Report for a run whose simulation diverged.
FeedbackReport divergence_report(const ScenarioSpec& spec, const DivergenceError& err);

Json feedback_to_json(const FeedbackReport& report);
FeedbackReport feedback_from_json(const Json& doc);

using RefinementHook = std::function<ScenarioSpec(const ScenarioSpec&, const FeedbackReport&)>;

/// Rule-keyed spec edits: clamp out-of-range values, double the duration when
/// the apex was not reached, restore the default dt after divergence.
ScenarioSpec default_refinement(const ScenarioSpec& spec, const FeedbackReport& report);

/// POSTs {"spec", "report"} and reads a spec back.
RefinementHook http_refinement(std::string url);

/// http_refinement when MOREFORGE_REFINER_URL is set, else default_refinement.
RefinementHook refinement_from_env();

/// Passing reports return the spec unchanged. Throws ValidationFailed when the
/// hook output does not validate and NoProgress when it changes nothing.
ScenarioSpec refine(const ScenarioSpec& spec, const FeedbackReport& report,
                    const RefinementHook& hook = default_refinement);

} // namespace moreforge

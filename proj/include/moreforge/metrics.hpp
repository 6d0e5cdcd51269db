#pragma once

// DTW, normalized DTW and Procrustes disparity over 2D trajectories.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moreforge/canonical_json.hpp"
#include "moreforge/spec.hpp"
#include "moreforge/telemetry.hpp"
#include "moreforge/trajectory.hpp"

namespace moreforge {

inline constexpr int kDefaultResample = 100;

struct DtwResult {
    double cost = 0.0;
    std::size_t path_length = 0; // matched pairs on the optimal path
};

/// Full-grid DTW on raw points, Euclidean local cost, unit steps; ties
/// prefer the diagonal, then (i-1, j), then (i, j-1).
DtwResult dtw_points(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

/// Throws SpaceMismatch when the space tags differ.
double dtw(const Trajectory2D& a, const Trajectory2D& b);

/// Subtracts the bbox minimum and divides by max(bbox w, bbox h).
/// Throws DegenerateTraj for a single-point bbox.
Trajectory2D normalize_traj(const Trajectory2D& a);

double dtw_n(const Trajectory2D& a, const Trajectory2D& b);

/// Points at M equally spaced time fractions, linear interpolation.
std::vector<Vec2> resample(const Trajectory2D& a, int m);

/// Disparity in [0, 2] after centring, unit-norm scaling and the best
/// orthogonal map (reflection allowed).
double procrustes(const Trajectory2D& a, const Trajectory2D& b, int m = kDefaultResample);

struct MetricRow {
    std::string entry;      // scenario / file label
    std::string phenomenon; // class name, "" when unknown
    std::string object;     // key object id
    double dtw = 0.0;
    double dtw_n = 0.0;
    double procrustes = 0.0;
    bool operator==(const MetricRow&) const = default;
};

/// Both trajectories must share a space. Static objects fall back to
/// normalizing both by the union bbox instead of failing.
MetricRow evaluate_pair(const Trajectory2D& gt, const Trajectory2D& est, int m = kDefaultResample);

/// Dynamic body with the longest travelled path.
std::string key_object(const ScenarioSpec& spec, const TelemetrySeries& telemetry);

/// Ground truth from telemetry: projected through the camera when `est` is
/// pixel-space, sampled at the render stride. Throws MissingObject.
MetricRow evaluate_pair(const ScenarioSpec& spec, const TelemetrySeries& gt, const Trajectory2D& est,
                        std::optional<std::string> key = std::nullopt, int m = kDefaultResample);

/// Ground-truth trajectory used by evaluate_pair for a body.
Trajectory2D ground_truth(const ScenarioSpec& spec, const TelemetrySeries& gt, std::size_t body, Space space);

struct Stat {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation, 0 for one row
    bool operator==(const Stat&) const = default;
};

struct GroupStats {
    std::size_t count = 0;
    Stat dtw;
    Stat dtw_n;
    Stat procrustes;
    bool operator==(const GroupStats&) const = default;
};

struct MetricReport {
    std::vector<MetricRow> rows;               // sorted by (phenomenon, entry, object)
    std::map<std::string, GroupStats> classes; // per phenomenon
    GroupStats overall;
    int resample = kDefaultResample;
    std::string normalization = "bbox-isotropic";
    bool operator==(const MetricReport&) const = default;
};

Stat mean_std(const std::vector<double>& values);

/// Throws EmptyInput on no rows.
MetricReport aggregate(std::vector<MetricRow> rows, int m = kDefaultResample);

Json report_to_json(const MetricReport& report);
MetricReport report_from_json(const Json& doc);

/// Aligned plain-text table, mean +- std per class and overall.
std::string report_table(const MetricReport& report);

/// Markdown table with the same content.
std::string report_markdown(const MetricReport& report);

} // namespace moreforge

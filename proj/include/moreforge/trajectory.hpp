#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moreforge/error.hpp"

namespace moreforge {

enum class Space { World, Pixel, Normalized };

std::string_view to_string(Space s);

struct TrajPoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool operator==(const TrajPoint&) const = default;
};

struct FrameSize {
    int width = 0;
    int height = 0;
    bool operator==(const FrameSize&) const = default;
};

struct Trajectory2D {
    std::vector<TrajPoint> points;
    Space space = Space::World;
    std::optional<FrameSize> frame_size; // pixel space only
    bool operator==(const Trajectory2D&) const = default;

    std::size_t size() const { return points.size(); }
};

/// Throws DegenerateTraj for fewer than two points or non-increasing t.
void check_trajectory(const Trajectory2D& traj);

/// CSV `t,x,y` with an optional first line `# space: pixel WxH`,
/// `# space: world` or `# space: normalized` (world when absent).
std::string trajectory_to_csv(const Trajectory2D& traj);
Trajectory2D trajectory_from_csv(std::string_view text);

} // namespace moreforge

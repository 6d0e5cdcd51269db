#pragma once

// Replays telemetry into flat-shaded frames. Pixel (i, j) is covered by a
// shape when its centre (i + 0.5, j + 0.5) lies inside it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moreforge/spec.hpp"
#include "moreforge/telemetry.hpp"
#include "moreforge/trajectory.hpp"

namespace moreforge {

struct CameraTransform {
    double pixels_per_meter = 100.0;
    Vec2 origin;
    int height = 600;

    static CameraTransform of(const RenderParams& r) { return {r.pixels_per_meter, r.camera_origin, r.height}; }

    Vec2 world_to_pixel(Vec2 p) const
    {
        return {(p.x - origin.x) * pixels_per_meter, height - (p.y - origin.y) * pixels_per_meter};
    }
    Vec2 pixel_to_world(Vec2 px) const
    {
        return {origin.x + px.x / pixels_per_meter, origin.y + (height - px.y) / pixels_per_meter};
    }
};

namespace palette {
inline constexpr Rgb kStatic{110, 110, 110};
inline constexpr Rgb kLine{50, 50, 50};
inline constexpr Rgb kFluid{70, 130, 230};
} // namespace palette

/// 50% blend used for fluid overdraw.
constexpr Rgb blend_half(Rgb a, Rgb b)
{
    return {static_cast<std::uint8_t>((a.r + b.r) / 2), static_cast<std::uint8_t>((a.g + b.g) / 2),
            static_cast<std::uint8_t>((a.b + b.b) / 2)};
}

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, Rgb fill);

    Rgb at(int x, int y) const
    {
        const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int x, int y, Rgb c)
    {
        const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }
    bool operator==(const Image&) const = default;

    /// Binary P6, maxval 255.
    std::string to_ppm() const;
};

Image read_ppm(const std::filesystem::path& path);

/// Draws one frame from per-body states (one sample per spec body).
Image render_frame(const ScenarioSpec& spec, const std::vector<Sample>& states);

struct FrameSequence {
    double fps = 60.0;
    int stride = 1;
    std::vector<long> steps; // frame k shows steps[k] = k * stride
};

/// Frame mapping for a spec; throws StrideMismatch.
FrameSequence frame_plan(const ScenarioSpec& spec);

/// Renders every frame and hands it to `sink` in order.
FrameSequence render_frames(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                            const std::function<void(std::size_t frame, long step, const Image&)>& sink);

/// Writes frame_%06d.ppm and encode.txt into `dir`.
FrameSequence render_sequence(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                              const std::filesystem::path& dir);

std::string frame_name(std::size_t index);

/// Pixel-space centroid of the pixels painted `color` (or `alt`).
std::optional<Vec2> color_centroid(const Image& img, Rgb color, std::optional<Rgb> alt = std::nullopt);

/// Re-extracts each body's pixel trajectory from its rendered colour; frames
/// where a body is not visible are skipped.
std::vector<Trajectory2D> track_centroids(const ScenarioSpec& spec, const TelemetrySeries& telemetry);

/// Telemetry of one body projected through the camera, sampled every `stride` steps.
Trajectory2D project_body(const ScenarioSpec& spec, const TelemetrySeries& telemetry, std::size_t body, int stride);

} // namespace moreforge

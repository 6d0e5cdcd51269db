#include "moreforge/render.hpp"

#include "moreforge/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace moreforge {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3)
{
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill.r;
        rgb[i + 1] = fill.g;
        rgb[i + 2] = fill.b;
    }
}

std::string Image::to_ppm() const
{
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    return out;
}

Image read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
        throw Error(ErrorKind::Syntax, "not a P6 image: " + path.string());
    }
    Image img(w, h, {});
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (!in) {
        throw Error(ErrorKind::Io, "truncated image " + path.string());
    }
    return img;
}

namespace {

struct Canvas {
    Image& img;
    CameraTransform tf;

    // Pixel index range whose centres may fall within [lo, hi] (pixel units).
    std::pair<int, int> span(double lo, double hi, int limit) const
    {
        const int a = std::max(0, static_cast<int>(std::floor(lo - 0.5)));
        const int b = std::min(limit - 1, static_cast<int>(std::ceil(hi - 0.5)));
        return {a, b};
    }

    void disc(Vec2 center_w, double radius_w, Rgb color)
    {
        const Vec2 c = tf.world_to_pixel(center_w);
        const double r = radius_w * tf.pixels_per_meter;
        const auto [x0, x1] = span(c.x - r, c.x + r, img.width);
        const auto [y0, y1] = span(c.y - r, c.y + r, img.height);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - c.x;
                const double dy = y + 0.5 - c.y;
                if (dx * dx + dy * dy <= r * r) {
                    img.set(x, y, color);
                }
            }
        }
    }

    // Oriented rectangle given in world units.
    void quad(Vec2 center_w, Vec2 half_w, double angle, Rgb color)
    {
        const Vec2 c = tf.world_to_pixel(center_w);
        const Vec2 h = half_w * tf.pixels_per_meter;
        const double extent = h.length();
        const auto [x0, x1] = span(c.x - extent, c.x + extent, img.width);
        const auto [y0, y1] = span(c.y - extent, c.y + extent, img.height);
        // Pixel y points down, so the on-screen rotation is -angle.
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - c.x;
                const double dy = -(y + 0.5 - c.y);
                const double lx = cs * dx + sn * dy;
                const double ly = -sn * dx + cs * dy;
                if (std::abs(lx) <= h.x && std::abs(ly) <= h.y) {
                    img.set(x, y, color);
                }
            }
        }
    }

    void fluid(const Rect& r, Rgb color)
    {
        const Vec2 a = tf.world_to_pixel(r.min);
        const Vec2 b = tf.world_to_pixel(r.max);
        const auto [x0, x1] = span(std::min(a.x, b.x), std::max(a.x, b.x), img.width);
        const auto [y0, y1] = span(std::min(a.y, b.y), std::max(a.y, b.y), img.height);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                const double py = y + 0.5;
                if (px >= std::min(a.x, b.x) && px <= std::max(a.x, b.x) && py >= std::min(a.y, b.y) &&
                    py <= std::max(a.y, b.y)) {
                    img.set(x, y, blend_half(img.at(x, y), color));
                }
            }
        }
    }

    // 1-px Bresenham line, clipped to the canvas first (Liang-Barsky).
    void line(Vec2 p_w, Vec2 q_w, Rgb color)
    {
        Vec2 p = tf.world_to_pixel(p_w);
        Vec2 q = tf.world_to_pixel(q_w);
        double t0 = 0.0, t1 = 1.0;
        const Vec2 d = q - p;
        const double pk[4] = {-d.x, d.x, -d.y, d.y};
        const double qk[4] = {p.x, img.width - 1e-9 - p.x, p.y, img.height - 1e-9 - p.y};
        for (int i = 0; i < 4; ++i) {
            if (pk[i] == 0.0) {
                if (qk[i] < 0.0) {
                    return;
                }
                continue;
            }
            const double r = qk[i] / pk[i];
            if (pk[i] < 0.0) {
                t0 = std::max(t0, r);
            } else {
                t1 = std::min(t1, r);
            }
        }
        if (t0 > t1) {
            return;
        }
        const Vec2 a = p + d * t0;
        const Vec2 b = p + d * t1;
        int x0 = static_cast<int>(std::floor(a.x)), y0 = static_cast<int>(std::floor(a.y));
        const int x1 = static_cast<int>(std::floor(b.x)), y1 = static_cast<int>(std::floor(b.y));
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            if (x0 >= 0 && x0 < img.width && y0 >= 0 && y0 < img.height) {
                img.set(x0, y0, color);
            }
            if (x0 == x1 && y0 == y1) {
                break;
            }
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void zigzag(Vec2 p, Vec2 q, Rgb color)
    {
        constexpr int kTeeth = 12;
        const Vec2 d = q - p;
        const double len = d.length();
        if (len < 1e-9) {
            return;
        }
        const Vec2 side = perp(d / len) * std::min(0.05, 0.1 * len);
        Vec2 prev = p;
        for (int i = 1; i <= kTeeth; ++i) {
            const double f = (i - 0.5) / kTeeth;
            const Vec2 next = p + d * f + side * (i % 2 ? 1.0 : -1.0);
            line(prev, next, color);
            prev = next;
        }
        line(prev, q, color);
    }

    void body(const BodySpec& spec, Vec2 pos, double angle, Rgb color)
    {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CircleShape>) {
                    disc(pos, s.radius, color);
                } else if constexpr (std::is_same_v<T, BoxShape>) {
                    quad(pos, {s.width / 2, s.height / 2}, angle, color);
                } else {
                    const Vec2 d = s.p1 - s.p0;
                    quad(pos + rotate((s.p0 + s.p1) * 0.5, angle), {d.length() / 2, s.thickness / 2},
                         angle + std::atan2(d.y, d.x), color);
                }
            },
            spec.shape);
    }
};

} // namespace

Image render_frame(const ScenarioSpec& spec, const std::vector<Sample>& states)
{
    const auto& r = spec.render;
    Image img(r.width, r.height, r.background);
    Canvas canvas{img, CameraTransform::of(r)};

    for (const auto& g : spec.world.ground) {
        const Vec2 d = g.p1 - g.p0;
        canvas.quad((g.p0 + g.p1) * 0.5, {d.length() / 2, g.thickness / 2}, std::atan2(d.y, d.x), palette::kStatic);
    }
    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        if (spec.bodies[i].is_static) {
            canvas.body(spec.bodies[i], {states[i].x, states[i].y}, states[i].angle, palette::kStatic);
        }
    }

    auto pos = [&](const std::string& id) {
        const auto i = *spec.body_index(id);
        return Vec2{states[i].x, states[i].y};
    };
    auto attach = [&](const std::string& id, Vec2 local) {
        const auto i = *spec.body_index(id);
        return Vec2{states[i].x, states[i].y} + rotate(local, states[i].angle);
    };
    for (const auto& c : spec.constraints) {
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, RodSpec>) {
                    canvas.line(k.anchor, pos(k.body), palette::kLine);
                } else if constexpr (std::is_same_v<T, PinSpec>) {
                    canvas.line(pos(k.body_a), attach(k.body_a, k.anchor_a), palette::kLine);
                    canvas.line(pos(k.body_b), attach(k.body_b, k.anchor_b), palette::kLine);
                } else if constexpr (std::is_same_v<T, SpringSpec>) {
                    canvas.zigzag(k.anchor, pos(k.body), palette::kLine);
                } else {
                    canvas.line(k.anchor_a, pos(k.body_a), palette::kLine);
                    canvas.line(k.anchor_a, k.anchor_b, palette::kLine);
                    canvas.line(k.anchor_b, pos(k.body_b), palette::kLine);
                }
            },
            c);
    }

    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        if (!spec.bodies[i].is_static) {
            canvas.body(spec.bodies[i], {states[i].x, states[i].y}, states[i].angle, spec.bodies[i].color);
        }
    }
    for (const auto& f : spec.fluids) {
        canvas.fluid(f.rect, palette::kFluid);
    }
    return img;
}

FrameSequence frame_plan(const ScenarioSpec& spec)
{
    FrameSequence seq;
    seq.fps = spec.render.fps;
    seq.stride = frame_stride(spec.dt_s, spec.render.fps);
    const auto frames = static_cast<long>(std::floor(spec.duration_s * spec.render.fps * (1.0 + 1e-9))) + 1;
    const long steps = step_count(spec.duration_s, spec.dt_s);
    for (long k = 0; k < frames && k * seq.stride <= steps; ++k) {
        seq.steps.push_back(k * seq.stride);
    }
    return seq;
}

FrameSequence render_frames(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                            const std::function<void(std::size_t, long, const Image&)>& sink)
{
    if (std::abs(telemetry.dt_s - spec.dt_s) > 1e-12 * spec.dt_s) {
        throw Error(ErrorKind::StrideMismatch, "telemetry dt differs from spec dt");
    }
    auto seq = frame_plan(spec);
    require_complete(telemetry, spec);
    std::vector<Sample> states(spec.bodies.size());
    for (std::size_t f = 0; f < seq.steps.size(); ++f) {
        const auto k = static_cast<std::size_t>(seq.steps[f]);
        for (std::size_t b = 0; b < states.size(); ++b) {
            states[b] = telemetry.samples[b][k];
        }
        sink(f, seq.steps[f], render_frame(spec, states));
    }
    return seq;
}

std::string frame_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.ppm", index);
    return buf;
}

FrameSequence render_sequence(const ScenarioSpec& spec, const TelemetrySeries& telemetry,
                              const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
    auto seq = render_frames(spec, telemetry, [&](std::size_t f, long, const Image& img) {
        write_file(dir / frame_name(f), img.to_ppm());
    });
    write_file(dir / "encode.txt",
               "# Optional container packaging of the PPM frames:\n"
               "ffmpeg -y -framerate " + format_number(seq.fps) +
                   " -i frame_%06d.ppm -c:v libx264 -pix_fmt yuv420p video.mp4\n");
    return seq;
}

std::optional<Vec2> color_centroid(const Image& img, Rgb color, std::optional<Rgb> alt)
{
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Rgb c = img.at(x, y);
            if (c == color || (alt && c == *alt)) {
                sx += x + 0.5;
                sy += y + 0.5;
                ++n;
            }
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return Vec2{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::vector<Trajectory2D> track_centroids(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    std::vector<Trajectory2D> out(spec.bodies.size());
    for (auto& t : out) {
        t.space = Space::Pixel;
        t.frame_size = FrameSize{spec.render.width, spec.render.height};
    }
    render_frames(spec, telemetry, [&](std::size_t, long step, const Image& img) {
        const double t = static_cast<double>(step) * spec.dt_s;
        // Single pass over the frame accumulating every body colour at once.
        std::vector<double> sx(spec.bodies.size()), sy(spec.bodies.size());
        std::vector<std::size_t> n(spec.bodies.size());
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const Rgb c = img.at(x, y);
                if (c == spec.render.background) {
                    continue;
                }
                for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
                    const Rgb col = spec.bodies[b].color;
                    if (c == col || (!spec.fluids.empty() && c == blend_half(col, palette::kFluid))) {
                        sx[b] += x + 0.5;
                        sy[b] += y + 0.5;
                        ++n[b];
                        break;
                    }
                }
            }
        }
        for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
            if (n[b] > 0 && !spec.bodies[b].is_static) {
                out[b].points.push_back({t, sx[b] / static_cast<double>(n[b]), sy[b] / static_cast<double>(n[b])});
            }
        }
    });
    return out;
}

Trajectory2D project_body(const ScenarioSpec& spec, const TelemetrySeries& telemetry, std::size_t body, int stride)
{
    const auto tf = CameraTransform::of(spec.render);
    Trajectory2D out;
    out.space = Space::Pixel;
    out.frame_size = FrameSize{spec.render.width, spec.render.height};
    const auto& samples = telemetry.samples.at(body);
    for (std::size_t k = 0; k < samples.size(); k += static_cast<std::size_t>(stride)) {
        const Vec2 p = tf.world_to_pixel({samples[k].x, samples[k].y});
        out.points.push_back({samples[k].t, p.x, p.y});
    }
    return out;
}

} // namespace moreforge

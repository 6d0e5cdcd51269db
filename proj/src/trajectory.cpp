#include "moreforge/trajectory.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "moreforge/canonical_json.hpp"

namespace moreforge {

std::string_view to_string(Space s)
{
    switch (s) {
    case Space::World: return "world";
    case Space::Pixel: return "pixel";
    case Space::Normalized: return "normalized";
    }
    return "world";
}

void check_trajectory(const Trajectory2D& traj)
{
    if (traj.points.size() < 2) {
        throw Error(ErrorKind::DegenerateTraj, "trajectory needs at least 2 points");
    }
    for (std::size_t i = 1; i < traj.points.size(); ++i) {
        if (!(traj.points[i].t > traj.points[i - 1].t)) {
            throw Error(ErrorKind::DegenerateTraj, "t not strictly increasing at row " + std::to_string(i));
        }
    }
}

std::string trajectory_to_csv(const Trajectory2D& traj)
{
    std::string out = "# space: " + std::string(to_string(traj.space));
    if (traj.space == Space::Pixel && traj.frame_size) {
        out += " " + std::to_string(traj.frame_size->width) + "x" + std::to_string(traj.frame_size->height);
    }
    out += "\nt,x,y\n";
    for (const auto& p : traj.points) {
        out += format_number(p.t) + ',' + format_number(p.x) + ',' + format_number(p.y) + '\n';
    }
    return out;
}

namespace {

void parse_space_comment(const std::string& line, Trajectory2D& traj)
{
    const std::string key = "# space:";
    if (line.rfind(key, 0) != 0) {
        return;
    }
    std::istringstream in(line.substr(key.size()));
    std::string name;
    in >> name;
    if (name == "world") {
        traj.space = Space::World;
    } else if (name == "normalized") {
        traj.space = Space::Normalized;
    } else if (name == "pixel") {
        traj.space = Space::Pixel;
        std::string size;
        if (in >> size) {
            int w = 0, h = 0;
            char x = 0;
            std::istringstream sz(size);
            if (!(sz >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0) {
                throw Error(ErrorKind::Syntax, "bad frame size '" + size + "'");
            }
            traj.frame_size = FrameSize{w, h};
        }
    } else {
        throw Error(ErrorKind::Syntax, "unknown trajectory space '" + name + "'");
    }
}

} // namespace

Trajectory2D trajectory_from_csv(std::string_view text)
{
    Trajectory2D traj;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            parse_space_comment(line, traj);
            continue;
        }
        if (line == "t,x,y") {
            continue;
        }
        double v[3];
        const char* p = line.c_str();
        for (int i = 0; i < 3; ++i) {
            char* end = nullptr;
            v[i] = std::strtod(p, &end);
            const char expect = i < 2 ? ',' : '\0';
            if (end == p || *end != expect) {
                throw Error(ErrorKind::Syntax, "bad trajectory row on line " + std::to_string(line_no));
            }
            p = end + 1;
        }
        traj.points.push_back({v[0], v[1], v[2]});
    }
    return traj;
}

} // namespace moreforge

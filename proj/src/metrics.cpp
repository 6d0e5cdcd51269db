#include "moreforge/metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "moreforge/render.hpp"

namespace moreforge {

namespace {

std::vector<Vec2> points_of(const Trajectory2D& t)
{
    std::vector<Vec2> out;
    out.reserve(t.points.size());
    for (const auto& p : t.points) {
        out.push_back({p.x, p.y});
    }
    return out;
}

void require_same_space(const Trajectory2D& a, const Trajectory2D& b)
{
    if (a.space != b.space) {
        throw Error(ErrorKind::SpaceMismatch, std::string("cannot compare ") + std::string(to_string(a.space)) +
                                                  " with " + std::string(to_string(b.space)) + " trajectory");
    }
}

} // namespace

DtwResult dtw_points(const std::vector<Vec2>& a, const std::vector<Vec2>& b)
{
    if (a.empty() || b.empty()) {
        throw Error(ErrorKind::EmptyInput, "dtw needs non-empty sequences");
    }
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost((n + 1) * (m + 1), inf);
    std::vector<std::size_t> len((n + 1) * (m + 1), 0);
    auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
    cost[at(0, 0)] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const double local = (a[i - 1] - b[j - 1]).length();
            std::size_t best = at(i - 1, j - 1);
            if (cost[at(i - 1, j)] < cost[best]) {
                best = at(i - 1, j);
            }
            if (cost[at(i, j - 1)] < cost[best]) {
                best = at(i, j - 1);
            }
            cost[at(i, j)] = local + cost[best];
            len[at(i, j)] = len[best] + 1;
        }
    }
    return {cost[at(n, m)], len[at(n, m)]};
}

double dtw(const Trajectory2D& a, const Trajectory2D& b)
{
    require_same_space(a, b);
    return dtw_points(points_of(a), points_of(b)).cost;
}

namespace {

struct Bounds {
    Vec2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

    void add(const Trajectory2D& t)
    {
        for (const auto& p : t.points) {
            min = {std::min(min.x, p.x), std::min(min.y, p.y)};
            max = {std::max(max.x, p.x), std::max(max.y, p.y)};
        }
    }
    double scale() const { return std::max(max.x - min.x, max.y - min.y); }
};

Trajectory2D normalize_with(const Trajectory2D& a, const Bounds& bb)
{
    const double s = bb.scale();
    Trajectory2D out;
    out.space = Space::Normalized;
    out.points.reserve(a.points.size());
    for (const auto& p : a.points) {
        out.points.push_back({p.t, (p.x - bb.min.x) / s, (p.y - bb.min.y) / s});
    }
    return out;
}

} // namespace

Trajectory2D normalize_traj(const Trajectory2D& a)
{
    if (a.points.empty()) {
        throw Error(ErrorKind::DegenerateTraj, "empty trajectory");
    }
    Bounds bb;
    bb.add(a);
    if (!(bb.scale() > 0.0)) {
        throw Error(ErrorKind::DegenerateTraj, "trajectory bounding box is a single point");
    }
    return normalize_with(a, bb);
}

double dtw_n(const Trajectory2D& a, const Trajectory2D& b)
{
    require_same_space(a, b);
    const auto r = dtw_points(points_of(normalize_traj(a)), points_of(normalize_traj(b)));
    return r.cost / static_cast<double>(r.path_length);
}

std::vector<Vec2> resample(const Trajectory2D& a, int m)
{
    if (a.points.size() < 2 || m < 2) {
        throw Error(ErrorKind::DegenerateTraj, "resampling needs at least 2 points");
    }
    const auto& p = a.points;
    const double t0 = p.front().t;
    const double t1 = p.back().t;
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(m));
    std::size_t seg = 0;
    for (int k = 0; k < m; ++k) {
        const double t = k == m - 1 ? t1 : t0 + (t1 - t0) * k / (m - 1);
        while (seg + 2 < p.size() && p[seg + 1].t < t) {
            ++seg;
        }
        const double span = p[seg + 1].t - p[seg].t;
        const double f = span > 0.0 ? std::clamp((t - p[seg].t) / span, 0.0, 1.0) : 0.0;
        out.push_back({p[seg].x + (p[seg + 1].x - p[seg].x) * f, p[seg].y + (p[seg + 1].y - p[seg].y) * f});
    }
    return out;
}

namespace {

Eigen::MatrixX2d standardized(const std::vector<Vec2>& pts)
{
    Eigen::MatrixX2d m(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = pts[i].x;
        m(static_cast<Eigen::Index>(i), 1) = pts[i].y;
    }
    m.rowwise() -= m.colwise().mean();
    const double norm = m.norm();
    if (!(norm > 1e-300)) {
        throw Error(ErrorKind::DegenerateTraj, "trajectory collapses to a point");
    }
    return m / norm;
}

} // namespace

double procrustes(const Trajectory2D& a, const Trajectory2D& b, int m)
{
    require_same_space(a, b);
    const auto A = standardized(resample(a, m));
    const auto B = standardized(resample(b, m));
    const Eigen::Matrix2d cov = A.transpose() * B;
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov);
    const double trace = svd.singularValues().sum();
    return std::clamp(2.0 - 2.0 * trace, 0.0, 2.0);
}

MetricRow evaluate_pair(const Trajectory2D& gt, const Trajectory2D& est, int m)
{
    require_same_space(gt, est);
    check_trajectory(gt);
    check_trajectory(est);
    MetricRow row;
    row.dtw = dtw(gt, est);
    Bounds bg, be;
    bg.add(gt);
    be.add(est);
    if (bg.scale() > 0.0 && be.scale() > 0.0) {
        row.dtw_n = dtw_n(gt, est);
        row.procrustes = procrustes(gt, est, m);
        return row;
    }
    // Static object: one shared frame for both, and no shape to align.
    Bounds u = bg;
    u.add(est);
    if (!(u.scale() > 0.0)) {
        row.dtw_n = 0.0;
        row.procrustes = 0.0;
        return row;
    }
    const auto ng = normalize_with(gt, u);
    const auto ne = normalize_with(est, u);
    const auto r = dtw_points(points_of(ng), points_of(ne));
    row.dtw_n = r.cost / static_cast<double>(r.path_length);
    // No unit scaling here: a point has no shape to scale. Centred residual
    // after the best orthogonal map, per resampled point.
    auto centred = [m](const Trajectory2D& t) {
        const auto pts = resample(t, m);
        Eigen::MatrixX2d mat(static_cast<Eigen::Index>(pts.size()), 2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            mat(static_cast<Eigen::Index>(i), 0) = pts[i].x;
            mat(static_cast<Eigen::Index>(i), 1) = pts[i].y;
        }
        mat.rowwise() -= mat.colwise().mean();
        return mat;
    };
    const auto A = centred(ng);
    const auto B = centred(ne);
    const Eigen::Matrix2d cov = A.transpose() * B;
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov);
    const double residual = A.squaredNorm() + B.squaredNorm() - 2.0 * svd.singularValues().sum();
    row.procrustes = std::clamp(residual / m, 0.0, 2.0);
    return row;
}

std::string key_object(const ScenarioSpec& spec, const TelemetrySeries& telemetry)
{
    double best = -1.0;
    std::string id;
    for (std::size_t b = 0; b < telemetry.body_ids.size(); ++b) {
        const auto idx = spec.body_index(telemetry.body_ids[b]);
        if (idx && spec.bodies[*idx].is_static) {
            continue;
        }
        double path = 0.0;
        const auto& s = telemetry.samples[b];
        for (std::size_t k = 1; k < s.size(); ++k) {
            path += std::hypot(s[k].x - s[k - 1].x, s[k].y - s[k - 1].y);
        }
        if (path > best + 1e-12) {
            best = path;
            id = telemetry.body_ids[b];
        }
    }
    if (id.empty()) {
        throw Error(ErrorKind::MissingObject, "no dynamic body in telemetry");
    }
    return id;
}

Trajectory2D ground_truth(const ScenarioSpec& spec, const TelemetrySeries& gt, std::size_t body, Space space)
{
    const int stride = frame_stride(spec.dt_s, spec.render.fps);
    if (space == Space::Pixel) {
        return project_body(spec, gt, body, stride);
    }
    Trajectory2D out;
    out.space = Space::World;
    const auto& s = gt.samples.at(body);
    for (std::size_t k = 0; k < s.size(); k += static_cast<std::size_t>(stride)) {
        out.points.push_back({s[k].t, s[k].x, s[k].y});
    }
    return space == Space::Normalized ? normalize_traj(out) : out;
}

MetricRow evaluate_pair(const ScenarioSpec& spec, const TelemetrySeries& gt, const Trajectory2D& est,
                        std::optional<std::string> key, int m)
{
    const std::string id = key ? *key : key_object(spec, gt);
    const auto idx = gt.body_index(id);
    if (!idx) {
        throw Error(ErrorKind::MissingObject, "object '" + id + "' not in telemetry");
    }
    auto row = evaluate_pair(ground_truth(spec, gt, *idx, est.space), est, m);
    row.phenomenon = std::string(to_string(spec.phenomenon));
    row.object = id;
    return row;
}

Stat mean_std(const std::vector<double>& values)
{
    if (values.empty()) {
        throw Error(ErrorKind::EmptyInput, "no values");
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    Stat s;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) {
            sq += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

namespace {

GroupStats group_of(const std::vector<const MetricRow*>& rows)
{
    std::vector<double> d, n, p;
    for (const auto* r : rows) {
        d.push_back(r->dtw);
        n.push_back(r->dtw_n);
        p.push_back(r->procrustes);
    }
    return {rows.size(), mean_std(d), mean_std(n), mean_std(p)};
}

} // namespace

MetricReport aggregate(std::vector<MetricRow> rows, int m)
{
    if (rows.empty()) {
        throw Error(ErrorKind::EmptyInput, "no metric rows to aggregate");
    }
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.phenomenon, a.entry, a.object, a.dtw, a.dtw_n, a.procrustes) <
               std::tie(b.phenomenon, b.entry, b.object, b.dtw, b.dtw_n, b.procrustes);
    });
    MetricReport report;
    report.resample = m;
    std::map<std::string, std::vector<const MetricRow*>> by_class;
    std::vector<const MetricRow*> all;
    for (const auto& r : rows) {
        by_class[r.phenomenon].push_back(&r);
        all.push_back(&r);
    }
    for (const auto& [name, members] : by_class) {
        report.classes[name] = group_of(members);
    }
    report.overall = group_of(all);
    report.rows = std::move(rows);
    return report;
}

namespace {

Json stat_json(const Stat& s)
{
    return Json{{"mean", s.mean}, {"std", s.std}};
}

Json group_json(const GroupStats& g)
{
    return Json{{"count", g.count}, {"dtw", stat_json(g.dtw)}, {"dtw_n", stat_json(g.dtw_n)},
                {"procrustes", stat_json(g.procrustes)}};
}

Stat stat_from(const Json& j)
{
    return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

GroupStats group_from(const Json& j)
{
    return {j.at("count").get<std::size_t>(), stat_from(j.at("dtw")), stat_from(j.at("dtw_n")),
            stat_from(j.at("procrustes"))};
}

} // namespace

Json report_to_json(const MetricReport& report)
{
    Json rows = Json::array();
    for (const auto& r : report.rows) {
        rows.push_back(Json{{"entry", r.entry},
                            {"phenomenon", r.phenomenon},
                            {"object", r.object},
                            {"dtw", quantize(r.dtw)},
                            {"dtw_n", quantize(r.dtw_n)},
                            {"procrustes", quantize(r.procrustes)}});
    }
    Json classes = Json::object();
    for (const auto& [name, g] : report.classes) {
        classes[name] = group_json(g);
    }
    return Json{{"rows", rows},
                {"classes", classes},
                {"overall", group_json(report.overall)},
                {"resample", report.resample},
                {"normalization", report.normalization}};
}

MetricReport report_from_json(const Json& doc)
{
    try {
        MetricReport r;
        for (const auto& row : doc.at("rows")) {
            r.rows.push_back({row.at("entry").get<std::string>(), row.at("phenomenon").get<std::string>(),
                              row.at("object").get<std::string>(), row.at("dtw").get<double>(),
                              row.at("dtw_n").get<double>(), row.at("procrustes").get<double>()});
        }
        for (const auto& [name, g] : doc.at("classes").items()) {
            r.classes[name] = group_from(g);
        }
        r.overall = group_from(doc.at("overall"));
        r.resample = doc.at("resample").get<int>();
        r.normalization = doc.at("normalization").get<std::string>();
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("bad metric report: ") + e.what());
    }
}

namespace {

std::string pm(const Stat& s)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g ± %.4g", s.mean, s.std);
    return buf;
}

std::vector<std::vector<std::string>> table_cells(const MetricReport& report)
{
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"class", "n", "DTW", "DTW-N", "Procrustes"});
    for (const auto& [name, g] : report.classes) {
        cells.push_back({name.empty() ? "(none)" : name, std::to_string(g.count), pm(g.dtw), pm(g.dtw_n),
                         pm(g.procrustes)});
    }
    const auto& o = report.overall;
    cells.push_back({"overall", std::to_string(o.count), pm(o.dtw), pm(o.dtw_n), pm(o.procrustes)});
    return cells;
}

// Display width; the ± sign is two bytes but one column.
std::size_t columns(const std::string& s)
{
    std::size_t n = 0;
    for (unsigned char c : s) {
        n += (c & 0xC0) != 0x80;
    }
    return n;
}

} // namespace

std::string report_table(const MetricReport& report)
{
    const auto cells = table_cells(report);
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], columns(row[i]));
        }
    }
    std::string out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i) {
            const auto pad = width[i] - columns(cells[r][i]);
            if (i == 0) {
                out += cells[r][i] + std::string(pad, ' ');
            } else {
                out += "  " + std::string(pad, ' ') + cells[r][i];
            }
        }
        out += '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : width) {
                total += w + 2;
            }
            out += std::string(total - 2, '-') + '\n';
        }
    }
    return out;
}

std::string report_markdown(const MetricReport& report)
{
    const auto cells = table_cells(report);
    std::string out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        out += "|";
        for (const auto& c : cells[r]) {
            out += " " + c + " |";
        }
        out += '\n';
        if (r == 0) {
            out += "|---|---:|---:|---:|---:|\n";
        }
    }
    return out;
}

} // namespace moreforge

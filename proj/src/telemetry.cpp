#include "moreforge/telemetry.hpp"

#include <charconv>
#include <cstdlib>

namespace moreforge {

std::optional<std::size_t> TelemetrySeries::body_index(std::string_view id) const
{
    for (std::size_t i = 0; i < body_ids.size(); ++i) {
        if (body_ids[i] == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::string telemetry_to_csv(const TelemetrySeries& series)
{
    std::string out(kTelemetryHeader);
    out += '\n';
    const std::size_t n = series.sample_count();
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t b = 0; b < series.body_ids.size(); ++b) {
            const Sample& s = series.samples[b][k];
            out += std::to_string(s.step);
            for (double v : {s.t}) {
                out += ',' + format_number(v);
            }
            out += ',' + series.body_ids[b];
            for (double v : {s.x, s.y, s.angle, s.vx, s.vy, s.omega}) {
                out += ',' + format_number(v);
            }
            out += '\n';
        }
    }
    return out;
}

std::string events_to_csv(const TelemetrySeries& series)
{
    std::string out(kEventsHeader);
    out += '\n';
    for (const auto& e : series.events) {
        out += std::to_string(e.step) + ',' + e.body_a + ',' + e.body_b + ',' + format_number(e.normal.x) + ',' +
               format_number(e.normal.y) + ',' + format_number(e.impulse) + '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

double to_double(std::string_view s, std::size_t line_no)
{
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
        throw Error(ErrorKind::Syntax, "bad number '" + tmp + "' on line " + std::to_string(line_no));
    }
    return v;
}

long to_long(std::string_view s, std::size_t line_no)
{
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorKind::Syntax, "bad integer '" + std::string(s) + "' on line " + std::to_string(line_no));
    }
    return v;
}

template <typename F>
void for_each_line(std::string_view text, F&& f)
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        if (!line.empty()) {
            f(line, line_no);
        }
        pos = nl + 1;
    }
}

} // namespace

TelemetrySeries telemetry_from_csv(std::string_view text, double dt_s, std::string_view events_csv)
{
    TelemetrySeries series;
    series.dt_s = dt_s;
    bool header = true;
    long current = -1;
    std::size_t slot = 0;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (header) {
            if (line != kTelemetryHeader) {
                throw Error(ErrorKind::Syntax, "unexpected telemetry header");
            }
            header = false;
            return;
        }
        const auto f = split_fields(line);
        if (f.size() != 9) {
            throw Error(ErrorKind::Syntax, "expected 9 fields on line " + std::to_string(line_no));
        }
        const long step = to_long(f[0], line_no);
        const std::string id(f[2]);
        if (step != current) {
            if (current >= 0 && slot != series.body_ids.size()) {
                throw Error(ErrorKind::TelemetryIncomplete, "step " + std::to_string(current) + " is missing bodies");
            }
            if (step != current + 1) {
                throw Error(ErrorKind::TelemetryIncomplete, "step " + std::to_string(step) + " out of sequence");
            }
            current = step;
            slot = 0;
        }
        if (step == 0) {
            series.body_ids.push_back(id);
            series.samples.emplace_back();
        } else if (slot >= series.body_ids.size() || series.body_ids[slot] != id) {
            throw Error(ErrorKind::TelemetryIncomplete, "body order changes at step " + std::to_string(step));
        }
        Sample s;
        s.step = step;
        s.t = static_cast<double>(step) * dt_s;
        s.x = to_double(f[3], line_no);
        s.y = to_double(f[4], line_no);
        s.angle = to_double(f[5], line_no);
        s.vx = to_double(f[6], line_no);
        s.vy = to_double(f[7], line_no);
        s.omega = to_double(f[8], line_no);
        series.samples[slot].push_back(s);
        ++slot;
    });
    if (header) {
        throw Error(ErrorKind::TelemetryIncomplete, "telemetry is empty");
    }
    if (current >= 0 && slot != series.body_ids.size()) {
        throw Error(ErrorKind::TelemetryIncomplete, "last step is missing bodies");
    }

    header = true;
    for_each_line(events_csv, [&](std::string_view line, std::size_t line_no) {
        if (header) {
            if (line != kEventsHeader) {
                throw Error(ErrorKind::Syntax, "unexpected events header");
            }
            header = false;
            return;
        }
        const auto f = split_fields(line);
        if (f.size() != 6) {
            throw Error(ErrorKind::Syntax, "expected 6 fields on events line " + std::to_string(line_no));
        }
        series.events.push_back({to_long(f[0], line_no), std::string(f[1]), std::string(f[2]),
                                 {to_double(f[3], line_no), to_double(f[4], line_no)}, to_double(f[5], line_no)});
    });
    return series;
}

void require_complete(const TelemetrySeries& series, const ScenarioSpec& spec)
{
    const auto expected = static_cast<std::size_t>(step_count(spec.duration_s, spec.dt_s)) + 1;
    if (series.body_ids.size() != spec.bodies.size()) {
        throw Error(ErrorKind::TelemetryIncomplete, "telemetry has " + std::to_string(series.body_ids.size()) +
                                                        " bodies, spec has " + std::to_string(spec.bodies.size()));
    }
    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        if (series.body_ids[i] != spec.bodies[i].id) {
            throw Error(ErrorKind::TelemetryIncomplete, "body '" + spec.bodies[i].id + "' missing from telemetry");
        }
        if (series.samples[i].size() != expected) {
            throw Error(ErrorKind::TelemetryIncomplete,
                        "telemetry incomplete: " + std::to_string(series.samples[i].size()) + " of " +
                            std::to_string(expected) + " samples");
        }
    }
}

TelemetrySeries quantized(const TelemetrySeries& series)
{
    TelemetrySeries out = series;
    for (auto& body : out.samples) {
        for (auto& s : body) {
            for (double* v : {&s.x, &s.y, &s.angle, &s.vx, &s.vy, &s.omega}) {
                *v = quantize(*v);
            }
        }
    }
    for (auto& e : out.events) {
        e.normal = {quantize(e.normal.x), quantize(e.normal.y)};
        e.impulse = quantize(e.impulse);
    }
    return out;
}

} // namespace moreforge

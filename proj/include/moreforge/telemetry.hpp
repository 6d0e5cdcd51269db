#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "moreforge/spec.hpp"

namespace moreforge {

struct Sample {
    long step = 0;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double angle = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double omega = 0.0;
    bool operator==(const Sample&) const = default;
};

struct ContactEvent {
    long step = 0;
    std::string body_a;
    std::string body_b;
    Vec2 normal;
    double impulse = 0.0;
    bool operator==(const ContactEvent&) const = default;
};

struct TelemetrySeries {
    double dt_s = defaults::kDt;
    std::vector<std::string> body_ids;
    std::vector<std::vector<Sample>> samples; // [body][step]
    std::vector<ContactEvent> events;
    bool operator==(const TelemetrySeries&) const = default;

    std::size_t sample_count() const { return samples.empty() ? 0 : samples.front().size(); }
    std::optional<std::size_t> body_index(std::string_view id) const;
};

inline constexpr std::string_view kTelemetryHeader = "step,t,body_id,x,y,angle,vx,vy,omega";
inline constexpr std::string_view kEventsHeader = "step,body_a,body_b,nx,ny,impulse";

std::string telemetry_to_csv(const TelemetrySeries& series);
std::string events_to_csv(const TelemetrySeries& series);

/// Parses telemetry rows; t is recomputed as step * dt. Malformed rows are
/// SyntaxErrors; ragged or non-contiguous steps are TelemetryIncomplete.
TelemetrySeries telemetry_from_csv(std::string_view text, double dt_s, std::string_view events_csv = {});

/// Throws TelemetryIncomplete unless every spec body has
/// floor(duration/dt)+1 samples.
void require_complete(const TelemetrySeries& series, const ScenarioSpec& spec);

/// Values as they appear after a CSV write/read cycle.
TelemetrySeries quantized(const TelemetrySeries& series);

} // namespace moreforge

#pragma once

// Run bundles: stage-wise entry points that persist their artifacts, the
// parse -> simulate -> render -> evaluate -> refine loop, and suite benchmarks.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moreforge/evaluator.hpp"
#include "moreforge/metrics.hpp"
#include "moreforge/parser.hpp"
#include "moreforge/render.hpp"

namespace moreforge {

namespace fs = std::filesystem;

std::string_view tool_version();

namespace bundle {
inline constexpr std::string_view kSpec = "spec.json";
inline constexpr std::string_view kTrace = "trace.json";
inline constexpr std::string_view kTelemetry = "telemetry.csv";
inline constexpr std::string_view kEvents = "events.csv";
inline constexpr std::string_view kFrames = "frames";
inline constexpr std::string_view kReport = "report.json";
inline constexpr std::string_view kMetrics = "metrics.json";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kError = "error.json";
inline constexpr std::string_view kHistory = "history";
} // namespace bundle

/// Reads, parses and validates a spec file.
ScenarioSpec load_spec(const fs::path& path);

struct ParseOutput {
    ScenarioSpec spec;
    std::optional<ParseTrace> trace; // absent for external parses
    std::string source;              // "rules" or "external"
};

/// External parser when `parser_url` is set, falling back to the rule parser
/// on transport errors only.
ParseOutput parse_stage(std::string_view prompt, const std::optional<std::string>& parser_url = std::nullopt);

/// spec.json (+ trace.json) into `out`.
void write_parse(const ParseOutput& parsed, const fs::path& out);

/// Simulates and writes spec.json, telemetry.csv and events.csv. Returns the
/// telemetry as read back from the CSV. On divergence the partial telemetry
/// is written before the DivergenceError propagates.
TelemetrySeries simulate_stage(const ScenarioSpec& spec, const fs::path& out);

/// telemetry.csv (+ events.csv beside it) for a spec.
TelemetrySeries load_telemetry(const ScenarioSpec& spec, const fs::path& telemetry_csv);

/// Replaces out/frames with the rendered sequence. Throws TelemetryIncomplete.
FrameSequence render_stage(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const fs::path& out);

struct Evaluation {
    FeedbackReport report;
    std::vector<Trajectory2D> observed;  // rendered-centroid track per spec body
    std::optional<MetricReport> metrics; // absent when no body is visible
};

/// Tracks rendered centroids, runs every check, writes report.json and metrics.json.
Evaluation evaluate_stage(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const fs::path& out,
                          const std::string& entry = "run");

struct PipelineOptions {
    std::optional<std::string> prompt;
    std::optional<fs::path> spec_path;
    int iterations = kMaxIterations; // refinement rounds allowed after the first evaluation
    fs::path out;
    RefinementHook hook = default_refinement;
    std::string hook_label = "default"; // recorded in the manifest
    std::optional<std::string> parser_url;
    std::string entry = "run";
};

struct PipelineResult {
    ScenarioSpec spec; // the spec of the final evaluation
    TelemetrySeries telemetry;
    Evaluation evaluation;
    int refinements = 0;
    bool passed = false;
};

/// Runs the full loop and writes the bundle, including manifest.json. Module
/// errors propagate after error.json and the manifest are written.
PipelineResult run_pipeline(const PipelineOptions& options);

/// Hashes every file under `out` except the manifest itself.
Json manifest_json(const fs::path& out, const Json& inputs, const Json& timings);
void write_manifest(const fs::path& out, const Json& inputs, const Json& timings);

/// Checks each manifest hash against the file on disk; returns mismatching paths.
std::vector<std::string> verify_manifest(const fs::path& out);

Json error_json(const Error& err);
void write_error(const fs::path& out, const Error& err);

struct BenchOptions {
    fs::path suite;
    fs::path out;
    int jobs = 1;
    int iterations = kMaxIterations;
};

struct BenchRow {
    std::string entry;
    std::string phenomenon;
    bool passed = false;
    int refinements = 0;
    std::vector<std::string> failing_checks;
    MetricRow metrics; // key object
};

struct BenchFailure {
    std::string entry;
    std::string error; // ErrorKind name
    std::string message;
    int exit_code = 0;
};

struct BenchResult {
    std::vector<BenchRow> rows; // suite order
    std::optional<MetricReport> aggregate;
    std::vector<BenchFailure> failures;

    bool ok() const;
};

/// Suite entries: every *.json directly under the directory, sorted by name.
/// An optional <stem>.gt.csv next to an entry is used as ground truth for the
/// key object instead of the run's own telemetry.
std::vector<fs::path> suite_entries(const fs::path& suite);

BenchResult run_bench(const BenchOptions& options);

Json bench_to_json(const BenchResult& result);
std::string bench_markdown(const BenchResult& result);

/// Writes bench.json and bench.md into `out`.
void write_bench(const BenchResult& result, const fs::path& out);

} // namespace moreforge

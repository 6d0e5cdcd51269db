#include "moreforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>

#include "moreforge/engine.hpp"
#include "moreforge/io.hpp"

#ifndef MOREFORGE_VERSION
#define MOREFORGE_VERSION "0.0.0"
#endif

namespace moreforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message(), dir.string());
    }
}

void remove_path(const fs::path& p)
{
    std::error_code ec;
    fs::remove_all(p, ec);
}

std::string dump(const Json& j) { return canonical_dump(j) + "\n"; }

} // namespace

std::string_view tool_version() { return MOREFORGE_VERSION; }

ScenarioSpec load_spec(const fs::path& path)
{
    ScenarioSpec spec = parse_spec(read_file(path));
    require_valid(spec);
    return spec;
}

ParseOutput parse_stage(std::string_view prompt, const std::optional<std::string>& parser_url)
{
    if (parser_url && !parser_url->empty()) {
        try {
            return {external_parse(prompt, *parser_url), std::nullopt, "external"};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Transport) {
                throw;
            }
        }
    }
    auto r = parse_prompt(prompt);
    return {std::move(r.spec), std::move(r.trace), "rules"};
}

void write_parse(const ParseOutput& parsed, const fs::path& out)
{
    ensure_dir(out);
    write_file(out / bundle::kSpec, serialize_spec(parsed.spec));
    if (parsed.trace) {
        write_file(out / bundle::kTrace, dump(trace_to_json(*parsed.trace)));
    } else {
        remove_path(out / bundle::kTrace);
    }
}

TelemetrySeries simulate_stage(const ScenarioSpec& spec, const fs::path& out)
{
    ensure_dir(out);
    write_file(out / bundle::kSpec, serialize_spec(spec));
    TelemetrySeries series;
    try {
        series = quantized(simulate(spec));
    } catch (const DivergenceError& e) {
        const auto partial = quantized(e.partial);
        write_file(out / bundle::kTelemetry, telemetry_to_csv(partial));
        write_file(out / bundle::kEvents, events_to_csv(partial));
        throw;
    }
    const std::string csv = telemetry_to_csv(series);
    const std::string events = events_to_csv(series);
    write_file(out / bundle::kTelemetry, csv);
    write_file(out / bundle::kEvents, events);
    // Downstream stages only ever see what a reader of the bundle would see.
    return telemetry_from_csv(csv, spec.dt_s, events);
}

TelemetrySeries load_telemetry(const ScenarioSpec& spec, const fs::path& telemetry_csv)
{
    const std::string csv = read_file(telemetry_csv);
    const fs::path events_path = telemetry_csv.parent_path() / bundle::kEvents;
    const std::string events = fs::exists(events_path) ? read_file(events_path) : std::string();
    return telemetry_from_csv(csv, spec.dt_s, events);
}

FrameSequence render_stage(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const fs::path& out)
{
    require_complete(telemetry, spec);
    const fs::path frames = out / bundle::kFrames;
    remove_path(frames);
    return render_sequence(spec, telemetry, frames);
}

Evaluation evaluate_stage(const ScenarioSpec& spec, const TelemetrySeries& telemetry, const fs::path& out,
                          const std::string& entry)
{
    require_complete(telemetry, spec);
    ensure_dir(out);
    Evaluation ev;
    ev.observed = track_centroids(spec, telemetry);
    ev.report = synthesize_feedback(compare_trajectories(spec, telemetry, ev.observed), check_physics(spec, telemetry),
                                    check_intent(spec, telemetry));

    std::vector<MetricRow> rows;
    for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
        if (spec.bodies[b].is_static || ev.observed[b].size() < 2) {
            continue;
        }
        try {
            auto row = evaluate_pair(spec, telemetry, ev.observed[b], spec.bodies[b].id);
            row.entry = entry;
            rows.push_back(std::move(row));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateTraj) {
                throw;
            }
        }
    }
    write_file(out / bundle::kReport, dump(feedback_to_json(ev.report)));
    if (rows.empty()) {
        remove_path(out / bundle::kMetrics);
    } else {
        ev.metrics = aggregate(std::move(rows));
        write_file(out / bundle::kMetrics, dump(report_to_json(*ev.metrics)));
    }
    return ev;
}

Json error_json(const Error& err)
{
    Json violations = Json::array();
    for (const auto& v : err.violations) {
        violations.push_back({{"path", v.path}, {"observed", v.observed}, {"allowed", v.allowed}});
    }
    Json j{{"error", std::string(to_string(err.kind()))},
           {"exit_code", exit_code(err.kind())},
           {"message", err.what()},
           {"violations", violations}};
    if (!err.path().empty()) {
        j["path"] = err.path();
    }
    if (err.step >= 0) {
        j["step"] = err.step;
    }
    return j;
}

void write_error(const fs::path& out, const Error& err)
{
    ensure_dir(out);
    write_file(out / bundle::kError, dump(error_json(err)));
}

Json manifest_json(const fs::path& out, const Json& inputs, const Json& timings)
{
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (!e.is_regular_file()) {
            continue;
        }
        const std::string rel = fs::relative(e.path(), out).generic_string();
        if (rel != bundle::kManifest) {
            files.push_back(rel);
        }
    }
    std::sort(files.begin(), files.end());
    Json hashes = Json::object();
    for (const auto& f : files) {
        hashes[f] = sha256_hex(read_file(out / f));
    }
    return Json{{"tool", "moreforge"},
                {"version", std::string(tool_version())},
                {"inputs", inputs},
                {"files", hashes},
                {"timings_s", timings}};
}

void write_manifest(const fs::path& out, const Json& inputs, const Json& timings)
{
    write_file(out / bundle::kManifest, dump(manifest_json(out, inputs, timings)));
}

std::vector<std::string> verify_manifest(const fs::path& out)
{
    const Json doc = Json::parse(read_file(out / bundle::kManifest));
    std::vector<std::string> bad;
    for (const auto& [rel, hash] : doc.at("files").items()) {
        const fs::path p = out / rel;
        if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) {
            bad.push_back(rel);
        }
    }
    return bad;
}

PipelineResult run_pipeline(const PipelineOptions& o)
{
    if (o.prompt.has_value() == o.spec_path.has_value()) {
        throw Error(ErrorKind::Usage, "exactly one of prompt and spec path is required");
    }
    if (o.iterations < 0 || o.iterations > kMaxIterations) {
        throw Error(ErrorKind::Usage,
                    "iterations must be in [0, " + std::to_string(kMaxIterations) + "], got " + std::to_string(o.iterations));
    }
    ensure_dir(o.out);
    remove_path(o.out / bundle::kError);
    remove_path(o.out / bundle::kHistory);

    Json inputs = Json::object();
    inputs["iterations"] = o.iterations;
    inputs["hook"] = o.hook_label;
    if (o.prompt) {
        inputs["prompt"] = *o.prompt;
        inputs["prompt_sha256"] = sha256_hex(*o.prompt);
    } else {
        inputs["spec_path"] = o.spec_path->generic_string();
    }
    std::map<std::string, double> timings{{"parse", 0.0}, {"simulate", 0.0}, {"render", 0.0}, {"evaluate", 0.0}};
    auto timings_json = [&] {
        Json t = Json::object();
        for (const auto& [k, v] : timings) {
            t[k] = v;
        }
        return t;
    };

    PipelineResult result;
    try {
        auto t0 = Clock::now();
        if (o.prompt) {
            auto parsed = parse_stage(*o.prompt, o.parser_url);
            inputs["parser"] = parsed.source;
            write_parse(parsed, o.out);
            result.spec = std::move(parsed.spec);
        } else {
            const std::string text = read_file(*o.spec_path);
            inputs["spec_sha256"] = sha256_hex(text);
            result.spec = parse_spec(text);
            require_valid(result.spec);
            remove_path(o.out / bundle::kTrace);
        }
        timings["parse"] += seconds_since(t0);

        for (int round = 0;; ++round) {
            const fs::path hist = o.out / bundle::kHistory / ("iter_" + std::to_string(round));
            ensure_dir(hist);
            write_file(hist / bundle::kSpec, serialize_spec(result.spec));

            bool diverged = false;
            t0 = Clock::now();
            try {
                result.telemetry = simulate_stage(result.spec, o.out);
            } catch (const DivergenceError& e) {
                diverged = true;
                result.evaluation = Evaluation{divergence_report(result.spec, e), {}, std::nullopt};
                remove_path(o.out / bundle::kFrames);
                remove_path(o.out / bundle::kMetrics);
                write_file(o.out / bundle::kReport, dump(feedback_to_json(result.evaluation.report)));
            }
            timings["simulate"] += seconds_since(t0);

            if (!diverged) {
                t0 = Clock::now();
                render_stage(result.spec, result.telemetry, o.out);
                timings["render"] += seconds_since(t0);
                t0 = Clock::now();
                result.evaluation = evaluate_stage(result.spec, result.telemetry, o.out, o.entry);
                timings["evaluate"] += seconds_since(t0);
            }
            write_file(hist / bundle::kReport, dump(feedback_to_json(result.evaluation.report)));

            result.passed = result.evaluation.report.overall;
            if (result.passed || round >= o.iterations) {
                break;
            }
            result.spec = refine(result.spec, result.evaluation.report, o.hook ? o.hook : default_refinement);
            ++result.refinements;
        }
        inputs["refinements"] = result.refinements;
        inputs["passed"] = result.passed;
        write_manifest(o.out, inputs, timings_json());
    } catch (const Error& e) {
        write_error(o.out, e);
        write_manifest(o.out, inputs, timings_json());
        throw;
    }
    return result;
}

// --- bench ----------------------------------------------------------------

bool BenchResult::ok() const
{
    return failures.empty() && std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.passed; });
}

std::vector<fs::path> suite_entries(const fs::path& suite)
{
    if (!fs::is_directory(suite)) {
        throw Error(ErrorKind::Io, "suite directory not found: " + suite.string(), suite.string());
    }
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(suite)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) {
        throw Error(ErrorKind::EmptyInput, "suite has no *.json entries: " + suite.string(), suite.string());
    }
    return out;
}

namespace {

struct EntryOutcome {
    std::optional<BenchRow> row;
    std::optional<BenchFailure> failure;
};

EntryOutcome run_entry(const fs::path& spec_path, const BenchOptions& o)
{
    const std::string entry = spec_path.stem().string();
    EntryOutcome outcome;
    try {
        PipelineOptions po;
        po.spec_path = spec_path;
        po.iterations = o.iterations;
        po.out = o.out / entry;
        po.entry = entry;
        const auto r = run_pipeline(po);

        BenchRow row;
        row.entry = entry;
        row.phenomenon = std::string(to_string(r.spec.phenomenon));
        row.passed = r.passed;
        row.refinements = r.refinements;
        row.failing_checks = r.evaluation.report.failing_checks();

        const std::string key = key_object(r.spec, r.telemetry);
        const fs::path gt_path = spec_path.parent_path() / (entry + ".gt.csv");
        if (fs::exists(gt_path)) {
            const Trajectory2D gt = trajectory_from_csv(read_file(gt_path));
            const auto idx = r.spec.body_index(key);
            const Trajectory2D est = gt.space == Space::Pixel
                                         ? r.evaluation.observed[*idx]
                                         : ground_truth(r.spec, r.telemetry, *r.telemetry.body_index(key), gt.space);
            row.metrics = evaluate_pair(gt, est);
        } else {
            bool found = false;
            if (r.evaluation.metrics) {
                for (const auto& m : r.evaluation.metrics->rows) {
                    if (m.object == key) {
                        row.metrics = m;
                        found = true;
                    }
                }
            }
            if (!found) {
                throw Error(ErrorKind::MissingObject, "key object '" + key + "' was not tracked in the rendered frames");
            }
        }
        row.metrics.entry = entry;
        row.metrics.phenomenon = row.phenomenon;
        row.metrics.object = key;
        outcome.row = std::move(row);
    } catch (const Error& e) {
        outcome.failure = BenchFailure{entry, std::string(to_string(e.kind())), e.what(), exit_code(e.kind())};
    } catch (const std::exception& e) {
        outcome.failure = BenchFailure{entry, "Internal", e.what(), 1};
    }
    return outcome;
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(4);
    s << std::scientific << v;
    return s.str();
}

} // namespace

BenchResult run_bench(const BenchOptions& o)
{
    if (o.jobs < 1) {
        throw Error(ErrorKind::Usage, "--jobs must be at least 1");
    }
    const auto entries = suite_entries(o.suite);
    ensure_dir(o.out);

    std::vector<EntryOutcome> outcomes(entries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            outcomes[i] = run_entry(entries[i], o);
        }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(o.jobs), entries.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    BenchResult result;
    std::vector<MetricRow> metric_rows;
    for (auto& oc : outcomes) {
        if (oc.row) {
            metric_rows.push_back(oc.row->metrics);
            result.rows.push_back(std::move(*oc.row));
        } else {
            result.failures.push_back(std::move(*oc.failure));
        }
    }
    if (!metric_rows.empty()) {
        result.aggregate = aggregate(std::move(metric_rows));
    }
    return result;
}

Json bench_to_json(const BenchResult& r)
{
    Json entries = Json::array();
    std::size_t passed = 0;
    for (const auto& row : r.rows) {
        passed += row.passed ? 1 : 0;
        entries.push_back({{"entry", row.entry},
                           {"phenomenon", row.phenomenon},
                           {"object", row.metrics.object},
                           {"passed", row.passed},
                           {"refinements", row.refinements},
                           {"failing_checks", row.failing_checks},
                           {"dtw", row.metrics.dtw},
                           {"dtw_n", row.metrics.dtw_n},
                           {"procrustes", row.metrics.procrustes}});
    }
    Json failures = Json::array();
    for (const auto& f : r.failures) {
        failures.push_back(
            {{"entry", f.entry}, {"error", f.error}, {"message", f.message}, {"exit_code", f.exit_code}});
    }
    return Json{{"entries", entries},
                {"aggregate", r.aggregate ? report_to_json(*r.aggregate) : Json(nullptr)},
                {"failures", failures},
                {"passed", passed},
                {"total", r.rows.size() + r.failures.size()}};
}

std::string bench_markdown(const BenchResult& r)
{
    std::ostringstream md;
    md << "| entry | class | object | passed | refinements | DTW | DTW-N | Procrustes | failing checks |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    std::size_t passed = 0;
    for (const auto& row : r.rows) {
        passed += row.passed ? 1 : 0;
        std::string failing;
        for (const auto& f : row.failing_checks) {
            failing += (failing.empty() ? "" : ", ") + f;
        }
        md << "| " << row.entry << " | " << row.phenomenon << " | " << row.metrics.object << " | "
           << (row.passed ? "yes" : "no") << " | " << row.refinements << " | " << fmt(row.metrics.dtw) << " | "
           << fmt(row.metrics.dtw_n) << " | " << fmt(row.metrics.procrustes) << " | " << failing << " |\n";
    }
    if (r.aggregate) {
        const auto& o = r.aggregate->overall;
        md << "| overall | | | " << passed << "/" << r.rows.size() << " | | " << fmt(o.dtw.mean) << " ± "
           << fmt(o.dtw.std) << " | " << fmt(o.dtw_n.mean) << " ± " << fmt(o.dtw_n.std) << " | "
           << fmt(o.procrustes.mean) << " ± " << fmt(o.procrustes.std) << " | |\n";
        md << "\n## Per class\n\n" << report_markdown(*r.aggregate);
    }
    if (!r.failures.empty()) {
        md << "\n## Failures\n\n| entry | error | exit | message |\n|---|---|---|---|\n";
        for (const auto& f : r.failures) {
            md << "| " << f.entry << " | " << f.error << " | " << f.exit_code << " | " << f.message << " |\n";
        }
    }
    return md.str();
}

void write_bench(const BenchResult& result, const fs::path& out)
{
    ensure_dir(out);
    write_file(out / "bench.json", dump(bench_to_json(result)));
    write_file(out / "bench.md", bench_markdown(result));
}

} // namespace moreforge

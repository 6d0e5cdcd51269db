// moreforge command-line entry point.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "moreforge/io.hpp"
#include "moreforge/pipeline.hpp"

using namespace moreforge;

namespace {

std::optional<std::string> env(const char* name)
{
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
        return std::nullopt;
    }
    return std::string(v);
}

void print_summary(const FeedbackReport& report)
{
    for (const auto& line : report.summary_lines) {
        std::cout << line << "\n";
    }
}

std::string format_metrics(const MetricReport& report, const std::string& format)
{
    if (format == "json") {
        return canonical_dump(report_to_json(report)) + "\n";
    }
    return report_markdown(report);
}

void write_metrics_file(const std::optional<std::string>& path, const MetricReport& report)
{
    if (path) {
        write_file(*path, canonical_dump(report_to_json(report)) + "\n");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Physics scenario pipeline: prompt -> spec -> telemetry -> frames -> evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    std::string prompt;
    std::string spec_path;
    std::string out;
    std::string telemetry_path;
    std::string format = "md";
    std::optional<std::string> metrics_path;
    int iterations = kMaxIterations;
    int jobs = 1;
    bool dry_run = false;
    std::string bundle_dir;
    std::string suite_dir;
    std::vector<std::string> pred_paths;
    std::vector<std::string> gt_paths;

    auto* parse = app.add_subcommand("parse", "Prompt to scenario spec");
    parse->add_option("--prompt", prompt, "Scene description")->required();
    parse->add_option("--out", out, "Output directory for spec.json and trace.json");
    parse->add_flag("--dry-run", dry_run, "Print the parse trace without writing files");

    auto* simulate = app.add_subcommand("simulate", "Spec to telemetry.csv and events.csv");
    simulate->add_option("--spec", spec_path, "Scenario spec JSON")->required();
    simulate->add_option("--out", out, "Bundle directory")->required();

    auto* render = app.add_subcommand("render", "Spec and telemetry to frames/");
    render->add_option("--spec", spec_path, "Scenario spec JSON")->required();
    render->add_option("--telemetry", telemetry_path, "Telemetry CSV (default <out>/telemetry.csv)");
    render->add_option("--out", out, "Bundle directory")->required();

    auto* eval = app.add_subcommand("eval", "Trajectory metrics for file pairs or a bundle");
    eval->add_option("bundle", bundle_dir, "Bundle directory to re-evaluate");
    eval->add_option("--pred", pred_paths, "Predicted trajectory CSVs");
    eval->add_option("--gt", gt_paths, "Ground-truth trajectory CSVs, paired in order with --pred");
    eval->add_option("--out", out, "Directory for metrics.json (and report.json in bundle mode)");
    eval->add_option("--metrics", metrics_path, "Also write the metrics JSON to this file");
    eval->add_option("--format", format, "Table format")->check(CLI::IsMember({"json", "md"}));

    auto* bench = app.add_subcommand("bench", "Run every suite entry through the pipeline");
    bench->add_option("suite", suite_dir, "Suite directory of spec JSON files")->required();
    bench->add_option("--out", out, "Output directory")->required();
    bench->add_option("--jobs", jobs, "Entries run concurrently")->check(CLI::PositiveNumber);
    bench->add_option("--iterations", iterations, "Refinement rounds per entry")->check(CLI::Range(0, kMaxIterations));
    bench->add_option("--metrics", metrics_path, "Also write the aggregate metrics JSON to this file");
    bench->add_option("--format", format, "Table format")->check(CLI::IsMember({"json", "md"}));

    auto* pipeline = app.add_subcommand("pipeline", "parse, simulate, render, evaluate and refine");
    auto* p_prompt = pipeline->add_option("--prompt", prompt, "Scene description");
    auto* p_spec = pipeline->add_option("--spec", spec_path, "Scenario spec JSON");
    p_prompt->excludes(p_spec);
    pipeline->add_option("--out", out, "Bundle directory")->required();
    pipeline->add_option("--iterations", iterations, "Refinement rounds")->check(CLI::Range(0, kMaxIterations));
    pipeline->add_option("--metrics", metrics_path, "Also write metrics JSON to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::Usage);
    }

    try {
        if (*parse) {
            const auto parsed = parse_stage(prompt, env("MOREFORGE_PARSER_URL"));
            if (dry_run) {
                const Json doc = parsed.trace ? trace_to_json(*parsed.trace) : spec_to_json(parsed.spec);
                std::cout << doc.dump(2) << "\n";
                return 0;
            }
            if (out.empty()) {
                throw Error(ErrorKind::Usage, "parse needs --out unless --dry-run is given");
            }
            write_parse(parsed, out);
            std::cout << (fs::path(out) / bundle::kSpec).string() << "\n";
            return 0;
        }
        if (*simulate) {
            const auto spec = load_spec(spec_path);
            const auto tel = simulate_stage(spec, out);
            std::cout << tel.sample_count() << " samples x " << tel.body_ids.size() << " bodies -> "
                      << (fs::path(out) / bundle::kTelemetry).string() << "\n";
            return 0;
        }
        if (*render) {
            const auto spec = load_spec(spec_path);
            const fs::path tel_path = telemetry_path.empty() ? fs::path(out) / bundle::kTelemetry : fs::path(telemetry_path);
            const auto tel = load_telemetry(spec, tel_path);
            const auto seq = render_stage(spec, tel, out);
            std::cout << seq.steps.size() << " frames -> " << (fs::path(out) / bundle::kFrames).string() << "\n";
            return 0;
        }
        if (*eval) {
            if (!bundle_dir.empty()) {
                if (!pred_paths.empty() || !gt_paths.empty()) {
                    throw Error(ErrorKind::Usage, "give either a bundle or --pred/--gt pairs, not both");
                }
                const fs::path dir = bundle_dir;
                const auto spec = load_spec(dir / bundle::kSpec);
                const auto tel = load_telemetry(spec, dir / bundle::kTelemetry);
                const auto ev = evaluate_stage(spec, tel, out.empty() ? dir : fs::path(out));
                print_summary(ev.report);
                if (ev.metrics) {
                    write_metrics_file(metrics_path, *ev.metrics);
                    std::cout << format_metrics(*ev.metrics, format);
                }
                return ev.report.overall ? 0 : 1;
            }
            if (pred_paths.empty() || pred_paths.size() != gt_paths.size()) {
                throw Error(ErrorKind::Usage, "eval needs a bundle or equally many --pred and --gt files");
            }
            std::vector<MetricRow> rows;
            for (std::size_t i = 0; i < pred_paths.size(); ++i) {
                const auto gt = trajectory_from_csv(read_file(gt_paths[i]));
                const auto pred = trajectory_from_csv(read_file(pred_paths[i]));
                auto row = evaluate_pair(gt, pred);
                row.entry = fs::path(pred_paths[i]).filename().string();
                rows.push_back(std::move(row));
            }
            const auto report = aggregate(std::move(rows));
            if (!out.empty()) {
                fs::create_directories(out);
                write_file(fs::path(out) / bundle::kMetrics, canonical_dump(report_to_json(report)) + "\n");
            }
            write_metrics_file(metrics_path, report);
            std::cout << format_metrics(report, format);
            return 0;
        }
        if (*bench) {
            BenchOptions bo;
            bo.suite = suite_dir;
            bo.out = out;
            bo.jobs = jobs;
            bo.iterations = iterations;
            const auto result = run_bench(bo);
            write_bench(result, out);
            if (result.aggregate) {
                write_metrics_file(metrics_path, *result.aggregate);
            }
            std::cout << (format == "json" ? canonical_dump(bench_to_json(result)) + "\n" : bench_markdown(result));
            return result.ok() ? 0 : 1;
        }
        if (*pipeline) {
            PipelineOptions po;
            if (!prompt.empty()) {
                po.prompt = prompt;
            }
            if (!spec_path.empty()) {
                po.spec_path = spec_path;
            }
            po.iterations = iterations;
            po.out = out;
            po.hook = refinement_from_env();
            po.hook_label = env("MOREFORGE_REFINER_URL") ? "http" : "default";
            po.parser_url = env("MOREFORGE_PARSER_URL");
            const auto r = run_pipeline(po);
            print_summary(r.evaluation.report);
            if (r.evaluation.metrics) {
                write_metrics_file(metrics_path, *r.evaluation.metrics);
            }
            std::cout << (r.passed ? "PASS" : "FAIL") << " after " << r.refinements << " refinement(s) -> " << out
                      << "\n";
            return r.passed ? 0 : 1;
        }
    } catch (const Error& e) {
        if (!out.empty() && !dry_run) {
            try {
                write_error(out, e);
            } catch (const Error&) {
                // the out dir itself is unusable; stderr still gets the report
            }
        }
        std::cerr << error_json(e).dump(2) << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return exit_code(ErrorKind::Usage);
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sys/wait.h>

#include "moreforge/io.hpp"
#include "moreforge/pipeline.hpp"

using namespace moreforge;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("moreforge_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_spec(const fs::path& dir, const std::string& name, const ScenarioSpec& spec)
{
    const fs::path p = dir / (name + ".json");
    write_file(p, serialize_spec(spec));
    return p;
}

std::string file_hashes(const fs::path& dir)
{
    std::string out;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        out += fs::relative(f, dir).generic_string() + " " + sha256_hex(read_file(f)) + "\n";
    }
    return out;
}

ErrorKind pipeline_error(const PipelineOptions& o)
{
    try {
        run_pipeline(o);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "pipeline did not fail";
    return ErrorKind::Usage;
}

} // namespace

TEST(Io, Sha256KnownVector)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Pipeline, PromptApexMatchesClosedForm)
{
    const auto out = scratch("apex");
    PipelineOptions o;
    o.prompt = "a ball is launched at 45\xC2\xB0 with velocity 10 m/s";
    o.out = out;
    const auto r = run_pipeline(o);
    EXPECT_TRUE(r.passed);

    const auto spec = load_spec(out / bundle::kSpec);
    const auto tel = load_telemetry(spec, out / bundle::kTelemetry);
    const auto& s = tel.samples[*tel.body_index("ball")];
    double top = s[0].y;
    for (const auto& q : s) {
        top = std::max(top, q.y);
    }
    const double g = -spec.world.gravity.y;
    const double v = 10.0;
    const double expected = v * v * 0.5 / (2.0 * g);
    EXPECT_NEAR(top - s[0].y, expected, 0.01 * expected);
    EXPECT_NEAR(expected, 2.548, 0.001);
    EXPECT_TRUE(fs::exists(out / bundle::kTrace));
}

TEST(Pipeline, BundleLayoutAndManifest)
{
    const auto out = scratch("layout");
    PipelineOptions o;
    o.spec_path = write_spec(out.parent_path(), "moreforge_layout_spec", build_template(Phenomenon::Collision));
    o.out = out;
    run_pipeline(o);
    for (auto f : {bundle::kSpec, bundle::kTelemetry, bundle::kEvents, bundle::kReport, bundle::kMetrics,
                   bundle::kManifest}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    EXPECT_TRUE(fs::exists(out / bundle::kFrames / frame_name(0)));
    EXPECT_TRUE(verify_manifest(out).empty());

    const Json manifest = Json::parse(read_file(out / bundle::kManifest));
    EXPECT_EQ(manifest.at("version"), std::string(tool_version()));
    EXPECT_EQ(manifest.at("inputs").at("spec_sha256"), sha256_hex(read_file(*o.spec_path)));
    EXPECT_TRUE(manifest.at("timings_s").contains("simulate"));

    write_file(out / bundle::kEvents, "tampered\n");
    EXPECT_EQ(verify_manifest(out), std::vector<std::string>{std::string(bundle::kEvents)});
}

TEST(Pipeline, RepeatedRunsAreByteIdentical)
{
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    for (const auto& out : {a, b}) {
        PipelineOptions o;
        o.prompt = "a Newton's cradle with five balls; the first two balls are pulled back";
        o.out = out;
        run_pipeline(o);
    }
    for (auto f : {bundle::kTelemetry, bundle::kMetrics, bundle::kReport, bundle::kSpec}) {
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
    }
    EXPECT_EQ(file_hashes(a / bundle::kFrames), file_hashes(b / bundle::kFrames));
    const Json ma = Json::parse(read_file(a / bundle::kManifest));
    const Json mb = Json::parse(read_file(b / bundle::kManifest));
    EXPECT_EQ(ma.at("files"), mb.at("files"));
}

TEST(Pipeline, StagesComposeToThePipeline)
{
    const std::string prompt = "a simple pendulum of length 1 m released from 30\xC2\xB0";
    const auto staged = scratch("staged");
    const auto mono = scratch("mono");

    write_parse(parse_stage(prompt), staged);
    const auto spec = load_spec(staged / bundle::kSpec);
    simulate_stage(spec, staged);
    render_stage(spec, load_telemetry(spec, staged / bundle::kTelemetry), staged);

    PipelineOptions o;
    o.prompt = prompt;
    o.out = mono;
    run_pipeline(o);

    for (auto f : {bundle::kSpec, bundle::kTrace, bundle::kTelemetry, bundle::kEvents}) {
        EXPECT_EQ(read_file(staged / f), read_file(mono / f)) << f;
    }
    EXPECT_EQ(file_hashes(staged / bundle::kFrames), file_hashes(mono / bundle::kFrames));
}

TEST(Pipeline, TruncatedTelemetryIsIncomplete)
{
    const auto out = scratch("trunc");
    const auto spec = build_template(Phenomenon::Pendulum);
    simulate_stage(spec, out);
    const std::string csv = read_file(out / bundle::kTelemetry);
    std::string cut = csv.substr(0, csv.size() / 2);
    cut = cut.substr(0, cut.rfind('\n') + 1);
    write_file(out / bundle::kTelemetry, cut);
    try {
        render_stage(spec, load_telemetry(spec, out / bundle::kTelemetry), out);
        ADD_FAILURE() << "rendered truncated telemetry";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TelemetryIncomplete);
    }
}

TEST(Pipeline, InvalidSpecWritesErrorJson)
{
    const auto out = scratch("invalid");
    auto spec = build_template(Phenomenon::Collision);
    spec.bodies[0].restitution = 1.5;
    PipelineOptions o;
    o.spec_path = write_spec(out.parent_path(), "moreforge_invalid_spec", spec);
    o.out = out;
    EXPECT_EQ(pipeline_error(o), ErrorKind::ValidationFailed);
    const Json err = Json::parse(read_file(out / bundle::kError));
    EXPECT_EQ(err.at("exit_code"), 2);
    ASSERT_FALSE(err.at("violations").empty());
    EXPECT_NE(err.at("violations")[0].at("path").get<std::string>().find("restitution"), std::string::npos);
}

TEST(Pipeline, ApexFailureRefinesUntilPass)
{
    const auto out = scratch("refine");
    auto spec = build_template(Phenomenon::Gravity);
    spec.duration_s = 0.1;
    PipelineOptions o;
    o.spec_path = write_spec(out.parent_path(), "moreforge_refine_spec", spec);
    o.out = out;
    const auto r = run_pipeline(o);
    EXPECT_TRUE(r.passed);
    EXPECT_GE(r.refinements, 1);
    EXPECT_LE(r.refinements, kMaxIterations);
    for (int k = 0; k <= r.refinements; ++k) {
        EXPECT_TRUE(fs::exists(out / bundle::kHistory / ("iter_" + std::to_string(k)) / bundle::kReport));
    }
    EXPECT_DOUBLE_EQ(load_spec(out / bundle::kSpec).duration_s, r.spec.duration_s);
}

TEST(Pipeline, ZeroIterationsReportsFailure)
{
    const auto out = scratch("noiter");
    auto spec = build_template(Phenomenon::Gravity);
    spec.duration_s = 0.1;
    PipelineOptions o;
    o.spec_path = write_spec(out.parent_path(), "moreforge_noiter_spec", spec);
    o.out = out;
    o.iterations = 0;
    const auto r = run_pipeline(o);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.refinements, 0);
    const auto report = feedback_from_json(Json::parse(read_file(out / bundle::kReport)));
    EXPECT_FALSE(report.overall);
}

TEST(Pipeline, IterationsAboveCapIsUsageError)
{
    PipelineOptions o;
    o.prompt = "a pendulum";
    o.out = scratch("cap");
    o.iterations = kMaxIterations + 1;
    EXPECT_EQ(pipeline_error(o), ErrorKind::Usage);
}

TEST(Parse, ExternalParserFallsBackOnTransportError)
{
    const auto parsed = parse_stage("a pendulum", std::string("http://127.0.0.1:1/parse"));
    EXPECT_EQ(parsed.source, "rules");
    EXPECT_EQ(parsed.spec.phenomenon, Phenomenon::Pendulum);
}

TEST(Bench, PartialFailureIsRecordedAndOrderIsDeterministic)
{
    const auto suite = scratch("suite");
    write_spec(suite, "b_pendulum", build_template(Phenomenon::Pendulum));
    write_spec(suite, "a_collision", build_template(Phenomenon::Collision));
    write_spec(suite, "c_inertia", build_template(Phenomenon::Inertia));
    write_file(suite / "d_corrupt.json", "{ not json");

    BenchOptions o;
    o.suite = suite;
    o.out = scratch("bench_1");
    const auto serial = run_bench(o);
    o.out = scratch("bench_3");
    o.jobs = 3;
    const auto parallel = run_bench(o);

    ASSERT_EQ(serial.rows.size(), 3u);
    EXPECT_EQ(serial.rows[0].entry, "a_collision");
    EXPECT_EQ(serial.rows[2].entry, "c_inertia");
    ASSERT_EQ(serial.failures.size(), 1u);
    EXPECT_EQ(serial.failures[0].entry, "d_corrupt");
    EXPECT_EQ(serial.failures[0].exit_code, 2);
    EXPECT_FALSE(serial.ok());
    EXPECT_EQ(canonical_dump(bench_to_json(serial)), canonical_dump(bench_to_json(parallel)));
    EXPECT_EQ(bench_markdown(serial), bench_markdown(parallel));
}

TEST(Bench, GroundTruthFileReplacesSelfComparison)
{
    const auto suite = scratch("gt_suite");
    const auto spec = build_template(Phenomenon::Pendulum);
    write_spec(suite, "pendulum", spec);
    const auto tel = quantized(simulate(spec));
    const auto traj = ground_truth(spec, tel, *tel.body_index("bob"), Space::World);
    write_file(suite / "pendulum.gt.csv", trajectory_to_csv(traj));

    BenchOptions o;
    o.suite = suite;
    o.out = scratch("gt_out");
    const auto r = run_bench(o);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_NEAR(r.rows[0].metrics.dtw, 0.0, 1e-9);
    EXPECT_NEAR(r.rows[0].metrics.procrustes, 0.0, 1e-9);
    EXPECT_TRUE(r.ok());
}

#ifdef MOREFORGE_CLI
namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(MOREFORGE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Cli, ExitCodes)
{
    const auto dir = scratch("cli");
    const std::string d = dir.string();
    EXPECT_EQ(run_cli("parse --prompt 'a pendulum' --dry-run"), 0);
    EXPECT_FALSE(fs::exists(dir / bundle::kSpec));
    EXPECT_EQ(run_cli("parse --prompt 'stock market' --dry-run"), 5);
    EXPECT_EQ(run_cli("parse --prompt 'a ball thrown at 30 mph' --dry-run"), 2);
    EXPECT_EQ(run_cli("eval --pred " + d + "/missing.csv --gt " + d + "/missing.csv"), 3);
    EXPECT_EQ(run_cli("pipeline --spec " + d + "/missing.json --out " + d + "/p"), 3);
    EXPECT_TRUE(fs::exists(dir / "p" / bundle::kError));
    EXPECT_EQ(run_cli("no-such-command"), 64);
    EXPECT_EQ(run_cli("pipeline --prompt 'a pendulum' --out " + d + "/q --iterations 9"), 64);
}

TEST(Cli, EvalIdenticalFilesGiveZeroRow)
{
    const auto dir = scratch("cli_eval");
    const auto spec = build_template(Phenomenon::Gravity);
    const auto tel = quantized(simulate(spec));
    write_file(dir / "a.csv", trajectory_to_csv(ground_truth(spec, tel, 0, Space::World)));
    EXPECT_EQ(run_cli("eval --pred " + (dir / "a.csv").string() + " --gt " + (dir / "a.csv").string() + " --out " +
                      dir.string() + " --format json"),
              0);
    const auto report = report_from_json(Json::parse(read_file(dir / bundle::kMetrics)));
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_EQ(report.rows[0].dtw, 0.0);
    EXPECT_EQ(report.rows[0].dtw_n, 0.0);
    EXPECT_NEAR(report.rows[0].procrustes, 0.0, 1e-12);
}
#endif

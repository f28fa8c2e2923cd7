#include <doctest.h>

#include "crosswatch/config.hpp"
#include "crosswatch/io.hpp"
#include "crosswatch/pipeline.hpp"
#include "crosswatch/simulator.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

using namespace crosswatch;

namespace {

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("crosswatch-cli-" + std::to_string(::getpid()) + "-" +
               std::to_string(counter++));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    static inline int counter = 0;
};

struct CliResult {
    int exit_code = -1;
    std::string out;
};

// Run the installed command-line binary (path from the environment) and
// capture combined stdout/stderr.
CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("CROSSWATCH_CLI");
    REQUIRE_MESSAGE(bin != nullptr,
                    "CROSSWATCH_CLI must point at the command-line binary");
    CliResult r;
    const std::string cmd = std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// a small two-vehicle conflict scenario, cheap enough for subprocess tests
sim::ScenarioSpec tiny_scenario() {
    sim::ScenarioSpec s;
    s.name = "tiny";
    s.duration = 80;
    s.seed = 7;
    sim::VehicleSpec v;
    v.object_class = ObjectClass::Car;
    v.width = 40;
    v.height = 20;
    v.spawn_frame = 0;
    v.path = {{{40, 300}, 4.0}, {{700, 300}, 0.0}};
    s.vehicles.push_back(v);
    v.object_class = ObjectClass::Truck;
    v.width = 60;
    v.height = 26;
    v.path = {{{360, 40}, 4.0}, {{360, 560}, 0.0}};
    s.vehicles.push_back(v);
    // paths cross at (360, 300); both arrive around frame 80... keep inside
    // the tape by meeting near frame 65 instead
    s.vehicles[0].path = {{{100, 300}, 4.0}, {{700, 300}, 0.0}};
    s.vehicles[1].path = {{{360, 40}, 4.0}, {{360, 560}, 0.0}};
    s.conflicts.push_back({0, 1, 65, 12.0});
    return s;
}

} // namespace

TEST_CASE("pipeline equals tracking plus window analysis plus fusion") {
    const auto simres = sim::generate(tiny_scenario(), {});
    config::RunConfig cfg;
    cfg.tracker.mode = kalman::Mode::Sort;

    const auto piped = pipeline::run_pipeline(simres.detections, cfg);
    CHECK(piped.frames == 80);
    CHECK(piped.archive.tracks.size() == 2);
    REQUIRE(!piped.events.empty());

    // compose the stages by hand; the pipeline must be exactly this
    const auto tracking = pipeline::run_tracking(simres.detections, cfg.tracker);
    const auto temporal = nearmiss::temporal_stream(tracking.archive, cfg.nearmiss);
    const auto fused =
        nearmiss::fuse(io::spatial_regions(simres.detections), temporal, cfg.nearmiss);
    REQUIRE(piped.events.size() == fused.size());
    for (size_t i = 0; i < fused.size(); ++i) {
        CHECK(piped.events[i].frame_start == fused[i].frame_start);
        CHECK(piped.events[i].frame_end == fused[i].frame_end);
        CHECK(piped.events[i].track_a == fused[i].track_a);
        CHECK(piped.events[i].track_b == fused[i].track_b);
        CHECK(piped.events[i].probability == fused[i].probability);
    }

    // the conflict the scenario scripts is the one the pipeline reports
    bool covers_meeting = false;
    for (const auto& e : piped.events)
        if (e.frame_start <= 65 && 65 <= e.frame_end) covers_meeting = true;
    CHECK(covers_meeting);
}

TEST_CASE("near-accident detections feed fusion instead of the tracker") {
    const auto simres = sim::generate(tiny_scenario(), {});
    config::RunConfig cfg;
    cfg.tracker.mode = kalman::Mode::Sort;
    const auto plain = pipeline::run_pipeline(simres.detections, cfg);

    // add a spatial-stream record right on top of the first temporal event
    REQUIRE(!plain.events.empty());
    const auto& anchor = plain.events[0];
    io::FrameDetections with_spatial = simres.detections;
    Detection d;
    d.frame = anchor.frame_start;
    d.object_class = ObjectClass::NearAccident;
    d.bbox = anchor.region;
    d.confidence = 0.5;
    with_spatial[d.frame].push_back(d);

    const auto fused = pipeline::run_pipeline(with_spatial, cfg);
    CHECK(fused.archive.tracks.size() == plain.archive.tracks.size()); // not tracked
    REQUIRE(!fused.events.empty());
    // probability averaged down from 1.0 by the 0.5-confidence region
    CHECK(fused.events[0].probability == doctest::Approx(0.75));
}

TEST_CASE("command line: simulate, analyze, evaluate round trip") {
    TempDir tmp;
    const auto spec = tiny_scenario();
    const std::string scenario_path = tmp.path("tiny.cfg");
    io::write_file(scenario_path, sim::print_scenario(spec));

    // simulate
    CliResult r = run_cli("simulate --scenario " + scenario_path + " --out-dir " + tmp.dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("tiny frames=80 vehicles=2") != std::string::npos);
    REQUIRE(std::filesystem::exists(tmp.path("tiny.detections.jsonl")));
    REQUIRE(std::filesystem::exists(tmp.path("tiny.truth_events.jsonl")));

    // nearmiss over the generated stream
    const std::string events_path = tmp.path("tiny.events.jsonl");
    std::string cfg_path = tmp.path("run.cfg");
    io::write_file(cfg_path, "[tracker]\nmode = sort\n");
    r = run_cli("nearmiss --detections " + tmp.path("tiny.detections.jsonl") +
                " --config " + cfg_path + " --out " + events_path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("nearmiss frames=80") != std::string::npos);
    REQUIRE(std::filesystem::exists(events_path));

    // evaluate single pair, human-readable and json
    r = run_cli("evaluate --pred " + events_path + " --truth " +
                tmp.path("tiny.truth_events.jsonl") + " --frames 80 --name tiny");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("tiny") != std::string::npos);

    r = run_cli("evaluate --pred " + events_path + " --truth " +
                tmp.path("tiny.truth_events.jsonl") + " --frames 80 --json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"overall\"") != std::string::npos);
    CHECK(r.out.find("\"tp\"") != std::string::npos);

    // directory mode picks the stem up from the truth files
    r = run_cli("evaluate --pred-dir " + tmp.dir.string() + " --truth-dir " +
                tmp.dir.string() + " --json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"name\": \"tiny\"") != std::string::npos);
}

TEST_CASE("command line: repeated analysis is byte-identical") {
    TempDir tmp;
    const auto spec = tiny_scenario();
    io::write_file(tmp.path("tiny.cfg"), sim::print_scenario(spec));
    CliResult r = run_cli("simulate --scenario " + tmp.path("tiny.cfg") +
                          " --jitter 1 --miss 0.05 --out-dir " + tmp.dir.string());
    REQUIRE(r.exit_code == 0);

    const std::string dets = tmp.path("tiny.detections.jsonl");
    r = run_cli("nearmiss --detections " + dets + " --out " + tmp.path("a.jsonl"));
    CHECK(r.exit_code == 0);
    r = run_cli("nearmiss --detections " + dets + " --out " + tmp.path("b.jsonl"));
    CHECK(r.exit_code == 0);
    CHECK(io::read_file(tmp.path("a.jsonl")) == io::read_file(tmp.path("b.jsonl")));
    // streaming mode writes the same file it would have written in batch
    r = run_cli("nearmiss --streaming --detections " + dets + " --out " + tmp.path("c.jsonl"));
    CHECK(r.exit_code == 0);
    CHECK(io::read_file(tmp.path("a.jsonl")) == io::read_file(tmp.path("c.jsonl")));
}

TEST_CASE("command line: track archive output") {
    TempDir tmp;
    io::write_file(tmp.path("tiny.cfg"), sim::print_scenario(tiny_scenario()));
    CliResult r = run_cli("simulate --scenario " + tmp.path("tiny.cfg") + " --out-dir " +
                          tmp.dir.string());
    REQUIRE(r.exit_code == 0);
    r = run_cli("track --detections " + tmp.path("tiny.detections.jsonl") + " --out " +
                tmp.path("tracks.jsonl"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("track frames=80 tracks=2") != std::string::npos);
    TrackArchive arc = io::read_tracks(tmp.path("tracks.jsonl"));
    CHECK(arc.tracks.size() == 2);
}

TEST_CASE("command line: exit codes distinguish failure classes") {
    TempDir tmp;
    // missing input file -> io error -> 2
    CliResult r = run_cli("track --detections /nonexistent.jsonl --out " + tmp.path("t.jsonl"));
    CHECK(r.exit_code == 2);
    // invalid configuration -> validation error -> 1
    io::write_file(tmp.path("bad.cfg"), "[tracker]\nn_init = 0\n");
    r = run_cli("track --config " + tmp.path("bad.cfg") + " --detections x --out y");
    CHECK(r.exit_code == 1);
    // unknown flag -> usage error -> 1
    r = run_cli("track --no-such-flag");
    CHECK(r.exit_code == 1);
    // missing required input -> validation error -> 1, message names the flag
    r = run_cli("track --out " + tmp.path("t.jsonl"));
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("--detections") != std::string::npos);
}

TEST_CASE("command line: configuration echo is parseable and stable") {
    TempDir tmp;
    CliResult a = run_cli("track --print-config");
    REQUIRE(a.exit_code == 0);
    const std::string cfg_path = tmp.path("echo.cfg");
    io::write_file(cfg_path, a.out);
    CliResult b = run_cli("track --print-config --config " + cfg_path);
    CHECK(b.exit_code == 0);
    CHECK(a.out == b.out);
}

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "crosswatch/config.hpp"
#include "crosswatch/errors.hpp"
#include "crosswatch/evaluation.hpp"
#include "crosswatch/io.hpp"
#include "crosswatch/log.hpp"
#include "crosswatch/nearmiss.hpp"
#include "crosswatch/pipeline.hpp"
#include "crosswatch/simulator.hpp"
#include "crosswatch/tracker.hpp"
#include "svg.hpp"

namespace cw = crosswatch;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

cw::config::RunConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return cw::config::load_run_config(path);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw cw::ValidationError(what);
}

std::string resolve(const std::string& flag, const std::string& from_config,
                    const std::string& what) {
    if (!flag.empty()) return flag;
    if (!from_config.empty()) return from_config;
    throw cw::ValidationError("missing " + what + " (flag or [io] config key)");
}

struct RunOpts {
    std::string detections;
    std::string config_path;
    std::string out;
    std::string plot;
    bool streaming = false;
    bool print_config = false;
};

int cmd_track(const RunOpts& o) {
    const auto cfg = load_config(o.config_path);
    if (o.print_config) {
        std::fputs(cw::config::print_run_config(cfg).c_str(), stdout);
        return 0;
    }
    const auto detections =
        cw::io::load_detections(resolve(o.detections, cfg.io.detections, "--detections"));
    const std::string out = resolve(o.out, cfg.io.tracks, "--out");

    cw::tracker::Tracker trk(cfg.tracker);
    int frames = 0;
    double seconds = 0.0;
    if (!detections.empty()) {
        const int first = detections.begin()->first;
        const int last = detections.rbegin()->first;
        static const std::vector<cw::Detection> kNone;
        for (int f = first; f <= last; ++f) {
            const auto it = detections.find(f);
            const auto t0 = Clock::now();
            const auto result = trk.step(f, it != detections.end() ? it->second : kNone);
            seconds += seconds_since(t0);
            ++frames;
            if (o.streaming) {
                for (const auto id : result.new_ids)
                    std::printf("frame %d: new track %lld\n", f, static_cast<long long>(id));
                for (const auto id : result.deleted_ids)
                    std::printf("frame %d: track %lld ended\n", f, static_cast<long long>(id));
            }
        }
    }
    const auto archive = trk.finalize();
    cw::io::write_tracks(out, archive);
    if (!o.plot.empty()) cw::io::write_file(o.plot, cw::svg::render(archive, {}));

    const size_t deleted = static_cast<size_t>(
        std::count_if(archive.tracks.begin(), archive.tracks.end(),
                      [](const cw::ArchiveTrack& t) { return t.final_status == cw::TrackStatus::Deleted; }));
    std::printf("track frames=%d tracks=%zu deleted=%zu fps=%.1f out=%s\n", frames,
                archive.tracks.size(), deleted,
                seconds > 0.0 ? frames / seconds : 0.0, out.c_str());
    return 0;
}

int cmd_nearmiss(const RunOpts& o) {
    const auto cfg = load_config(o.config_path);
    if (o.print_config) {
        std::fputs(cw::config::print_run_config(cfg).c_str(), stdout);
        return 0;
    }
    const auto detections =
        cw::io::load_detections(resolve(o.detections, cfg.io.detections, "--detections"));
    const std::string out = resolve(o.out, cfg.io.events, "--out");

    cw::TrackArchive archive;
    std::vector<cw::nearmiss::NearAccidentEvent> events;
    int frames = 0;
    double seconds = 0.0;

    if (o.streaming && !detections.empty()) {
        // Online profile: analysis re-runs at every completed window, and
        // candidate conflicts are announced as soon as a window sees them.
        // The final file is identical to a batch run over the same stream.
        cw::tracker::Tracker trk(cfg.tracker);
        const int first = detections.begin()->first;
        const int last = detections.rbegin()->first;
        const int L = cfg.nearmiss.window_frames;
        static const std::vector<cw::Detection> kNone;
        std::set<std::tuple<std::int64_t, std::int64_t, int>> announced;
        const auto t0 = Clock::now();
        for (int f = first; f <= last; ++f) {
            const auto it = detections.find(f);
            trk.step(f, it != detections.end() ? it->second : kNone);
            ++frames;
            if (f >= L && f % L == 0) {
                const auto partial = cw::nearmiss::temporal_stream(trk.finalize(), cfg.nearmiss);
                for (const auto& e : partial) {
                    const auto key = std::make_tuple(e.track_a, e.track_b, e.frame_start);
                    if (announced.insert(key).second)
                        std::printf("frame %d: near-accident candidate tracks %lld,%lld span %d..%d\n",
                                    f, static_cast<long long>(e.track_a),
                                    static_cast<long long>(e.track_b), e.frame_start, e.frame_end);
                }
            }
        }
        archive = trk.finalize();
        events = cw::nearmiss::fuse(cw::io::spatial_regions(detections),
                                    cw::nearmiss::temporal_stream(archive, cfg.nearmiss),
                                    cfg.nearmiss);
        seconds = seconds_since(t0);
    } else {
        const auto result = cw::pipeline::run_pipeline(detections, cfg);
        archive = result.archive;
        events = result.events;
        frames = result.frames;
        seconds = result.tracking_seconds + result.analysis_seconds;
    }

    cw::io::write_events(out, events);
    if (!o.plot.empty()) cw::io::write_file(o.plot, cw::svg::render(archive, events));
    std::printf("nearmiss frames=%d tracks=%zu events=%zu fps=%.1f out=%s\n", frames,
                archive.tracks.size(), events.size(),
                seconds > 0.0 ? frames / seconds : 0.0, out.c_str());
    return 0;
}

struct SimulateOpts {
    std::string scenario_path;
    bool suite = false;
    std::string out_dir;
    bool print_scenario = false;
    cw::sim::NoiseModel noise;
};

int cmd_simulate(const SimulateOpts& o) {
    std::vector<cw::sim::ScenarioSpec> scenarios;
    if (o.suite) scenarios = cw::sim::standard_suite();
    if (!o.scenario_path.empty()) scenarios.push_back(cw::sim::load_scenario(o.scenario_path));
    require(!scenarios.empty(), "nothing to simulate: pass --scenario FILE and/or --suite");

    if (o.print_scenario) {
        for (size_t i = 0; i < scenarios.size(); ++i) {
            if (i) std::printf("\n");
            std::fputs(cw::sim::print_scenario(scenarios[i]).c_str(), stdout);
        }
        return 0;
    }

    require(!o.out_dir.empty(), "missing --out-dir");
    fs::create_directories(o.out_dir);

    std::vector<std::future<std::string>> jobs;
    for (const auto& spec : scenarios) {
        jobs.push_back(std::async(std::launch::async, [&spec, &o]() {
            const auto sim = cw::sim::generate(spec, o.noise);
            const fs::path base = fs::path(o.out_dir) / spec.name;
            cw::io::write_detections(base.string() + ".detections.jsonl", sim.detections);
            cw::io::write_tracks(base.string() + ".truth_tracks.jsonl", sim.truth);
            cw::io::write_events(base.string() + ".truth_events.jsonl", sim.truth_events);
            cw::io::write_file(base.string() + ".scenario.cfg", cw::sim::print_scenario(spec));
            size_t dets = 0;
            for (const auto& [f, v] : sim.detections) dets += v.size();
            char line[256];
            std::snprintf(line, sizeof(line),
                          "%s frames=%d vehicles=%zu detections=%zu truth_events=%zu",
                          spec.name.c_str(), spec.duration, spec.vehicles.size(), dets,
                          sim.truth_events.size());
            return std::string(line);
        }));
    }
    for (auto& j : jobs) std::printf("%s\n", j.get().c_str());
    return 0;
}

struct EvaluateOpts {
    std::string pred;
    std::string truth;
    std::string name = "video";
    int frames = 0;
    std::string pred_dir;
    std::string truth_dir;
    std::string config_path;
    bool print_config = false;
    bool json = false;
};

cw::evaluation::ReportRow evaluate_one(const std::string& name, const std::string& pred_path,
                                       const std::string& truth_path, int frames,
                                       double iou_threshold) {
    const auto pred = cw::io::read_events(pred_path);
    const auto truth = cw::io::read_events(truth_path);
    if (frames <= 0) {
        for (const auto& e : pred) frames = std::max(frames, e.frame_end + 1);
        for (const auto& e : truth) frames = std::max(frames, e.frame_end + 1);
        cw::log::warn("evaluate: total frames for " + name + " inferred as " +
                      std::to_string(frames) + "; pass the scenario file or --frames to pin it");
    }
    return cw::evaluation::make_report_row(name, pred, truth, frames, iou_threshold);
}

int cmd_evaluate(const EvaluateOpts& o) {
    const auto cfg = load_config(o.config_path);
    if (o.print_config) {
        std::fputs(cw::config::print_run_config(cfg).c_str(), stdout);
        return 0;
    }

    std::vector<cw::evaluation::ReportRow> rows;
    if (!o.pred_dir.empty()) {
        const std::string truth_dir = o.truth_dir.empty() ? o.pred_dir : o.truth_dir;
        std::vector<std::string> stems;
        for (const auto& entry : fs::directory_iterator(truth_dir)) {
            const std::string fn = entry.path().filename().string();
            const std::string suffix = ".truth_events.jsonl";
            if (fn.size() > suffix.size() &&
                fn.compare(fn.size() - suffix.size(), suffix.size(), suffix) == 0)
                stems.push_back(fn.substr(0, fn.size() - suffix.size()));
        }
        std::sort(stems.begin(), stems.end());
        require(!stems.empty(), "no *.truth_events.jsonl files in " + truth_dir);

        std::vector<std::future<cw::evaluation::ReportRow>> jobs;
        for (const auto& stem : stems) {
            jobs.push_back(std::async(std::launch::async, [&, stem]() {
                const std::string truth_path = truth_dir + "/" + stem + ".truth_events.jsonl";
                const std::string pred_path = o.pred_dir + "/" + stem + ".events.jsonl";
                int frames = 0;
                const std::string scenario_path = truth_dir + "/" + stem + ".scenario.cfg";
                if (fs::exists(scenario_path))
                    frames = cw::sim::load_scenario(scenario_path).duration;
                return evaluate_one(stem, pred_path, truth_path, frames,
                                    cfg.evaluation.iou_threshold);
            }));
        }
        for (auto& j : jobs) rows.push_back(j.get());
    } else {
        require(!o.pred.empty() && !o.truth.empty(),
                "pass --pred and --truth files, or --pred-dir/--truth-dir");
        rows.push_back(
            evaluate_one(o.name, o.pred, o.truth, o.frames, cfg.evaluation.iou_threshold));
    }

    if (o.json) {
        nlohmann::json arr = nlohmann::json::array();
        cw::evaluation::ConfusionCounts total;
        for (const auto& r : rows) {
            const auto m = cw::evaluation::prf(r.counts);
            nlohmann::json j{{"name", r.name},
                             {"positive", r.positive},
                             {"total_frames", r.total_frames},
                             {"truth_frames", r.truth_frames},
                             {"correct_localization", r.correct_localization},
                             {"incorrect_localization", r.incorrect_localization},
                             {"tp", r.counts.tp},
                             {"fp", r.counts.fp},
                             {"fn", r.counts.fn},
                             {"tn", r.counts.tn}};
            if (m.precision) j["precision"] = *m.precision;
            if (m.recall) j["recall"] = *m.recall;
            if (m.f_measure) j["f_measure"] = *m.f_measure;
            arr.push_back(std::move(j));
            total += r.counts;
        }
        const auto m = cw::evaluation::prf(total);
        nlohmann::json overall{{"tp", total.tp}, {"fp", total.fp}, {"fn", total.fn}, {"tn", total.tn}};
        if (m.precision) overall["precision"] = *m.precision;
        if (m.recall) overall["recall"] = *m.recall;
        if (m.f_measure) overall["f_measure"] = *m.f_measure;
        nlohmann::json doc{{"videos", std::move(arr)}, {"overall", std::move(overall)}};
        std::printf("%s\n", doc.dump(2).c_str());
    } else {
        std::fputs(cw::evaluation::format_report(rows).c_str(), stdout);
    }
    return 0;
}

struct BenchOpts {
    std::string detections;
    std::string config_path;
    int reps = 3;
    bool json = false;
    bool print_config = false;
};

struct LatencySummary {
    std::vector<double> rep_fps;
    double mean_ms = 0.0;
    double p95_ms = 0.0;
};

LatencySummary summarize(std::vector<double> per_frame_seconds, const std::vector<double>& rep_seconds,
                         int frames_per_rep) {
    LatencySummary s;
    for (const double rs : rep_seconds)
        s.rep_fps.push_back(rs > 0.0 ? frames_per_rep / rs : 0.0);
    if (per_frame_seconds.empty()) return s;
    double sum = 0.0;
    for (const double v : per_frame_seconds) sum += v;
    s.mean_ms = 1000.0 * sum / static_cast<double>(per_frame_seconds.size());
    std::sort(per_frame_seconds.begin(), per_frame_seconds.end());
    const size_t idx = static_cast<size_t>(
        std::ceil(0.95 * static_cast<double>(per_frame_seconds.size()))) - 1;
    s.p95_ms = 1000.0 * per_frame_seconds[std::min(idx, per_frame_seconds.size() - 1)];
    return s;
}

void print_bench_line(const char* label, const LatencySummary& s, int frames) {
    double lo = s.rep_fps.empty() ? 0.0 : s.rep_fps[0];
    double hi = lo, sum = 0.0;
    for (const double f : s.rep_fps) {
        lo = std::min(lo, f);
        hi = std::max(hi, f);
        sum += f;
    }
    std::printf("%s fps_mean=%.1f fps_min=%.1f fps_max=%.1f mean_ms=%.3f p95_ms=%.3f reps=%zu frames=%d\n",
                label, s.rep_fps.empty() ? 0.0 : sum / static_cast<double>(s.rep_fps.size()), lo,
                hi, s.mean_ms, s.p95_ms, s.rep_fps.size(), frames);
}

int cmd_bench(const BenchOpts& o) {
    const auto cfg = load_config(o.config_path);
    if (o.print_config) {
        std::fputs(cw::config::print_run_config(cfg).c_str(), stdout);
        return 0;
    }
    const auto detections =
        cw::io::load_detections(resolve(o.detections, cfg.io.detections, "--detections"));
    if (detections.empty()) {
        std::printf("no frames\n");
        return 0;
    }
    const int reps = std::max(3, o.reps);
    const int first = detections.begin()->first;
    const int last = detections.rbegin()->first;
    const int frames = last - first + 1;
    size_t total_dets = 0;
    for (const auto& [f, v] : detections) total_dets += v.size();
    static const std::vector<cw::Detection> kNone;

    // Tracker-only: per-frame step latency.
    std::vector<double> trk_lat;
    std::vector<double> trk_rep_seconds;
    for (int rep = 0; rep < reps; ++rep) {
        cw::tracker::Tracker trk(cfg.tracker);
        double total = 0.0;
        for (int f = first; f <= last; ++f) {
            const auto it = detections.find(f);
            const auto t0 = Clock::now();
            trk.step(f, it != detections.end() ? it->second : kNone);
            const double dt = seconds_since(t0);
            trk_lat.push_back(dt);
            total += dt;
        }
        trk_rep_seconds.push_back(total);
    }

    // Full pipeline in its online profile: a frame that completes a window
    // also pays for that window's analysis; the last frame pays for the
    // final analysis and fusion.
    const int L = cfg.nearmiss.window_frames;
    std::vector<double> pipe_lat;
    std::vector<double> pipe_rep_seconds;
    for (int rep = 0; rep < reps; ++rep) {
        cw::tracker::Tracker trk(cfg.tracker);
        double total = 0.0;
        for (int f = first; f <= last; ++f) {
            const auto it = detections.find(f);
            const auto t0 = Clock::now();
            trk.step(f, it != detections.end() ? it->second : kNone);
            if (f >= L && f % L == 0)
                (void)cw::nearmiss::temporal_stream(trk.finalize(), cfg.nearmiss);
            if (f == last)
                (void)cw::nearmiss::fuse(cw::io::spatial_regions(detections),
                                         cw::nearmiss::temporal_stream(trk.finalize(), cfg.nearmiss),
                                         cfg.nearmiss);
            const double dt = seconds_since(t0);
            pipe_lat.push_back(dt);
            total += dt;
        }
        pipe_rep_seconds.push_back(total);
    }

    const auto trk_sum = summarize(std::move(trk_lat), trk_rep_seconds, frames);
    const auto pipe_sum = summarize(std::move(pipe_lat), pipe_rep_seconds, frames);

    if (o.json) {
        nlohmann::json doc{{"frames", frames},
                           {"objects_per_frame", static_cast<double>(total_dets) / frames},
                           {"reps", reps},
                           {"tracker",
                            {{"fps", trk_sum.rep_fps},
                             {"mean_ms", trk_sum.mean_ms},
                             {"p95_ms", trk_sum.p95_ms}}},
                           {"pipeline",
                            {{"fps", pipe_sum.rep_fps},
                             {"mean_ms", pipe_sum.mean_ms},
                             {"p95_ms", pipe_sum.p95_ms}}}};
        std::printf("%s\n", doc.dump(2).c_str());
    } else {
        std::printf("bench frames=%d objects_per_frame=%.1f\n", frames,
                    static_cast<double>(total_dets) / frames);
        print_bench_line("tracker", trk_sum, frames);
        print_bench_line("pipeline", pipe_sum, frames);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tracking-by-detection with near-accident analysis for intersection video"};
    app.require_subcommand(1);

    RunOpts track_opts;
    auto* track = app.add_subcommand("track", "run the tracker over a detection stream");
    track->add_option("--detections", track_opts.detections, "detection stream (.jsonl or .csv)");
    track->add_option("--config", track_opts.config_path, "run configuration file");
    track->add_option("--out", track_opts.out, "track archive output path");
    track->add_option("--plot", track_opts.plot, "write a trajectory overlay SVG");
    track->add_flag("--streaming", track_opts.streaming, "announce track starts/ends per frame");
    track->add_flag("--print-config", track_opts.print_config,
                    "print the effective configuration and exit");

    RunOpts nm_opts;
    auto* nearmiss = app.add_subcommand("nearmiss", "full pipeline: track, then detect conflicts");
    nearmiss->add_option("--detections", nm_opts.detections, "detection stream (.jsonl or .csv)");
    nearmiss->add_option("--config", nm_opts.config_path, "run configuration file");
    nearmiss->add_option("--out", nm_opts.out, "event list output path");
    nearmiss->add_option("--plot", nm_opts.plot, "write a trajectory/event overlay SVG");
    nearmiss->add_flag("--streaming", nm_opts.streaming,
                       "re-analyze at every window and announce candidates");
    nearmiss->add_flag("--print-config", nm_opts.print_config,
                       "print the effective configuration and exit");

    SimulateOpts sim_opts;
    auto* simulate = app.add_subcommand("simulate", "generate scenario detection streams");
    simulate->add_option("--scenario", sim_opts.scenario_path, "scenario file to generate");
    simulate->add_flag("--suite", sim_opts.suite, "generate the fixed 30-scenario suite");
    simulate->add_option("--out-dir", sim_opts.out_dir, "directory for the generated files");
    simulate->add_flag("--print-scenario", sim_opts.print_scenario,
                       "print the selected scenario files and exit");
    simulate->add_option("--jitter", sim_opts.noise.position_jitter, "position jitter std, px");
    simulate->add_option("--size-jitter", sim_opts.noise.size_jitter, "box size jitter std, px");
    simulate->add_option("--miss", sim_opts.noise.miss_rate, "detection miss rate in [0,1)");
    simulate->add_option("--fp-rate", sim_opts.noise.false_positive_rate,
                         "expected false positives per frame");
    simulate->add_option("--emb-noise", sim_opts.noise.embedding_noise, "embedding noise std");
    simulate->add_option("--emb-dim", sim_opts.noise.embedding_dim, "embedding dimension");

    EvaluateOpts eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "score predicted events against ground truth");
    evaluate->add_option("--pred", eval_opts.pred, "predicted events file");
    evaluate->add_option("--truth", eval_opts.truth, "ground-truth events file");
    evaluate->add_option("--frames", eval_opts.frames, "total frames scored (single-video mode)");
    evaluate->add_option("--name", eval_opts.name, "video name for the report row");
    evaluate->add_option("--pred-dir", eval_opts.pred_dir,
                         "directory of NAME.events.jsonl predictions");
    evaluate->add_option("--truth-dir", eval_opts.truth_dir,
                         "directory of NAME.truth_events.jsonl files (default: --pred-dir)");
    evaluate->add_option("--config", eval_opts.config_path, "run configuration file");
    evaluate->add_flag("--json", eval_opts.json, "machine-readable report");
    evaluate->add_flag("--print-config", eval_opts.print_config,
                       "print the effective configuration and exit");

    BenchOpts bench_opts;
    auto* bench = app.add_subcommand("bench", "measure tracker and pipeline throughput");
    bench->add_option("--detections", bench_opts.detections, "detection stream (.jsonl or .csv)");
    bench->add_option("--config", bench_opts.config_path, "run configuration file");
    bench->add_option("--reps", bench_opts.reps, "repetitions (minimum 3)");
    bench->add_flag("--json", bench_opts.json, "machine-readable report");
    bench->add_flag("--print-config", bench_opts.print_config,
                    "print the effective configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (track->parsed()) return cmd_track(track_opts);
        if (nearmiss->parsed()) return cmd_nearmiss(nm_opts);
        if (simulate->parsed()) return cmd_simulate(sim_opts);
        if (evaluate->parsed()) return cmd_evaluate(eval_opts);
        if (bench->parsed()) return cmd_bench(bench_opts);
    } catch (const cw::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const cw::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#include "crosswatch/pipeline.hpp"

#include <chrono>

namespace crosswatch::pipeline {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}
} // namespace

TrackingResult run_tracking(const io::FrameDetections& detections,
                            const tracker::TrackerConfig& cfg) {
    TrackingResult result;
    tracker::Tracker trk(cfg);
    if (detections.empty()) {
        result.archive = trk.finalize();
        return result;
    }
    const int first = detections.begin()->first;
    const int last = detections.rbegin()->first;
    static const std::vector<Detection> kNone;
    const auto start = Clock::now();
    for (int f = first; f <= last; ++f) {
        const auto it = detections.find(f);
        trk.step(f, it != detections.end() ? it->second : kNone);
    }
    result.seconds = seconds_since(start);
    result.frames = last - first + 1;
    result.archive = trk.finalize();
    return result;
}

PipelineResult run_pipeline(const io::FrameDetections& detections,
                            const config::RunConfig& cfg) {
    PipelineResult result;

    const auto tracked = run_tracking(detections, cfg.tracker);
    result.archive = tracked.archive;
    result.frames = tracked.frames;
    result.tracking_seconds = tracked.seconds;

    const auto start = Clock::now();
    const auto spatial = io::spatial_regions(detections);
    const auto temporal = nearmiss::temporal_stream(result.archive, cfg.nearmiss);
    result.events = nearmiss::fuse(spatial, temporal, cfg.nearmiss);
    result.analysis_seconds = seconds_since(start);

    return result;
}

} // namespace crosswatch::pipeline

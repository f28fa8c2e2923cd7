#pragma once

#include "crosswatch/archive.hpp"
#include "crosswatch/config.hpp"
#include "crosswatch/io.hpp"
#include "crosswatch/nearmiss.hpp"
#include "crosswatch/tracker.hpp"

namespace crosswatch::pipeline {

struct TrackingResult {
    TrackArchive archive;
    int frames = 0;      // frames stepped, including empty ones
    double seconds = 0.0; // wall time spent inside tracker steps
};

// Run the tracker over every frame from the first to the last detection,
// stepping through empty frames so coasting and deletion see real time.
TrackingResult run_tracking(const io::FrameDetections& detections,
                            const tracker::TrackerConfig& cfg);

struct PipelineResult {
    TrackArchive archive;
    std::vector<nearmiss::NearAccidentEvent> events;
    int frames = 0;
    double tracking_seconds = 0.0;
    double analysis_seconds = 0.0;
};

// Detection stream in, fused near-accident events out: near_accident
// detections feed the spatial stream, everything else is tracked and the
// resulting trajectories analyzed window by window.
PipelineResult run_pipeline(const io::FrameDetections& detections,
                            const config::RunConfig& cfg);

} // namespace crosswatch::pipeline

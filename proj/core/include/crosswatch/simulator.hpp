#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/detection.hpp"
#include "crosswatch/io.hpp"
#include "crosswatch/nearmiss.hpp"

namespace crosswatch::sim {

// A waypoint and the speed (px/frame) of the segment leaving it. The last
// waypoint's speed is ignored.
struct Waypoint {
    geometry::Point2 pos;
    double speed = 0.0;
};

struct VehicleSpec {
    ObjectClass object_class = ObjectClass::Car;
    double width = 40.0;
    double height = 20.0;
    int spawn_frame = 0;
    std::vector<Waypoint> path; // at least two waypoints, all inside the arena
};

// A conflict the scenario promises: the two vehicles come within
// target_distance (center distance, px) of each other near target_frame.
// Generation verifies the promise and fails loudly if the geometry drifted.
struct ScriptedConflict {
    int vehicle_a = 0; // indices into ScenarioSpec::vehicles
    int vehicle_b = 0;
    int target_frame = 0;
    double target_distance = 0.0;
};

struct ScenarioSpec {
    std::string name;
    double arena_width = 1280.0;
    double arena_height = 720.0;
    int duration = 300; // frames
    std::uint64_t seed = 0;

    // Ground-truth conflict threshold in pixels; 0 selects the same
    // size-relative rule the detector uses (0.5 x mean pair diagonal).
    double gt_tau_pixels = 0.0;

    std::vector<VehicleSpec> vehicles;
    std::vector<ScriptedConflict> conflicts;

    void validate() const; // throws ValidationError
};

struct NoiseModel {
    double position_jitter = 0.0;      // std, pixels
    double size_jitter = 0.0;          // std, pixels
    double miss_rate = 0.0;            // probability a true box goes undetected
    double false_positive_rate = 0.0;  // expected spurious boxes per frame
    double embedding_noise = 0.0;      // std per component, before renormalizing
    int embedding_dim = 16;

    void validate() const; // throws ValidationError
};

struct SimulationResult {
    io::FrameDetections detections;
    TrackArchive truth; // exact tracks, id = vehicle index + 1
    std::vector<nearmiss::NearAccidentEvent> truth_events;
};

// True box of a vehicle at a frame; empty before spawn and after the path
// ends. Motion is piecewise linear through the waypoints at the per-segment
// speeds.
std::optional<geometry::BBox> true_box(const VehicleSpec& v, int frame);

// Deterministic for fixed (spec, noise): the generator draws from its own
// seeded engine, never the host environment's. Ground truth depends only on
// the true geometry; noise shapes the detections alone.
SimulationResult generate(const ScenarioSpec& spec, const NoiseModel& noise);

// The fixed 30-scenario benchmark suite: 18 scenarios script a conflict
// (crossings, left turns across path, rear approaches, motorcycle weaves)
// and 12 are conflict-free (free flow, yielding traffic).
std::vector<ScenarioSpec> standard_suite();

// Scenario files use the same key=value format as run configs, with
// repeated [vehicle] and [conflict] sections.
ScenarioSpec parse_scenario(const std::string& text, const std::string& origin);
ScenarioSpec load_scenario(const std::string& path);
std::string print_scenario(const ScenarioSpec& spec);

} // namespace crosswatch::sim

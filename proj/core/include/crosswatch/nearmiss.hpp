#pragma once

#include <cstdint>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/geometry.hpp"

namespace crosswatch::nearmiss {

enum class FusionMode { Passthrough, StrictAverage };
enum class SpanMode { Active, WindowEnd };
enum class RegionMode { Envelope, Contact };

struct NearMissConfig {
    int window_frames = 10;          // trajectory window length L, at least 2
    double tau_relative = 0.5;       // proximity threshold as a fraction of the
                                     // pair's mean box diagonal
    double tau_pixels_override = 0.0; // > 0 replaces the relative rule outright
    FusionMode fusion_mode = FusionMode::Passthrough;
    double fusion_match_iou = 0.3;   // IoU needed to pair spatial with temporal

    // Active limits an event to the frames where the conflict geometry is
    // actually below threshold; WindowEnd extends it to the end of the
    // detecting window, the behavior of a purely online alarm.
    SpanMode span_mode = SpanMode::Active;

    // Envelope covers both tracks across the whole event span; Contact is
    // just the union of the two boxes at the detection frame.
    RegionMode region_mode = RegionMode::Envelope;

    void validate() const; // throws ValidationError
};

// One track's observed centers inside a window, plus the mean box diagonal
// used for size-relative thresholds.
struct TrackSlice {
    std::int64_t id = 0;
    std::vector<std::pair<int, geometry::Point2>> points;
    double mean_diag = 0.0;
};

struct TrajectoryWindow {
    int index = 0;
    int first_frame = 0;
    int last_frame = 0;
    std::vector<TrackSlice> tracks; // ordered by id
};

// Window that frame `f` belongs to. Window k >= 1 holds frames
// k*L+1 .. (k+1)*L; window 0 additionally absorbs frame 0 so that 0-indexed
// streams still partition cleanly.
int window_index_for(int frame, int L);

// Partition the archive's observed points into fixed-length windows covering
// its whole frame span (empty windows included, the final one may be
// partial). Every observed (frame, center) lands in exactly one window.
std::vector<TrajectoryWindow> stack_windows(const TrackArchive& archive, int L);

struct Collision {
    std::int64_t id_a = 0; // always id_a < id_b
    std::int64_t id_b = 0;
    int frame_detected = 0;       // frame of closest approach (or the crossing)
    geometry::Point2 contact;     // crossing point, else closest-approach midpoint
    int first_active = 0;         // conflict span inside this window
    int last_active = 0;
    double min_distance = 0.0;    // 0 when the polylines cross
};

struct CollisionState {
    int window_index = 0;
    std::vector<Collision> entries; // one per pair, ordered by (id_a, id_b)
};

// Pairwise conflict scan over one window. A pair collides when their
// polylines properly cross (collinear overlap does not count; same-lane
// following is proximity's business), or when the trajectories come within
// tau of each other during overlapping time intervals. Pairs need at least
// two points each. Symmetric in the pair and invariant under translation.
CollisionState detect_collisions(const TrajectoryWindow& window, const NearMissConfig& cfg);

struct NearAccidentEvent {
    int frame_start = 0;
    int frame_end = 0;
    geometry::BBox region;
    double probability = 1.0;
    std::int64_t track_a = 0; // 0 when no track is associated (spatial-only)
    std::int64_t track_b = 0;
};

// Event plus the bookkeeping needed to merge re-detections across windows.
struct WindowEvent {
    NearAccidentEvent event;
    int window_index = 0;
    double min_distance = 0.0;
};

// Turn one window's collisions into events (probability 1.0). Region follows
// cfg.region_mode, looking boxes up in the archive with nearest-earlier
// fallback; a collision whose tracks have no usable box is dropped with a
// warning. Span follows cfg.span_mode.
std::vector<WindowEvent> temporal_events(const CollisionState& collisions,
                                         const TrackArchive& archive,
                                         const TrajectoryWindow& window,
                                         const NearMissConfig& cfg);

// Suppress duplicates: the same pair re-detected in consecutive windows
// becomes a single event with the combined span and region.
std::vector<NearAccidentEvent> merge_window_events(const std::vector<WindowEvent>& events);

// The full temporal stream: window stacking with cross-window continuity
// (each track's last point of window k is prepended to window k+1), conflict
// detection, event emission, duplicate suppression. Output sorted by
// (frame_start, frame_end, ids).
std::vector<NearAccidentEvent> temporal_stream(const TrackArchive& archive,
                                               const NearMissConfig& cfg);

// One spatial-stream candidate region on one frame.
struct SpatialRegion {
    int frame = 0;
    geometry::BBox region;
    double probability = 1.0;
};

// Average spatial and temporal streams. A spatial region pairs with a
// temporal event when it falls inside the event's span and overlaps its
// region with IoU >= fusion_match_iou; paired events average probabilities
// and take the union region. Unpaired entries pass through unchanged, or at
// half probability in strict-average mode.
std::vector<NearAccidentEvent> fuse(const std::vector<SpatialRegion>& spatial,
                                    const std::vector<NearAccidentEvent>& temporal,
                                    const NearMissConfig& cfg);

} // namespace crosswatch::nearmiss

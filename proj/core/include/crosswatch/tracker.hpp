#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/assoc.hpp"
#include "crosswatch/detection.hpp"
#include "crosswatch/kalman.hpp"

namespace crosswatch::tracker {

struct TrackerConfig {
    kalman::Mode mode = kalman::Mode::DeepSort;

    // Frames a confirmed track may coast before deletion. Left unset it
    // resolves by mode: 1 in sort mode, 30 in deepsort mode.
    std::optional<int> t_lost;
    int n_init = 3;        // consecutive hits to confirm
    int n_budget = 100;    // appearance gallery size, FIFO eviction
    double min_confidence = 0.3;

    double iou_min = 0.3;            // IoU gate for iou_cost association
    double lambda = 0.0;             // motion weight in the combined cost
    double mahalanobis_gate = 9.4877; // chi-square 0.95 quantile, 4 dof
    double cosine_gate = 0.2;

    kalman::NoiseConfig noise;

    // Append predicted centers while coasting. Off by default so archived
    // trajectories contain only observed positions.
    bool gap_fill = false;

    int resolved_t_lost() const {
        if (t_lost) return *t_lost;
        return mode == kalman::Mode::Sort ? 1 : 30;
    }
    void validate() const; // throws ValidationError
};

struct Track {
    std::int64_t id = 0;
    TrackStatus status = TrackStatus::Tentative;
    kalman::GaussianState state;
    int hits = 0;              // detections absorbed
    int age = 0;               // frames since creation
    int time_since_update = 0; // frames since the last absorbed detection
    std::deque<Eigen::VectorXd> gallery; // newest last, bounded by n_budget
    std::map<ObjectClass, int> class_votes;
    std::vector<std::pair<int, geometry::Point2>> points;
    std::vector<std::pair<int, geometry::BBox>> boxes;

    ObjectClass majority_class() const;
};

struct TrackView {
    std::int64_t id;
    geometry::BBox bbox;
    TrackStatus status;
};

struct FrameResult {
    int frame = 0;
    std::vector<TrackView> active; // tentative + confirmed, ordered by id
    std::vector<std::int64_t> new_ids;
    std::vector<std::int64_t> deleted_ids;
};

struct CascadeResult {
    std::vector<std::pair<int, int>> matches; // (track index, detection index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_detections;
};

// Appearance-and-motion association used in deepsort mode. Confirmed tracks
// are visited in bands of increasing time_since_update so recently seen
// tracks get first pick of the detections; tentative tracks and confirmed
// tracks missed exactly once then compete for the leftovers on IoU.
// Exposed separately so the banding behavior is testable on its own.
CascadeResult matching_cascade(const std::vector<Track>& tracks,
                               const std::vector<Detection>& detections,
                               const kalman::Filter& filter,
                               const TrackerConfig& cfg);

// Online multi-object tracker; feed frames in strictly increasing order.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {});

    const TrackerConfig& config() const { return cfg_; }

    // Advance to `frame`, associate its detections, spawn and retire tracks.
    // Detections below min_confidence and spatial-stream records (class
    // near_accident) are ignored. Throws ValidationError on out-of-order
    // frames, invalid boxes, or missing embeddings in deepsort mode.
    FrameResult step(int frame, const std::vector<Detection>& detections);

    // Full history of every track ever created, sorted by id.
    TrackArchive finalize() const;

    const std::vector<Track>& live_tracks() const { return tracks_; }

private:
    void predict_all();
    void retire(std::vector<std::int64_t>& deleted);
    CascadeResult associate_sort(const std::vector<Detection>& dets) const;

    TrackerConfig cfg_;
    kalman::Filter filter_;
    std::vector<Track> tracks_;       // live (tentative + confirmed)
    std::vector<ArchiveTrack> done_;  // deleted, in archive form
    std::int64_t next_id_ = 1;
    std::optional<int> last_frame_;
};

} // namespace crosswatch::tracker

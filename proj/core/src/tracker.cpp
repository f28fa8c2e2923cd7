#include "crosswatch/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "crosswatch/errors.hpp"

namespace crosswatch::tracker {

void TrackerConfig::validate() const {
    if (resolved_t_lost() < 1) throw ValidationError("t_lost must be at least 1");
    if (n_init < 1) throw ValidationError("n_init must be at least 1");
    if (n_budget < 1) throw ValidationError("n_budget must be at least 1");
    if (!(min_confidence >= 0.0 && min_confidence <= 1.0))
        throw ValidationError("min_confidence must lie in [0, 1]");
    if (!(iou_min >= 0.0 && iou_min <= 1.0))
        throw ValidationError("iou_min must lie in [0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValidationError("lambda must lie in [0, 1]");
    if (!(mahalanobis_gate > 0.0))
        throw ValidationError("mahalanobis_gate must be positive");
    if (!(cosine_gate > 0.0 && cosine_gate <= 1.0))
        throw ValidationError("cosine_gate must lie in (0, 1]");
    noise.validate();
}

ObjectClass Track::majority_class() const {
    ObjectClass best = ObjectClass::Car;
    int count = -1;
    for (const auto& [cls, n] : class_votes) { // map order makes ties stable
        if (n > count) {
            best = cls;
            count = n;
        }
    }
    return best;
}

namespace {

void validate_detection(const Detection& d) {
    if (!d.bbox.valid()) throw ValidationError("detection box is degenerate or non-finite");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0) || !std::isfinite(d.confidence))
        throw ValidationError("detection confidence outside [0, 1]");
    if (d.frame < 0) throw ValidationError("detection frame index is negative");
}

ArchiveTrack to_archive(const Track& t) {
    ArchiveTrack a;
    a.id = t.id;
    a.object_class = t.majority_class();
    a.final_status = t.status;
    a.points = t.points;
    a.boxes = t.boxes;
    return a;
}

} // namespace

CascadeResult matching_cascade(const std::vector<Track>& tracks,
                               const std::vector<Detection>& detections,
                               const kalman::Filter& filter,
                               const TrackerConfig& cfg) {
    CascadeResult res;
    const int n = static_cast<int>(tracks.size());
    const int m = static_cast<int>(detections.size());

    std::vector<Eigen::Vector4d> obs(m);
    std::vector<Eigen::VectorXd> embs(m);
    for (int j = 0; j < m; ++j) {
        if (!detections[j].embedding) {
            throw ValidationError("deepsort mode requires an embedding on every detection");
        }
        obs[j] = filter.observation_from_box(detections[j].bbox);
        embs[j] = *detections[j].embedding;
    }

    std::vector<char> track_taken(n, 0);
    std::vector<int> remaining(m);
    for (int j = 0; j < m; ++j) remaining[j] = j;

    // appearance bands: most recently updated confirmed tracks first
    for (int band = 1; band <= cfg.resolved_t_lost() && !remaining.empty(); ++band) {
        std::vector<int> subset;
        for (int i = 0; i < n; ++i) {
            if (tracks[i].status == TrackStatus::Confirmed &&
                tracks[i].time_since_update == band)
                subset.push_back(i);
        }
        if (subset.empty()) continue;

        std::vector<std::pair<Eigen::Vector4d, Eigen::Matrix4d>> projected;
        std::vector<std::vector<Eigen::VectorXd>> galleries;
        projected.reserve(subset.size());
        galleries.reserve(subset.size());
        for (int i : subset) {
            projected.push_back(filter.project(tracks[i].state));
            galleries.emplace_back(tracks[i].gallery.begin(), tracks[i].gallery.end());
        }
        std::vector<Eigen::Vector4d> band_obs;
        std::vector<Eigen::VectorXd> band_embs;
        for (int j : remaining) {
            band_obs.push_back(obs[j]);
            band_embs.push_back(embs[j]);
        }

        const auto motion = assoc::mahalanobis_cost(projected, band_obs, cfg.mahalanobis_gate);
        const auto appearance = assoc::cosine_cost(galleries, band_embs, cfg.cosine_gate);
        const auto cost = assoc::combined_cost(motion, appearance, cfg.lambda);
        const auto assign = assoc::hungarian(cost);

        std::vector<int> still;
        std::vector<char> det_taken(remaining.size(), 0);
        for (const auto& [r, c] : assign.matches) {
            res.matches.emplace_back(subset[r], remaining[c]);
            track_taken[subset[r]] = 1;
            det_taken[c] = 1;
        }
        for (size_t k = 0; k < remaining.size(); ++k)
            if (!det_taken[k]) still.push_back(remaining[k]);
        remaining = std::move(still);
    }

    // leftovers: tentative tracks plus confirmed tracks missed exactly once
    // compete on box overlap
    std::vector<int> iou_candidates;
    for (int i = 0; i < n; ++i) {
        if (track_taken[i]) continue;
        if (tracks[i].status == TrackStatus::Tentative ||
            (tracks[i].status == TrackStatus::Confirmed && tracks[i].time_since_update == 1))
            iou_candidates.push_back(i);
    }
    if (!iou_candidates.empty() && !remaining.empty()) {
        std::vector<geometry::BBox> tboxes, dboxes;
        for (int i : iou_candidates) tboxes.push_back(filter.box_from_state(tracks[i].state));
        for (int j : remaining) dboxes.push_back(detections[j].bbox);
        const auto assign = assoc::hungarian(assoc::iou_cost(tboxes, dboxes, cfg.iou_min));

        std::vector<int> still;
        std::vector<char> det_taken(remaining.size(), 0);
        for (const auto& [r, c] : assign.matches) {
            res.matches.emplace_back(iou_candidates[r], remaining[c]);
            track_taken[iou_candidates[r]] = 1;
            det_taken[c] = 1;
        }
        for (size_t k = 0; k < remaining.size(); ++k)
            if (!det_taken[k]) still.push_back(remaining[k]);
        remaining = std::move(still);
    }

    for (int i = 0; i < n; ++i)
        if (!track_taken[i]) res.unmatched_tracks.push_back(i);
    res.unmatched_detections = std::move(remaining);
    std::sort(res.matches.begin(), res.matches.end());
    return res;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg), filter_(cfg.mode, cfg.noise) {
    cfg_.validate();
}

CascadeResult Tracker::associate_sort(const std::vector<Detection>& dets) const {
    std::vector<geometry::BBox> tboxes;
    tboxes.reserve(tracks_.size());
    for (const auto& t : tracks_) tboxes.push_back(filter_.box_from_state(t.state));
    std::vector<geometry::BBox> dboxes;
    dboxes.reserve(dets.size());
    for (const auto& d : dets) dboxes.push_back(d.bbox);

    const auto assign = assoc::hungarian(assoc::iou_cost(tboxes, dboxes, cfg_.iou_min));
    CascadeResult res;
    res.matches = assign.matches;
    res.unmatched_tracks = assign.unmatched_rows;
    res.unmatched_detections = assign.unmatched_cols;
    return res;
}

void Tracker::predict_all() {
    for (auto& t : tracks_) {
        filter_.predict(t.state);
        ++t.age;
        ++t.time_since_update;
        if (!filter_.state_valid(t.state)) t.status = TrackStatus::Deleted;
    }
}

void Tracker::retire(std::vector<std::int64_t>& deleted) {
    for (auto& t : tracks_) {
        if (t.status == TrackStatus::Deleted) {
            deleted.push_back(t.id);
            done_.push_back(to_archive(t));
        }
    }
    tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                                 [](const Track& t) { return t.status == TrackStatus::Deleted; }),
                  tracks_.end());
}

FrameResult Tracker::step(int frame, const std::vector<Detection>& detections) {
    if (frame < 0) throw ValidationError("frame index must be non-negative");
    if (last_frame_ && frame <= *last_frame_) {
        throw ValidationError("frames must be fed in strictly increasing order");
    }

    std::vector<Detection> dets;
    dets.reserve(detections.size());
    for (const auto& d : detections) {
        validate_detection(d);
        if (!is_vehicle(d.object_class)) continue; // spatial stream, not a road user
        if (d.confidence < cfg_.min_confidence) continue;
        dets.push_back(d);
    }

    FrameResult out;
    out.frame = frame;

    const int steps = last_frame_ ? frame - *last_frame_ : 1;
    for (int k = 0; k < steps; ++k) predict_all();
    last_frame_ = frame;
    retire(out.deleted_ids); // states that became degenerate while coasting

    const CascadeResult assoc_result = cfg_.mode == kalman::Mode::Sort
                                           ? associate_sort(dets)
                                           : matching_cascade(tracks_, dets, filter_, cfg_);

    for (const auto& [ti, dj] : assoc_result.matches) {
        Track& t = tracks_[ti];
        const Detection& d = dets[dj];
        filter_.update(t.state, filter_.observation_from_box(d.bbox));
        ++t.hits;
        t.time_since_update = 0;
        if (t.status == TrackStatus::Tentative && t.hits >= cfg_.n_init) {
            t.status = TrackStatus::Confirmed;
        }
        if (d.embedding) {
            t.gallery.push_back(*d.embedding);
            while (static_cast<int>(t.gallery.size()) > cfg_.n_budget) t.gallery.pop_front();
        }
        ++t.class_votes[d.object_class];
        const geometry::BBox box = filter_.box_from_state(t.state);
        t.points.emplace_back(frame, box.center());
        t.boxes.emplace_back(frame, box);
    }

    for (int ti : assoc_result.unmatched_tracks) {
        Track& t = tracks_[ti];
        if (t.status == TrackStatus::Tentative) {
            // a miss breaks the consecutive-hit probation
            t.status = TrackStatus::Deleted;
        } else if (t.time_since_update > cfg_.resolved_t_lost()) {
            t.status = TrackStatus::Deleted;
        } else if (cfg_.gap_fill) {
            const geometry::BBox box = filter_.box_from_state(t.state);
            t.points.emplace_back(frame, box.center());
            t.boxes.emplace_back(frame, box);
        }
    }

    for (int dj : assoc_result.unmatched_detections) {
        const Detection& d = dets[dj];
        Track t;
        t.id = next_id_++;
        t.status = cfg_.n_init <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
        t.state = filter_.init_from_observation(filter_.observation_from_box(d.bbox));
        t.hits = 1;
        t.age = 0;
        t.time_since_update = 0;
        if (d.embedding) t.gallery.push_back(*d.embedding);
        ++t.class_votes[d.object_class];
        const geometry::BBox box = filter_.box_from_state(t.state);
        t.points.emplace_back(frame, box.center());
        t.boxes.emplace_back(frame, box);
        out.new_ids.push_back(t.id);
        tracks_.push_back(std::move(t));
    }

    retire(out.deleted_ids);

    out.active.reserve(tracks_.size());
    for (const auto& t : tracks_) {
        out.active.push_back({t.id, filter_.box_from_state(t.state), t.status});
    }
    std::sort(out.active.begin(), out.active.end(),
              [](const TrackView& a, const TrackView& b) { return a.id < b.id; });
    return out;
}

TrackArchive Tracker::finalize() const {
    TrackArchive archive;
    archive.tracks.reserve(done_.size() + tracks_.size());
    for (const auto& a : done_) archive.tracks.push_back(a);
    for (const auto& t : tracks_) archive.tracks.push_back(to_archive(t));
    std::sort(archive.tracks.begin(), archive.tracks.end(),
              [](const ArchiveTrack& a, const ArchiveTrack& b) { return a.id < b.id; });
    return archive;
}

} // namespace crosswatch::tracker

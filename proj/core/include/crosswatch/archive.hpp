#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crosswatch/detection.hpp"
#include "crosswatch/geometry.hpp"

namespace crosswatch {

enum class TrackStatus { Tentative, Confirmed, Deleted };

const char* to_string(TrackStatus s);

// Per-track trajectory history. Points and boxes are recorded only on frames
// where the track actually absorbed a detection, so the trajectory reflects
// observed motion rather than coasting guesses. Both lists are sorted by
// frame and parallel to each other.
struct ArchiveTrack {
    std::int64_t id = 0;
    ObjectClass object_class = ObjectClass::Car; // majority vote over matches
    TrackStatus final_status = TrackStatus::Tentative;
    std::vector<std::pair<int, geometry::Point2>> points;
    std::vector<std::pair<int, geometry::BBox>> boxes;

    // Box at `frame`, falling back to the nearest earlier frame; nullptr when
    // the track has no box at or before `frame`.
    const geometry::BBox* box_at_or_before(int frame) const;
};

// Everything a run of the tracker produced, including deleted tracks.
// Ids are unique and strictly increasing in creation order. The simulator
// emits the same shape for ground truth.
struct TrackArchive {
    std::vector<ArchiveTrack> tracks;

    const ArchiveTrack* find(std::int64_t id) const;
    int first_frame() const; // smallest observed frame, 0 when empty
    int last_frame() const;  // largest observed frame, -1 when empty
};

} // namespace crosswatch

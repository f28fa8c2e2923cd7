#include "crosswatch/archive.hpp"

#include <algorithm>

namespace crosswatch {

const char* to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::Tentative: return "tentative";
        case TrackStatus::Confirmed: return "confirmed";
        case TrackStatus::Deleted: return "deleted";
    }
    return "tentative";
}

const geometry::BBox* ArchiveTrack::box_at_or_before(int frame) const {
    const geometry::BBox* found = nullptr;
    for (const auto& [f, box] : boxes) {
        if (f > frame) break;
        found = &box;
    }
    return found;
}

const ArchiveTrack* TrackArchive::find(std::int64_t id) const {
    for (const auto& t : tracks)
        if (t.id == id) return &t;
    return nullptr;
}

int TrackArchive::first_frame() const {
    int first = 0;
    bool any = false;
    for (const auto& t : tracks) {
        if (t.points.empty()) continue;
        if (!any || t.points.front().first < first) first = t.points.front().first;
        any = true;
    }
    return any ? first : 0;
}

int TrackArchive::last_frame() const {
    int last = -1;
    for (const auto& t : tracks) {
        if (!t.points.empty()) last = std::max(last, t.points.back().first);
    }
    return last;
}

} // namespace crosswatch

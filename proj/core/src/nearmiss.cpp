#include "crosswatch/nearmiss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "crosswatch/errors.hpp"
#include "crosswatch/log.hpp"

namespace crosswatch::nearmiss {

using geometry::BBox;
using geometry::Point2;
using geometry::Segment;

void NearMissConfig::validate() const {
    if (window_frames < 2) throw ValidationError("window length L must be at least 2");
    if (tau_pixels_override < 0.0) throw ValidationError("tau_pixels_override must be >= 0");
    if (tau_pixels_override == 0.0 && !(tau_relative > 0.0))
        throw ValidationError("tau_relative must be positive when no pixel override is set");
    if (!(fusion_match_iou >= 0.0 && fusion_match_iou <= 1.0))
        throw ValidationError("fusion_match_iou must lie in [0, 1]");
}

int window_index_for(int frame, int L) {
    if (frame <= L) return 0;
    return (frame - 1) / L;
}

std::vector<TrajectoryWindow> stack_windows(const TrackArchive& archive, int L) {
    if (L < 2) throw ValidationError("window length L must be at least 2");

    std::vector<TrajectoryWindow> windows;
    const int last = archive.last_frame();
    if (last < 0) return windows;

    const int k_first = window_index_for(archive.first_frame(), L);
    const int k_last = window_index_for(last, L);
    windows.resize(k_last - k_first + 1);
    for (int k = k_first; k <= k_last; ++k) {
        TrajectoryWindow& w = windows[k - k_first];
        w.index = k;
        w.first_frame = k == 0 ? 0 : k * L + 1;
        w.last_frame = (k + 1) * L;
    }

    for (const auto& track : archive.tracks) {
        // tracks are id-sorted, so slices come out id-sorted per window
        std::map<int, TrackSlice*> open;
        for (const auto& [frame, point] : track.points) {
            const int k = window_index_for(frame, L);
            TrajectoryWindow& w = windows[k - k_first];
            auto it = open.find(k);
            if (it == open.end()) {
                w.tracks.push_back({track.id, {}, 0.0});
                it = open.emplace(k, &w.tracks.back()).first;
            }
            it->second->points.emplace_back(frame, point);
        }
        for (auto& [k, slice] : open) {
            double sum = 0.0;
            int n = 0;
            const TrajectoryWindow& w = windows[k - k_first];
            for (const auto& [bf, box] : track.boxes) {
                if (bf < w.first_frame || bf > w.last_frame) continue;
                sum += box.diagonal();
                ++n;
            }
            slice->mean_diag = n > 0 ? sum / n : 0.0;
        }
    }
    return windows;
}

namespace {

// linear interpolation along a polyline of (frame, point) samples
std::optional<Point2> position_at(const std::vector<std::pair<int, Point2>>& pts, int frame) {
    if (pts.empty() || frame < pts.front().first || frame > pts.back().first)
        return std::nullopt;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        if (frame == pts[i].first) return pts[i].second;
        if (frame > pts[i].first && frame < pts[i + 1].first) {
            const double t = double(frame - pts[i].first) /
                             double(pts[i + 1].first - pts[i].first);
            const Point2& a = pts[i].second;
            const Point2& b = pts[i + 1].second;
            return Point2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        }
    }
    return pts.back().second;
}

double point_dist(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

bool parallel(const Segment& p, const Segment& q) {
    const double cx = (p.b.x - p.a.x) * (q.b.y - q.a.y) -
                      (p.b.y - p.a.y) * (q.b.x - q.a.x);
    return cx == 0.0;
}

// closest pair of points between two non-crossing segments; the minimum is
// always attained at an endpoint of one of them
std::pair<Point2, Point2> closest_pair(const Segment& p, const Segment& q) {
    std::pair<Point2, Point2> best{p.a, geometry::closest_point_on_segment(p.a, q)};
    double best_d = point_dist(best.first, best.second);
    auto consider = [&](const Point2& from, const Segment& onto, bool flip) {
        const Point2 to = geometry::closest_point_on_segment(from, onto);
        const double d = point_dist(from, to);
        if (d < best_d) {
            best_d = d;
            best = flip ? std::pair<Point2, Point2>{to, from}
                        : std::pair<Point2, Point2>{from, to};
        }
    };
    consider(p.b, q, false);
    consider(q.a, p, true);
    consider(q.b, p, true);
    return best;
}

struct PairScan {
    bool crossing = false;
    Point2 crossing_point;
    int crossing_frame = 0;
    std::set<int> active;          // frames with sub-threshold simultaneous approach
    double min_distance = 0.0;     // over active approaches, 0 for crossings
    Point2 approach_mid;           // closest-approach midpoint candidate
    bool has_approach = false;
};

PairScan scan_pair(const TrackSlice& a, const TrackSlice& b, double tau) {
    PairScan out;
    const auto& pa = a.points;
    const auto& pb = b.points;

    // crossing branch: a genuine transversal crossing of the two polylines.
    // multiple crossings resolve to the earliest completed one, which keeps
    // the result independent of argument order
    for (size_t i = 0; i + 1 < pa.size(); ++i) {
        const Segment sa{pa[i].second, pa[i + 1].second};
        for (size_t j = 0; j + 1 < pb.size(); ++j) {
            const Segment sb{pb[j].second, pb[j + 1].second};
            if (parallel(sa, sb)) continue;
            const auto hit = geometry::segment_intersection(sa, sb);
            if (!hit) continue;
            const int frame = std::max(pa[i + 1].first, pb[j + 1].first);
            if (!out.crossing || frame < out.crossing_frame ||
                (frame == out.crossing_frame &&
                 (hit->x < out.crossing_point.x ||
                  (hit->x == out.crossing_point.x && hit->y < out.crossing_point.y)))) {
                out.crossing = true;
                out.crossing_frame = frame;
                out.crossing_point = *hit;
            }
        }
    }

    // proximity branch: compare only segments whose frame intervals overlap,
    // so near-in-space but far-in-time motion does not alarm
    double best_d = tau;
    for (size_t i = 0; i + 1 < pa.size(); ++i) {
        const int a0 = pa[i].first, a1 = pa[i + 1].first;
        const Segment sa{pa[i].second, pa[i + 1].second};
        for (size_t j = 0; j + 1 < pb.size(); ++j) {
            const int b0 = pb[j].first, b1 = pb[j + 1].first;
            if (a1 < b0 || b1 < a0) continue;
            const Segment sb{pb[j].second, pb[j + 1].second};
            const double d = geometry::min_segment_distance(sa, sb);
            if (d >= tau) continue;
            for (int f = std::max(a0, b0); f <= std::min(a1, b1); ++f) out.active.insert(f);
            if (!out.has_approach || d < best_d) {
                best_d = d;
                const auto [ca, cb] = closest_pair(sa, sb);
                out.approach_mid = {0.5 * (ca.x + cb.x), 0.5 * (ca.y + cb.y)};
                out.has_approach = true;
            }
        }
    }
    out.min_distance = out.crossing ? 0.0 : (out.has_approach ? best_d : 0.0);
    return out;
}

} // namespace

CollisionState detect_collisions(const TrajectoryWindow& window, const NearMissConfig& cfg) {
    cfg.validate();
    CollisionState state;
    state.window_index = window.index;

    const auto& tracks = window.tracks;
    for (size_t i = 0; i < tracks.size(); ++i) {
        if (tracks[i].points.size() < 2) continue;
        for (size_t j = i + 1; j < tracks.size(); ++j) {
            if (tracks[j].points.size() < 2) continue;
            const TrackSlice& a = tracks[i].id < tracks[j].id ? tracks[i] : tracks[j];
            const TrackSlice& b = tracks[i].id < tracks[j].id ? tracks[j] : tracks[i];

            const double tau = cfg.tau_pixels_override > 0.0
                                   ? cfg.tau_pixels_override
                                   : cfg.tau_relative * 0.5 * (a.mean_diag + b.mean_diag);
            PairScan scan = scan_pair(a, b, tau);
            if (!scan.crossing && scan.active.empty()) continue;

            if (scan.crossing) scan.active.insert(scan.crossing_frame);

            Collision c;
            c.id_a = a.id;
            c.id_b = b.id;
            c.first_active = *scan.active.begin();
            c.last_active = *scan.active.rbegin();

            // anchor the event at the closest simultaneous approach
            int anchor = scan.crossing ? scan.crossing_frame
                                       : (c.first_active + c.last_active) / 2;
            double anchor_d = std::numeric_limits<double>::infinity();
            bool found = false;
            for (int f : scan.active) {
                const auto qa = position_at(a.points, f);
                const auto qb = position_at(b.points, f);
                if (!qa || !qb) continue;
                const double d = point_dist(*qa, *qb);
                if (d < anchor_d) {
                    anchor_d = d;
                    anchor = f;
                    found = true;
                }
            }
            c.frame_detected = anchor;
            c.min_distance = scan.min_distance;
            if (scan.crossing) {
                c.contact = scan.crossing_point;
            } else if (found) {
                const auto qa = position_at(a.points, anchor);
                const auto qb = position_at(b.points, anchor);
                c.contact = {0.5 * (qa->x + qb->x), 0.5 * (qa->y + qb->y)};
            } else {
                c.contact = scan.approach_mid;
            }
            state.entries.push_back(c);
        }
    }
    std::sort(state.entries.begin(), state.entries.end(),
              [](const Collision& x, const Collision& y) {
                  return std::tie(x.id_a, x.id_b) < std::tie(y.id_a, y.id_b);
              });
    return state;
}

namespace {

std::optional<BBox> event_region(const ArchiveTrack& ta, const ArchiveTrack& tb,
                                 int span_start, int span_end, int anchor,
                                 RegionMode mode) {
    if (mode == RegionMode::Contact) {
        const BBox* ba = ta.box_at_or_before(anchor);
        const BBox* bb = tb.box_at_or_before(anchor);
        if (!ba || !bb) return std::nullopt;
        return geometry::union_box(*ba, *bb);
    }
    // envelope: union of both tracks' observed boxes over the span
    std::optional<BBox> acc;
    auto add = [&](const BBox& b) { acc = acc ? geometry::union_box(*acc, b) : b; };
    for (const ArchiveTrack* t : {&ta, &tb}) {
        bool any = false;
        for (const auto& [f, box] : t->boxes) {
            if (f < span_start || f > span_end) continue;
            add(box);
            any = true;
        }
        if (!any) {
            const BBox* fallback = t->box_at_or_before(span_start);
            if (!fallback) return std::nullopt;
            add(*fallback);
        }
    }
    return acc;
}

} // namespace

std::vector<WindowEvent> temporal_events(const CollisionState& collisions,
                                         const TrackArchive& archive,
                                         const TrajectoryWindow& window,
                                         const NearMissConfig& cfg) {
    std::vector<WindowEvent> out;
    for (const Collision& c : collisions.entries) {
        const ArchiveTrack* ta = archive.find(c.id_a);
        const ArchiveTrack* tb = archive.find(c.id_b);
        if (!ta || !tb) {
            throw ValidationError("collision references track ids missing from the archive");
        }
        WindowEvent we;
        we.window_index = collisions.window_index;
        we.min_distance = c.min_distance;
        we.event.frame_start = c.first_active;
        we.event.frame_end = cfg.span_mode == SpanMode::Active ? c.last_active
                                                               : window.last_frame;
        we.event.probability = 1.0;
        we.event.track_a = c.id_a;
        we.event.track_b = c.id_b;
        const auto region = event_region(*ta, *tb, we.event.frame_start,
                                         we.event.frame_end, c.frame_detected,
                                         cfg.region_mode);
        if (!region) {
            log::warn("dropping conflict between tracks " + std::to_string(c.id_a) +
                      " and " + std::to_string(c.id_b) + ": no boxes available for its span");
            continue;
        }
        we.event.region = *region;
        out.push_back(we);
    }
    return out;
}

std::vector<NearAccidentEvent> merge_window_events(const std::vector<WindowEvent>& events) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<WindowEvent>> by_pair;
    for (const auto& we : events) {
        by_pair[{we.event.track_a, we.event.track_b}].push_back(we);
    }

    std::vector<NearAccidentEvent> out;
    for (auto& [pair, list] : by_pair) {
        std::sort(list.begin(), list.end(),
                  [](const WindowEvent& x, const WindowEvent& y) {
                      return x.window_index < y.window_index;
                  });
        size_t i = 0;
        while (i < list.size()) {
            NearAccidentEvent merged = list[i].event;
            int last_window = list[i].window_index;
            size_t j = i + 1;
            while (j < list.size() && list[j].window_index == last_window + 1) {
                merged.frame_start = std::min(merged.frame_start, list[j].event.frame_start);
                merged.frame_end = std::max(merged.frame_end, list[j].event.frame_end);
                merged.region = geometry::union_box(merged.region, list[j].event.region);
                last_window = list[j].window_index;
                ++j;
            }
            out.push_back(merged);
            i = j;
        }
    }
    std::sort(out.begin(), out.end(), [](const NearAccidentEvent& x, const NearAccidentEvent& y) {
        return std::tie(x.frame_start, x.frame_end, x.track_a, x.track_b) <
               std::tie(y.frame_start, y.frame_end, y.track_a, y.track_b);
    });
    return out;
}

std::vector<NearAccidentEvent> temporal_stream(const TrackArchive& archive,
                                               const NearMissConfig& cfg) {
    cfg.validate();
    const std::vector<TrajectoryWindow> raw = stack_windows(archive, cfg.window_frames);

    std::vector<WindowEvent> all;
    for (size_t k = 0; k < raw.size(); ++k) {
        TrajectoryWindow window = raw[k];
        if (k > 0) {
            // cross-window continuity: carry each track's last point over
            for (TrackSlice& slice : window.tracks) {
                for (const TrackSlice& prev : raw[k - 1].tracks) {
                    if (prev.id != slice.id || prev.points.empty()) continue;
                    slice.points.insert(slice.points.begin(), prev.points.back());
                    break;
                }
            }
        }
        const CollisionState collisions = detect_collisions(window, cfg);
        auto events = temporal_events(collisions, archive, window, cfg);
        all.insert(all.end(), events.begin(), events.end());
    }
    return merge_window_events(all);
}

std::vector<NearAccidentEvent> fuse(const std::vector<SpatialRegion>& spatial,
                                    const std::vector<NearAccidentEvent>& temporal,
                                    const NearMissConfig& cfg) {
    cfg.validate();
    std::vector<NearAccidentEvent> out;
    std::vector<char> used(spatial.size(), 0);

    std::vector<NearAccidentEvent> sorted_temporal = temporal;
    std::sort(sorted_temporal.begin(), sorted_temporal.end(),
              [](const NearAccidentEvent& x, const NearAccidentEvent& y) {
                  return std::tie(x.frame_start, x.frame_end, x.track_a, x.track_b) <
                         std::tie(y.frame_start, y.frame_end, y.track_a, y.track_b);
              });

    for (const NearAccidentEvent& e : sorted_temporal) {
        double spatial_sum = 0.0;
        int matched = 0;
        NearAccidentEvent fused = e;
        for (size_t s = 0; s < spatial.size(); ++s) {
            if (used[s]) continue;
            const SpatialRegion& r = spatial[s];
            if (r.frame < e.frame_start || r.frame > e.frame_end) continue;
            if (geometry::iou(r.region, e.region) < cfg.fusion_match_iou) continue;
            used[s] = 1;
            spatial_sum += r.probability;
            fused.region = geometry::union_box(fused.region, r.region);
            ++matched;
        }
        if (matched > 0) {
            fused.probability = 0.5 * (e.probability + spatial_sum / matched);
        } else if (cfg.fusion_mode == FusionMode::StrictAverage) {
            fused.probability = 0.5 * e.probability;
        }
        out.push_back(fused);
    }

    for (size_t s = 0; s < spatial.size(); ++s) {
        if (used[s]) continue;
        NearAccidentEvent e;
        e.frame_start = e.frame_end = spatial[s].frame;
        e.region = spatial[s].region;
        e.probability = cfg.fusion_mode == FusionMode::StrictAverage
                            ? 0.5 * spatial[s].probability
                            : spatial[s].probability;
        out.push_back(e);
    }

    std::sort(out.begin(), out.end(), [](const NearAccidentEvent& x, const NearAccidentEvent& y) {
        return std::tie(x.frame_start, x.frame_end, x.track_a, x.track_b) <
               std::tie(y.frame_start, y.frame_end, y.track_a, y.track_b);
    });
    return out;
}

} // namespace crosswatch::nearmiss

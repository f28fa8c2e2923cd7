#include <doctest.h>

#include "crosswatch/errors.hpp"
#include "crosswatch/nearmiss.hpp"

#include <cmath>

using namespace crosswatch;
using namespace crosswatch::nearmiss;
using geometry::BBox;
using geometry::Point2;

namespace {

ArchiveTrack make_track(std::int64_t id,
                        std::vector<std::pair<int, Point2>> pts,
                        double w, double h) {
    ArchiveTrack t;
    t.id = id;
    t.object_class = ObjectClass::Car;
    t.final_status = TrackStatus::Confirmed;
    for (const auto& [f, p] : pts) {
        t.boxes.emplace_back(f, BBox{p.x - w / 2, p.y - h / 2, w, h});
    }
    t.points = std::move(pts);
    return t;
}

TrackSlice slice(std::int64_t id, std::vector<std::pair<int, Point2>> pts,
                 double mean_diag) {
    return TrackSlice{id, std::move(pts), mean_diag};
}

TrajectoryWindow window_of(std::vector<TrackSlice> slices, int first, int last) {
    TrajectoryWindow w;
    w.index = 0;
    w.first_frame = first;
    w.last_frame = last;
    w.tracks = std::move(slices);
    return w;
}

} // namespace

TEST_CASE("configuration validation") {
    NearMissConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.window_frames = 1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.tau_pixels_override = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.tau_relative = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.tau_pixels_override = 12.0; // pixel override makes tau_relative moot
    CHECK_NOTHROW(cfg.validate());
    cfg = {};
    cfg.fusion_match_iou = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("window indexing partitions the frame axis") {
    // window 0 absorbs frame 0, then blocks of L frames
    CHECK(window_index_for(0, 10) == 0);
    CHECK(window_index_for(1, 10) == 0);
    CHECK(window_index_for(10, 10) == 0);
    CHECK(window_index_for(11, 10) == 1);
    CHECK(window_index_for(20, 10) == 1);
    CHECK(window_index_for(21, 10) == 2);
    CHECK(window_index_for(2, 2) == 0);
    CHECK(window_index_for(3, 2) == 1);
    CHECK(window_index_for(4, 2) == 1);
    CHECK(window_index_for(5, 2) == 2);
}

TEST_CASE("window stacking covers every observed point exactly once") {
    TrackArchive archive;
    std::vector<std::pair<int, Point2>> p1, p2;
    for (int f = 0; f <= 25; ++f) p1.emplace_back(f, Point2{double(f), 0.0});
    for (int f = 22; f <= 30; ++f) p2.emplace_back(f, Point2{double(f), 50.0});
    archive.tracks.push_back(make_track(1, p1, 10, 10));
    archive.tracks.push_back(make_track(2, p2, 10, 10));

    auto windows = stack_windows(archive, 10);
    REQUIRE(windows.size() == 3);
    CHECK(windows[0].index == 0);
    CHECK(windows[0].first_frame == 0);
    CHECK(windows[0].last_frame == 10);
    CHECK(windows[1].first_frame == 11);
    CHECK(windows[1].last_frame == 20);
    CHECK(windows[2].first_frame == 21);
    CHECK(windows[2].last_frame == 30);

    REQUIRE(windows[0].tracks.size() == 1);
    CHECK(windows[0].tracks[0].points.size() == 11); // frames 0..10
    REQUIRE(windows[1].tracks.size() == 1);
    CHECK(windows[1].tracks[0].points.size() == 10); // frames 11..20
    REQUIRE(windows[2].tracks.size() == 2);          // slices id-ordered
    CHECK(windows[2].tracks[0].id == 1);
    CHECK(windows[2].tracks[0].points.size() == 5);  // frames 21..25
    CHECK(windows[2].tracks[1].id == 2);
    CHECK(windows[2].tracks[1].points.size() == 9);  // frames 22..30

    std::size_t total = 0;
    for (const auto& w : windows) {
        for (const auto& s : w.tracks) {
            total += s.points.size();
            CHECK(s.mean_diag == doctest::Approx(std::sqrt(200.0)));
            for (const auto& [f, pt] : s.points) {
                CHECK(f >= w.first_frame);
                CHECK(f <= w.last_frame);
            }
        }
    }
    CHECK(total == p1.size() + p2.size());
}

TEST_CASE("window stacking keeps empty windows inside the span") {
    TrackArchive archive;
    std::vector<std::pair<int, Point2>> p1, p2;
    for (int f = 0; f <= 5; ++f) p1.emplace_back(f, Point2{double(f), 0.0});
    for (int f = 35; f <= 40; ++f) p2.emplace_back(f, Point2{double(f), 0.0});
    archive.tracks.push_back(make_track(1, p1, 10, 10));
    archive.tracks.push_back(make_track(2, p2, 10, 10));
    auto windows = stack_windows(archive, 10);
    REQUIRE(windows.size() == 4);
    CHECK(windows[1].tracks.empty());
    CHECK(windows[2].tracks.empty());
}

TEST_CASE("window stacking starts at the archive's first occupied window") {
    TrackArchive archive;
    std::vector<std::pair<int, Point2>> pts;
    for (int f = 35; f <= 40; ++f) pts.emplace_back(f, Point2{double(f), 0.0});
    archive.tracks.push_back(make_track(9, pts, 10, 10));
    auto windows = stack_windows(archive, 10);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].index == 3);
    CHECK(windows[0].first_frame == 31);
    CHECK(windows[0].last_frame == 40);
}

TEST_CASE("a transversal crossing is a conflict with zero distance") {
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 0; f <= 5; ++f) {
        pa.emplace_back(f, Point2{2.0 * f, 2.0 * f});        // diagonal up
        pb.emplace_back(f, Point2{2.0 * f, 10.0 - 2.0 * f}); // diagonal down
    }
    auto w = window_of({slice(3, pa, 2.0), slice(7, pb, 2.0)}, 0, 10);
    NearMissConfig cfg; // tau = 0.5 * 0.5 * (2+2) = 1
    CollisionState st = detect_collisions(w, cfg);
    REQUIRE(st.entries.size() == 1);
    const Collision& c = st.entries[0];
    CHECK(c.id_a == 3);
    CHECK(c.id_b == 7);
    CHECK(c.min_distance == 0.0);
    CHECK(c.contact.x == doctest::Approx(5.0));
    CHECK(c.contact.y == doctest::Approx(5.0));
    // the crossing segments span frames 2..3; frame 2 ties frame 3 on
    // simultaneous distance and the earlier frame wins
    CHECK(c.first_active == 2);
    CHECK(c.last_active == 3);
    CHECK(c.frame_detected == 2);
}

TEST_CASE("spatial overlap at different times is not a conflict") {
    // Both tracks drive the same stretch of road, ten frames apart. Their
    // polylines overlap collinearly, but nothing ever happens simultaneously.
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 0; f <= 5; ++f) pa.emplace_back(f, Point2{2.0 * f, 0.0});
    for (int f = 10; f <= 15; ++f) pb.emplace_back(f, Point2{2.0 * (f - 10), 0.0});
    auto w = window_of({slice(1, pa, 16.0), slice(2, pb, 16.0)}, 0, 20);
    NearMissConfig cfg; // tau = 8, far above the zero spatial gap
    CollisionState st = detect_collisions(w, cfg);
    CHECK(st.entries.empty());
}

TEST_CASE("a crossing counts even when the tracks use it at different times") {
    // Same timing as above but transversal: one drives east early, the other
    // crosses the same spot northbound later. Crossing geometry alarms
    // regardless of timing.
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 0; f <= 5; ++f) pa.emplace_back(f, Point2{2.0 * f, 0.0});
    for (int f = 10; f <= 15; ++f)
        pb.emplace_back(f, Point2{5.0, -5.0 + 2.0 * (f - 10)});
    auto w = window_of({slice(1, pa, 2.0), slice(2, pb, 2.0)}, 0, 20);
    NearMissConfig cfg;
    CollisionState st = detect_collisions(w, cfg);
    REQUIRE(st.entries.size() == 1);
    const Collision& c = st.entries[0];
    CHECK(c.min_distance == 0.0);
    CHECK(c.contact.x == doctest::Approx(5.0));
    CHECK(c.contact.y == doctest::Approx(0.0));
    // detection lands when the later mover completes the crossing segment
    CHECK(c.frame_detected == 13);
    CHECK(c.first_active == 13);
    CHECK(c.last_active == 13);
}

TEST_CASE("sustained proximity below tau marks the whole sub-threshold run") {
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 0; f <= 5; ++f) {
        pa.emplace_back(f, Point2{2.0 * f, 0.0});
        pb.emplace_back(f, Point2{2.0 * f, 3.0}); // parallel lane, 3 px away
    }
    SUBCASE("tau above the gap alarms across the run") {
        auto w = window_of({slice(1, pa, 16.0), slice(2, pb, 16.0)}, 0, 10);
        NearMissConfig cfg; // tau = 8
        CollisionState st = detect_collisions(w, cfg);
        REQUIRE(st.entries.size() == 1);
        const Collision& c = st.entries[0];
        CHECK(c.min_distance == doctest::Approx(3.0));
        CHECK(c.first_active == 0);
        CHECK(c.last_active == 5);
        CHECK(c.frame_detected == 0); // constant gap: earliest frame wins
        CHECK(c.contact.x == doctest::Approx(0.0));
        CHECK(c.contact.y == doctest::Approx(1.5));
    }
    SUBCASE("tau below the gap stays quiet") {
        // small objects: tau = 0.5 * (5 + 5) / 2 = 2.5 < 3
        auto w = window_of({slice(1, pa, 5.0), slice(2, pb, 5.0)}, 0, 10);
        NearMissConfig cfg;
        CollisionState st = detect_collisions(w, cfg);
        CHECK(st.entries.empty());
    }
    SUBCASE("pixel override replaces the size-relative rule") {
        auto w = window_of({slice(1, pa, 5.0), slice(2, pb, 5.0)}, 0, 10);
        NearMissConfig cfg;
        cfg.tau_pixels_override = 3.5; // the relative rule (2.5) stays quiet
        CollisionState st = detect_collisions(w, cfg);
        REQUIRE(st.entries.size() == 1);
        CHECK(st.entries[0].min_distance == doctest::Approx(3.0));
    }
}

TEST_CASE("conflicts are symmetric in track labeling and translation") {
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 0; f <= 5; ++f) {
        pa.emplace_back(f, Point2{2.0 * f, 2.0 * f});
        pb.emplace_back(f, Point2{2.0 * f, 10.0 - 2.0 * f});
    }
    NearMissConfig cfg;
    auto w1 = window_of({slice(3, pa, 2.0), slice(7, pb, 2.0)}, 0, 10);
    // swap which id drives which path
    auto w2 = window_of({slice(3, pb, 2.0), slice(7, pa, 2.0)}, 0, 10);
    CollisionState s1 = detect_collisions(w1, cfg);
    CollisionState s2 = detect_collisions(w2, cfg);
    REQUIRE(s1.entries.size() == 1);
    REQUIRE(s2.entries.size() == 1);
    CHECK(s1.entries[0].id_a == s2.entries[0].id_a);
    CHECK(s1.entries[0].frame_detected == s2.entries[0].frame_detected);
    CHECK(s1.entries[0].min_distance == s2.entries[0].min_distance);
    CHECK(s1.entries[0].contact.x == doctest::Approx(s2.entries[0].contact.x));
    CHECK(s1.entries[0].contact.y == doctest::Approx(s2.entries[0].contact.y));

    // rigid translation moves the contact point and nothing else
    const double dx = 1000.0, dy = -500.0;
    auto shift = [&](std::vector<std::pair<int, Point2>> pts) {
        for (auto& [f, p] : pts) {
            p.x += dx;
            p.y += dy;
        }
        return pts;
    };
    auto w3 = window_of({slice(3, shift(pa), 2.0), slice(7, shift(pb), 2.0)}, 0, 10);
    CollisionState s3 = detect_collisions(w3, cfg);
    REQUIRE(s3.entries.size() == 1);
    CHECK(s3.entries[0].frame_detected == s1.entries[0].frame_detected);
    CHECK(s3.entries[0].first_active == s1.entries[0].first_active);
    CHECK(s3.entries[0].last_active == s1.entries[0].last_active);
    CHECK(s3.entries[0].min_distance == doctest::Approx(s1.entries[0].min_distance));
    CHECK(s3.entries[0].contact.x == doctest::Approx(s1.entries[0].contact.x + dx));
    CHECK(s3.entries[0].contact.y == doctest::Approx(s1.entries[0].contact.y + dy));
}

TEST_CASE("tracks with fewer than two points in the window are ignored") {
    auto w = window_of({slice(1, {{0, {0, 0}}}, 10.0),
                        slice(2, {{0, {0, 1}}, {1, {2, 1}}, {2, {4, 1}}}, 10.0)},
                       0, 10);
    NearMissConfig cfg;
    CHECK(detect_collisions(w, cfg).entries.empty());
}

namespace {

// Two cars side by side for frames 0..6, after which the second swerves away.
// tau ~ 22.36, gap 4 while parallel. Active span comes out as 0..7 because
// the swerve segment still dips under tau.
struct ConvergeFixture {
    TrackArchive archive;
    TrajectoryWindow window;
    NearMissConfig cfg;

    ConvergeFixture() {
        std::vector<std::pair<int, Point2>> pa, pb;
        for (int f = 0; f <= 10; ++f) {
            pa.emplace_back(f, Point2{3.0 * f, 100.0});
            const double cy = f <= 6 ? 104.0 : 104.0 + 30.0 * (f - 6);
            pb.emplace_back(f, Point2{3.0 * f, cy});
        }
        archive.tracks.push_back(make_track(1, pa, 40, 20));
        archive.tracks.push_back(make_track(2, pb, 40, 20));
        auto windows = stack_windows(archive, 10);
        REQUIRE(windows.size() == 1);
        window = windows[0];
    }
};

} // namespace

TEST_CASE("event span modes: active run vs window end") {
    ConvergeFixture fx;
    CollisionState st = detect_collisions(fx.window, fx.cfg);
    REQUIRE(st.entries.size() == 1);
    CHECK(st.entries[0].first_active == 0);
    CHECK(st.entries[0].last_active == 7);

    auto events = temporal_events(st, fx.archive, fx.window, fx.cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].event.frame_start == 0);
    CHECK(events[0].event.frame_end == 7); // SpanMode::Active default
    CHECK(events[0].event.probability == 1.0);
    CHECK(events[0].event.track_a == 1);
    CHECK(events[0].event.track_b == 2);
    CHECK(events[0].min_distance == doctest::Approx(4.0));

    fx.cfg.span_mode = SpanMode::WindowEnd;
    events = temporal_events(st, fx.archive, fx.window, fx.cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].event.frame_end == 10);
}

TEST_CASE("event region modes: envelope vs contact") {
    ConvergeFixture fx;
    CollisionState st = detect_collisions(fx.window, fx.cfg);
    REQUIRE(st.entries.size() == 1);
    CHECK(st.entries[0].frame_detected == 0);

    // envelope: union of both tracks' boxes across frames 0..7
    auto events = temporal_events(st, fx.archive, fx.window, fx.cfg);
    REQUIRE(events.size() == 1);
    BBox r = events[0].event.region;
    CHECK(r.x == doctest::Approx(-20.0));
    CHECK(r.y == doctest::Approx(90.0));
    CHECK(r.w == doctest::Approx(61.0));
    CHECK(r.h == doctest::Approx(54.0));

    // contact: union of the two boxes at the detection frame only
    fx.cfg.region_mode = RegionMode::Contact;
    events = temporal_events(st, fx.archive, fx.window, fx.cfg);
    REQUIRE(events.size() == 1);
    r = events[0].event.region;
    CHECK(r.x == doctest::Approx(-20.0));
    CHECK(r.y == doctest::Approx(90.0));
    CHECK(r.w == doctest::Approx(40.0));
    CHECK(r.h == doctest::Approx(24.0));
}

TEST_CASE("a conflict without any boxes is dropped, missing tracks are an error") {
    ConvergeFixture fx;
    CollisionState st = detect_collisions(fx.window, fx.cfg);
    REQUIRE(st.entries.size() == 1);

    TrackArchive boxless = fx.archive;
    for (auto& t : boxless.tracks) t.boxes.clear();
    CHECK(temporal_events(st, boxless, fx.window, fx.cfg).empty());

    TrackArchive wrong;
    wrong.tracks.push_back(make_track(8, {{0, {0, 0}}, {1, {1, 0}}}, 10, 10));
    CHECK_THROWS_AS(temporal_events(st, wrong, fx.window, fx.cfg), ValidationError);
}

TEST_CASE("re-detections in consecutive windows merge into one event") {
    auto we = [](std::int64_t a, std::int64_t b, int widx, int fs, int fe, BBox r) {
        WindowEvent w;
        w.event = {fs, fe, r, 1.0, a, b};
        w.window_index = widx;
        return w;
    };
    std::vector<WindowEvent> events = {
        we(1, 2, 0, 5, 10, {0, 0, 10, 10}),
        we(1, 2, 1, 11, 20, {5, 5, 10, 10}),
        we(1, 2, 2, 21, 24, {0, 0, 4, 4}),
        we(1, 2, 4, 41, 45, {1, 1, 2, 2}), // window gap: stays separate
        we(3, 4, 1, 12, 15, {50, 50, 5, 5}),
    };
    auto merged = merge_window_events(events);
    REQUIRE(merged.size() == 3);
    // sorted by (frame_start, frame_end, ids)
    CHECK(merged[0].frame_start == 5);
    CHECK(merged[0].frame_end == 24);
    CHECK(merged[0].track_a == 1);
    CHECK(merged[0].region.x == doctest::Approx(0.0));
    CHECK(merged[0].region.w == doctest::Approx(15.0));
    CHECK(merged[0].region.h == doctest::Approx(15.0));
    CHECK(merged[1].frame_start == 12);
    CHECK(merged[1].track_a == 3);
    CHECK(merged[2].frame_start == 41);
    CHECK(merged[2].track_a == 1);
}

TEST_CASE("cross-window continuity catches a conflict on the boundary") {
    // The two tracks cross between frames 10 and 11, exactly astride the
    // window boundary for L = 10. Only the carried-over segment sees it.
    TrackArchive archive;
    std::vector<std::pair<int, Point2>> pa, pb;
    for (int f = 5; f <= 15; ++f) {
        pa.emplace_back(f, Point2{4.0 * f, 50.0});
        pb.emplace_back(f, Point2{42.0, 5.0 * f});
    }
    archive.tracks.push_back(make_track(1, pa, 6, 8));
    archive.tracks.push_back(make_track(2, pb, 6, 8));

    NearMissConfig cfg;
    cfg.tau_pixels_override = 0.5; // so only the true crossing can alarm

    // without continuity neither raw window contains the crossing segments
    auto raw = stack_windows(archive, cfg.window_frames);
    REQUIRE(raw.size() == 2);
    CHECK(detect_collisions(raw[0], cfg).entries.empty());
    CHECK(detect_collisions(raw[1], cfg).entries.empty());

    auto events = temporal_stream(archive, cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].frame_start == 10);
    CHECK(events[0].frame_end == 11);
    CHECK(events[0].track_a == 1);
    CHECK(events[0].track_b == 2);
    CHECK(events[0].probability == 1.0);
    CHECK(events[0].region.x == doctest::Approx(37.0));
    CHECK(events[0].region.y == doctest::Approx(46.0));
    CHECK(events[0].region.w == doctest::Approx(10.0));
    CHECK(events[0].region.h == doctest::Approx(13.0));
}

TEST_CASE("stream fusion averages matched pairs and passes the rest through") {
    NearMissConfig cfg; // Passthrough, fusion_match_iou = 0.3
    NearAccidentEvent e;
    e.frame_start = 10;
    e.frame_end = 20;
    e.region = {0, 0, 20, 20};
    e.probability = 1.0;
    e.track_a = 1;
    e.track_b = 2;

    std::vector<SpatialRegion> spatial = {
        {15, {5, 5, 20, 20}, 0.7},    // in span, IoU ~0.39: pairs
        {25, {0, 0, 20, 20}, 0.9},    // outside the span
        {15, {100, 100, 5, 5}, 0.4},  // in span but disjoint
    };
    auto fused = fuse(spatial, {e}, cfg);
    REQUIRE(fused.size() == 3);
    // paired event: averaged probability and union region
    CHECK(fused[0].frame_start == 10);
    CHECK(fused[0].probability == doctest::Approx(0.85));
    CHECK(fused[0].region.w == doctest::Approx(25.0));
    CHECK(fused[0].region.h == doctest::Approx(25.0));
    CHECK(fused[0].track_a == 1);
    // unmatched spatial regions become their own single-frame events
    CHECK(fused[1].frame_start == 15);
    CHECK(fused[1].frame_end == 15);
    CHECK(fused[1].probability == doctest::Approx(0.4));
    CHECK(fused[1].track_a == 0); // no tracks attached
    CHECK(fused[2].frame_start == 25);
    CHECK(fused[2].probability == doctest::Approx(0.9));
}

TEST_CASE("strict averaging halves everything unpaired") {
    NearMissConfig cfg;
    cfg.fusion_mode = FusionMode::StrictAverage;
    NearAccidentEvent e;
    e.frame_start = 10;
    e.frame_end = 20;
    e.region = {0, 0, 20, 20};
    e.probability = 1.0;
    e.track_a = 1;
    e.track_b = 2;
    std::vector<SpatialRegion> spatial = {{40, {0, 0, 10, 10}, 0.8}};
    auto fused = fuse(spatial, {e}, cfg);
    REQUIRE(fused.size() == 2);
    CHECK(fused[0].probability == doctest::Approx(0.5));
    CHECK(fused[1].probability == doctest::Approx(0.4));
}

TEST_CASE("two spatial regions on one event average together") {
    NearMissConfig cfg;
    NearAccidentEvent e;
    e.frame_start = 10;
    e.frame_end = 20;
    e.region = {0, 0, 20, 20};
    e.probability = 1.0;
    e.track_a = 1;
    e.track_b = 2;
    std::vector<SpatialRegion> spatial = {
        {12, {2, 2, 20, 20}, 0.5},
        {15, {5, 5, 20, 20}, 0.7},
    };
    auto fused = fuse(spatial, {e}, cfg);
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].probability == doctest::Approx(0.5 * (1.0 + 0.6)));
}

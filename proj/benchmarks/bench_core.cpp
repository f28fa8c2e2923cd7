// Microbenchmarks for the hot paths: assignment, filter steps, per-frame
// tracking, and the windowed conflict analysis. Run with --benchmark_filter
// to pick a subset.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "crosswatch/assoc.hpp"
#include "crosswatch/kalman.hpp"
#include "crosswatch/nearmiss.hpp"
#include "crosswatch/rng.hpp"
#include "crosswatch/tracker.hpp"

namespace cw = crosswatch;

namespace {

cw::assoc::CostMatrix random_matrix(int n, std::uint64_t seed) {
    cw::Rng rng(seed);
    cw::assoc::CostMatrix m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (rng.uniform() >= 0.2) m.set(r, c, rng.uniform(0.0, 10.0));
    return m;
}

void bm_hungarian(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = random_matrix(n, 12345u);
    for (auto _ : state) {
        auto a = cw::assoc::hungarian(m);
        benchmark::DoNotOptimize(a.total_cost);
    }
}

void bm_filter_step(benchmark::State& state) {
    const auto mode =
        state.range(0) == 0 ? cw::kalman::Mode::Sort : cw::kalman::Mode::DeepSort;
    cw::kalman::Filter flt(mode);
    const cw::geometry::BBox box{100, 100, 40, 20};
    auto st = flt.init_from_observation(flt.observation_from_box(box));
    const auto obs = flt.observation_from_box({101, 100.5, 40, 20});
    for (auto _ : state) {
        flt.predict(st);
        flt.update(st, obs);
        benchmark::DoNotOptimize(st.mean);
    }
}

std::vector<cw::Detection> lane_frame(int frame, int objects, cw::Rng& rng,
                                      const std::vector<Eigen::VectorXd>& sig) {
    std::vector<cw::Detection> dets;
    for (int i = 0; i < objects; ++i) {
        const double cx = 30.0 + (2.0 + 0.2 * (i / 2)) * frame;
        const double cy = 120.0 + 80.0 * (i / 2) + 20.0 * (i % 2);
        cw::Detection d;
        d.frame = frame;
        d.bbox = {cx - 20.0 + rng.normal(0.0, 0.3), cy - 10.0 + rng.normal(0.0, 0.3), 40.0, 20.0};
        d.confidence = 0.95;
        d.embedding = sig[i];
        dets.push_back(d);
    }
    return dets;
}

std::vector<Eigen::VectorXd> signatures(int objects, std::uint64_t seed) {
    cw::Rng rng(seed);
    std::vector<Eigen::VectorXd> sig;
    for (int i = 0; i < objects; ++i) {
        Eigen::VectorXd e(16);
        for (int k = 0; k < 16; ++k) e[k] = rng.normal();
        sig.push_back(e.normalized());
    }
    return sig;
}

void bm_tracker_step(benchmark::State& state) {
    const int objects = static_cast<int>(state.range(0));
    const auto sig = signatures(objects, 99u);
    cw::Rng rng(7u);
    cw::tracker::Tracker trk;
    int frame = 0;
    // warm the tracker so every step associates against settled tracks
    for (; frame < 20; ++frame) trk.step(frame, lane_frame(frame, objects, rng, sig));
    for (auto _ : state) {
        const auto r = trk.step(frame, lane_frame(frame, objects, rng, sig));
        benchmark::DoNotOptimize(r.active.size());
        ++frame;
    }
    state.SetItemsProcessed(state.iterations());
}

cw::TrackArchive lane_archive(int objects, int frames) {
    cw::TrackArchive arc;
    for (int i = 0; i < objects; ++i) {
        cw::ArchiveTrack t;
        t.id = i + 1;
        for (int f = 0; f < frames; ++f) {
            const double cx = 30.0 + (2.0 + 0.2 * (i / 2)) * f;
            const double cy = 120.0 + 80.0 * (i / 2) + 20.0 * (i % 2);
            t.points.push_back({f, {cx, cy}});
            t.boxes.push_back({f, {cx - 20, cy - 10, 40, 20}});
        }
        arc.tracks.push_back(std::move(t));
    }
    return arc;
}

void bm_temporal_stream(benchmark::State& state) {
    const auto arc = lane_archive(static_cast<int>(state.range(0)), 600);
    const cw::nearmiss::NearMissConfig cfg;
    for (auto _ : state) {
        auto events = cw::nearmiss::temporal_stream(arc, cfg);
        benchmark::DoNotOptimize(events.size());
    }
}

} // namespace

BENCHMARK(bm_hungarian)->Arg(5)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK(bm_filter_step)->Arg(0)->Arg(1);
BENCHMARK(bm_tracker_step)->Arg(10)->Arg(20);
BENCHMARK(bm_temporal_stream)->Arg(10)->Arg(20);

BENCHMARK_MAIN();

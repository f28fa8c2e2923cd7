#include "crosswatch/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "crosswatch/config.hpp"
#include "crosswatch/errors.hpp"
#include "crosswatch/rng.hpp"

namespace crosswatch::sim {

using geometry::BBox;
using geometry::Point2;

namespace {

double segment_length(const Point2& a, const Point2& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

// Frame offsets (relative to spawn) at which the vehicle reaches each
// waypoint; entry 0 is 0.
std::vector<double> waypoint_times(const VehicleSpec& v) {
    std::vector<double> t(v.path.size(), 0.0);
    for (size_t i = 0; i + 1 < v.path.size(); ++i)
        t[i + 1] = t[i] + segment_length(v.path[i].pos, v.path[i + 1].pos) / v.path[i].speed;
    return t;
}

std::optional<Point2> position_at(const VehicleSpec& v, double local_time) {
    if (local_time < 0.0) return std::nullopt;
    const auto times = waypoint_times(v);
    if (local_time > times.back()) return std::nullopt;
    size_t i = 0;
    while (i + 2 < times.size() && local_time >= times[i + 1]) ++i;
    const Point2& a = v.path[i].pos;
    const Point2& b = v.path[i + 1].pos;
    const double span = times[i + 1] - times[i];
    const double f = span > 0.0 ? (local_time - times[i]) / span : 0.0;
    return Point2{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

BBox box_around(const Point2& c, double w, double h) {
    return {c.x - w / 2.0, c.y - h / 2.0, w, h};
}

double pair_tau(const ScenarioSpec& spec, const VehicleSpec& a, const VehicleSpec& b) {
    if (spec.gt_tau_pixels > 0.0) return spec.gt_tau_pixels;
    const double da = std::hypot(a.width, a.height);
    const double db = std::hypot(b.width, b.height);
    return 0.5 * (da + db) / 2.0;
}

} // namespace

void NoiseModel::validate() const {
    if (position_jitter < 0.0 || size_jitter < 0.0 || embedding_noise < 0.0)
        throw ValidationError("noise std values must be non-negative");
    if (!(miss_rate >= 0.0 && miss_rate < 1.0))
        throw ValidationError("miss_rate must lie in [0, 1)");
    if (false_positive_rate < 0.0)
        throw ValidationError("false_positive_rate must be non-negative");
    if (embedding_dim < 1) throw ValidationError("embedding_dim must be at least 1");
}

void ScenarioSpec::validate() const {
    if (duration <= 0) throw ValidationError(name + ": duration must be positive");
    if (arena_width <= 0.0 || arena_height <= 0.0)
        throw ValidationError(name + ": arena must have positive size");
    if (vehicles.empty()) throw ValidationError(name + ": no vehicles");
    for (size_t i = 0; i < vehicles.size(); ++i) {
        const VehicleSpec& v = vehicles[i];
        const std::string who = name + ": vehicle " + std::to_string(i);
        if (v.object_class == ObjectClass::NearAccident)
            throw ValidationError(who + ": near_accident is a label, not a vehicle class");
        if (v.width <= 0.0 || v.height <= 0.0)
            throw ValidationError(who + ": non-positive size");
        if (v.spawn_frame < 0) throw ValidationError(who + ": negative spawn frame");
        if (v.path.size() < 2) throw ValidationError(who + ": path needs at least 2 waypoints");
        for (size_t k = 0; k < v.path.size(); ++k) {
            const Point2& p = v.path[k].pos;
            if (p.x < 0.0 || p.x > arena_width || p.y < 0.0 || p.y > arena_height)
                throw ValidationError(who + ": waypoint outside the arena");
            if (k + 1 < v.path.size()) {
                if (v.path[k].speed <= 0.0)
                    throw ValidationError(who + ": segment speed must be positive");
                if (segment_length(p, v.path[k + 1].pos) == 0.0)
                    throw ValidationError(who + ": zero-length path segment");
            }
        }
    }
    for (const ScriptedConflict& c : conflicts) {
        const int n = static_cast<int>(vehicles.size());
        if (c.vehicle_a < 0 || c.vehicle_a >= n || c.vehicle_b < 0 || c.vehicle_b >= n ||
            c.vehicle_a == c.vehicle_b)
            throw ValidationError(name + ": conflict references invalid vehicle pair");
        if (c.target_frame < 0 || c.target_frame >= duration)
            throw ValidationError(name + ": conflict target frame outside the scenario");
        if (c.target_distance < 0.0)
            throw ValidationError(name + ": conflict target distance must be non-negative");
    }
}

std::optional<BBox> true_box(const VehicleSpec& v, int frame) {
    const auto pos = position_at(v, static_cast<double>(frame - v.spawn_frame));
    if (!pos) return std::nullopt;
    return box_around(*pos, v.width, v.height);
}

SimulationResult generate(const ScenarioSpec& spec, const NoiseModel& noise) {
    spec.validate();
    noise.validate();

    const size_t n = spec.vehicles.size();

    // True geometry first; ground truth never touches the noise stream.
    std::vector<std::vector<std::optional<BBox>>> boxes(n);
    for (size_t v = 0; v < n; ++v) {
        boxes[v].resize(static_cast<size_t>(spec.duration));
        for (int f = 0; f < spec.duration; ++f)
            boxes[v][static_cast<size_t>(f)] = true_box(spec.vehicles[v], f);
    }

    SimulationResult result;

    for (size_t v = 0; v < n; ++v) {
        ArchiveTrack t;
        t.id = static_cast<std::int64_t>(v) + 1;
        t.object_class = spec.vehicles[v].object_class;
        t.final_status = TrackStatus::Confirmed;
        for (int f = 0; f < spec.duration; ++f) {
            const auto& b = boxes[v][static_cast<size_t>(f)];
            if (!b) continue;
            t.points.emplace_back(f, b->center());
            t.boxes.emplace_back(f, *b);
        }
        result.truth.tracks.push_back(std::move(t));
    }

    // Ground-truth events: one per contiguous run of frames where a pair's
    // center distance stays below its threshold.
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double tau = pair_tau(spec, spec.vehicles[i], spec.vehicles[j]);
            int run_start = -1;
            BBox region;
            const auto flush = [&](int run_end) {
                if (run_start < 0) return;
                nearmiss::NearAccidentEvent e;
                e.frame_start = run_start;
                e.frame_end = run_end;
                e.region = region;
                e.probability = 1.0;
                e.track_a = static_cast<std::int64_t>(i) + 1;
                e.track_b = static_cast<std::int64_t>(j) + 1;
                result.truth_events.push_back(e);
                run_start = -1;
            };
            for (int f = 0; f < spec.duration; ++f) {
                const auto& ba = boxes[i][static_cast<size_t>(f)];
                const auto& bb = boxes[j][static_cast<size_t>(f)];
                const bool hot =
                    ba && bb &&
                    std::hypot(ba->center().x - bb->center().x,
                               ba->center().y - bb->center().y) < tau;
                if (hot) {
                    const BBox both = geometry::union_box(*ba, *bb);
                    region = run_start < 0 ? both : geometry::union_box(region, both);
                    if (run_start < 0) run_start = f;
                } else {
                    flush(f - 1);
                }
            }
            flush(spec.duration - 1);
        }
    }
    std::sort(result.truth_events.begin(), result.truth_events.end(),
              [](const nearmiss::NearAccidentEvent& a, const nearmiss::NearAccidentEvent& b) {
                  return std::tie(a.frame_start, a.frame_end, a.track_a, a.track_b) <
                         std::tie(b.frame_start, b.frame_end, b.track_a, b.track_b);
              });

    // Scripted conflicts are promises; verify each against the realized
    // geometry so a botched path edit fails here, not in some downstream test.
    for (const ScriptedConflict& c : spec.conflicts) {
        const int lo = std::max(0, c.target_frame - 25);
        const int hi = std::min(spec.duration - 1, c.target_frame + 25);
        double best = std::numeric_limits<double>::infinity();
        for (int f = lo; f <= hi; ++f) {
            const auto& ba = boxes[static_cast<size_t>(c.vehicle_a)][static_cast<size_t>(f)];
            const auto& bb = boxes[static_cast<size_t>(c.vehicle_b)][static_cast<size_t>(f)];
            if (!ba || !bb) continue;
            best = std::min(best, std::hypot(ba->center().x - bb->center().x,
                                             ba->center().y - bb->center().y));
        }
        if (!(best <= c.target_distance)) {
            std::ostringstream ss;
            ss << spec.name << ": scripted conflict between vehicles " << c.vehicle_a << " and "
               << c.vehicle_b << " unreachable: closest approach near frame " << c.target_frame
               << " is " << best << ", promised " << c.target_distance;
            throw ValidationError(ss.str());
        }
    }

    // Per-vehicle appearance signatures, then the noisy detection stream.
    Rng emb_rng(mix_seed(spec.seed, 0xe3bedul));
    std::vector<Eigen::VectorXd> signature(n);
    for (size_t v = 0; v < n; ++v) {
        Eigen::VectorXd e(noise.embedding_dim);
        for (int k = 0; k < noise.embedding_dim; ++k) e[k] = emb_rng.normal();
        if (e.norm() == 0.0) e[0] = 1.0;
        signature[v] = e / e.norm();
    }

    Rng rng(mix_seed(spec.seed, 0xde7ec7ul));
    static constexpr ObjectClass kVehicleClasses[] = {ObjectClass::Motorcycle, ObjectClass::Car,
                                                      ObjectClass::Bus, ObjectClass::Truck};
    for (int f = 0; f < spec.duration; ++f) {
        for (size_t v = 0; v < n; ++v) {
            const auto& b = boxes[v][static_cast<size_t>(f)];
            if (!b) continue;
            // Draw everything before deciding to drop, so the consumed
            // stream does not depend on earlier draws.
            const double miss_draw = rng.uniform();
            const double jx = rng.normal() * noise.position_jitter;
            const double jy = rng.normal() * noise.position_jitter;
            const double jw = rng.normal() * noise.size_jitter;
            const double jh = rng.normal() * noise.size_jitter;
            const double conf = 0.88 + 0.1 * rng.uniform();
            Eigen::VectorXd emb(noise.embedding_dim);
            for (int k = 0; k < noise.embedding_dim; ++k)
                emb[k] = signature[v][k] + noise.embedding_noise * rng.normal();
            if (miss_draw < noise.miss_rate) continue;
            if (emb.norm() == 0.0) emb[0] = 1.0;
            emb /= emb.norm();

            Detection d;
            d.frame = f;
            d.object_class = spec.vehicles[v].object_class;
            const Point2 c = b->center();
            const double w = std::max(2.0, b->w + jw);
            const double h = std::max(2.0, b->h + jh);
            d.bbox = box_around({c.x + jx, c.y + jy}, w, h);
            d.confidence = conf;
            d.embedding = std::move(emb);
            result.detections[f].push_back(std::move(d));
        }
        const int spurious = rng.poisson(noise.false_positive_rate);
        for (int s = 0; s < spurious; ++s) {
            Detection d;
            d.frame = f;
            d.object_class = kVehicleClasses[rng.uniform_int(0, 3)];
            const double w = rng.uniform(12.0, 60.0);
            const double h = rng.uniform(8.0, 40.0);
            const Point2 c{rng.uniform(0.0, spec.arena_width),
                           rng.uniform(0.0, spec.arena_height)};
            d.bbox = box_around(c, w, h);
            d.confidence = 0.4 + 0.5 * rng.uniform();
            Eigen::VectorXd emb(noise.embedding_dim);
            for (int k = 0; k < noise.embedding_dim; ++k) emb[k] = rng.normal();
            if (emb.norm() == 0.0) emb[0] = 1.0;
            emb /= emb.norm();
            d.embedding = std::move(emb);
            result.detections[f].push_back(std::move(d));
        }
    }

    return result;
}

// ---------------------------------------------------------------------------
// The fixed suite.

namespace {

VehicleSpec vehicle(ObjectClass cls, double w, double h, int spawn,
                    std::vector<Waypoint> path) {
    VehicleSpec v;
    v.object_class = cls;
    v.width = w;
    v.height = h;
    v.spawn_frame = spawn;
    v.path = std::move(path);
    return v;
}

std::vector<Waypoint> line(Point2 a, Point2 b, double speed) {
    return {{a, speed}, {b, 0.0}};
}

// Left-turn quarter arc from heading east to heading north, traced as
// center + R(sin t, cos t) for t in [0, 90] degrees; small angular steps keep
// the heading change per waypoint gentle.
std::vector<Waypoint> left_turn_arc(Point2 center, double radius, int steps, double speed) {
    std::vector<Waypoint> pts;
    for (int k = 0; k <= steps; ++k) {
        const double t = (M_PI / 2.0) * k / steps;
        pts.push_back({{center.x + radius * std::sin(t), center.y + radius * std::cos(t)}, speed});
    }
    return pts;
}

std::vector<Waypoint> concat(std::vector<Waypoint> a, const std::vector<Waypoint>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

ScenarioSpec scenario(std::string name, int duration, std::uint64_t seed) {
    ScenarioSpec s;
    s.name = std::move(name);
    s.duration = duration;
    s.seed = seed;
    return s;
}

// Two straight paths meeting at right angles, timed to a near collision.
ScenarioSpec crossing(std::string name, int duration, std::uint64_t seed,
                      VehicleSpec east, VehicleSpec south,
                      int conflict_frame, double conflict_distance) {
    ScenarioSpec s = scenario(std::move(name), duration, seed);
    s.vehicles = {std::move(east), std::move(south)};
    s.conflicts = {{0, 1, conflict_frame, conflict_distance}};
    return s;
}

} // namespace

std::vector<ScenarioSpec> standard_suite() {
    std::vector<ScenarioSpec> suite;

    // -- positives: perpendicular crossings --------------------------------
    suite.push_back(crossing(
        "crossing-cars-tight", 300, 101,
        vehicle(ObjectClass::Car, 40, 20, 0, line({40, 360}, {1240, 360}, 4)),
        vehicle(ObjectClass::Car, 42, 21, 71, line({640, 40}, {640, 680}, 4)), 150, 5));
    suite.push_back(crossing(
        "crossing-car-truck", 300, 102,
        vehicle(ObjectClass::Car, 40, 20, 0, line({40, 360}, {1240, 360}, 4)),
        vehicle(ObjectClass::Truck, 58, 25, 72, line({640, 40}, {640, 680}, 4)), 151, 6));
    suite.push_back(crossing(
        "crossing-bus-car", 320, 103,
        vehicle(ObjectClass::Bus, 70, 30, 0, line({40, 300}, {1240, 300}, 3)),
        vehicle(ObjectClass::Car, 40, 20, 149, line({640, 40}, {640, 600}, 5)), 200, 6));
    suite.push_back(crossing(
        "crossing-truck-car", 330, 104,
        vehicle(ObjectClass::Truck, 60, 26, 0, line({40, 420}, {1240, 420}, 3)),
        vehicle(ObjectClass::Car, 40, 20, 116, line({640, 80}, {640, 640}, 4)), 200, 6));
    suite.push_back(crossing(
        "crossing-moto-car", 300, 105,
        vehicle(ObjectClass::Motorcycle, 18, 10, 20, line({40, 360}, {1240, 360}, 3)),
        vehicle(ObjectClass::Car, 40, 20, 114, line({640, 40}, {640, 620}, 3)), 220, 4));
    suite.push_back(crossing(
        "crossing-bus-truck", 360, 106,
        vehicle(ObjectClass::Bus, 70, 30, 0, line({40, 480}, {1240, 480}, 3)),
        vehicle(ObjectClass::Truck, 60, 26, 114, line({800, 60}, {800, 640}, 3)), 253, 5));

    // -- positives: left turn across oncoming path -------------------------
    {
        ScenarioSpec s = scenario("leftturn-car-car", 320, 107);
        s.vehicles.push_back(vehicle(
            ObjectClass::Car, 40, 20, 0,
            concat({{{100, 360}, 4}, {{585, 360}, 3.5}, {{595.5, 360}, 3}},
                   concat(left_turn_arc({600, 300}, 60, 15, 3), {{{660, 60}, 0}}))));
        s.vehicles.push_back(
            vehicle(ObjectClass::Car, 42, 21, 28, line({1180, 300}, {40, 300}, 4)));
        s.conflicts = {{0, 1, 158, 9}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("leftturn-car-truck", 360, 108);
        s.vehicles.push_back(vehicle(
            ObjectClass::Car, 40, 20, 0,
            concat({{{80, 300}, 4}, {{545, 300}, 3.5}, {{555.5, 300}, 3}},
                   concat(left_turn_arc({560, 240}, 60, 15, 3), {{{620, 40}, 0}}))));
        s.vehicles.push_back(
            vehicle(ObjectClass::Truck, 60, 26, 73, line({860, 240}, {40, 240}, 3)));
        s.conflicts = {{0, 1, 153, 9}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("leftturn-bus-car", 420, 109);
        s.vehicles.push_back(vehicle(
            ObjectClass::Bus, 70, 30, 0,
            concat({{{100, 420}, 3}}, concat(left_turn_arc({700, 340}, 80, 15, 3),
                                             {{{780, 60}, 0}}))));
        s.vehicles.push_back(
            vehicle(ObjectClass::Car, 40, 20, 128, line({1240, 340}, {40, 340}, 4)));
        s.conflicts = {{0, 1, 243, 10}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("leftturn-moto-car", 240, 110);
        s.vehicles.push_back(vehicle(
            ObjectClass::Motorcycle, 18, 10, 0,
            concat({{{200, 380}, 4}, {{613, 380}, 3.5}, {{623.5, 380}, 3}, {{632.5, 380}, 2.5}},
                   concat(left_turn_arc({640, 330}, 50, 15, 2), {{{690, 80}, 0}}))));
        s.vehicles.push_back(
            vehicle(ObjectClass::Car, 44, 22, 25, line({1200, 330}, {40, 330}, 4)));
        s.conflicts = {{0, 1, 152, 6}};
        suite.push_back(std::move(s));
    }

    // -- positives: rear approach in lane ----------------------------------
    // The follower closes in through a gentle speed ramp, holds a short gap,
    // then falls back; abrupt speed steps would be unfair to any velocity
    // model, so ramps keep per-waypoint changes small.
    {
        ScenarioSpec s = scenario("rear-cars", 245, 111);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({200, 360}, {1240, 360}, 2)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 44, 22, 0,
                                     {{{40, 360}, 6},
                                      {{223, 360}, 5},
                                      {{238, 360}, 4},
                                      {{250, 360}, 3},
                                      {{259, 360}, 2},
                                      {{349, 360}, 1.2},
                                      {{361, 360}, 0.6},
                                      {{367, 360}, 1.2},
                                      {{379, 360}, 2},
                                      {{1180, 360}, 0}}));
        s.conflicts = {{0, 1, 45, 21}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("rear-truck-car", 250, 112);
        s.vehicles.push_back(
            vehicle(ObjectClass::Truck, 60, 26, 0, line({300, 420}, {1240, 420}, 1.5)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0,
                                     {{{60, 420}, 5},
                                      {{349.3, 420}, 4},
                                      {{361.3, 420}, 3},
                                      {{370.3, 420}, 2},
                                      {{376.3, 420}, 1.5},
                                      {{466.3, 420}, 0.8},
                                      {{490.3, 420}, 1.5},
                                      {{1160, 420}, 0}}));
        s.conflicts = {{0, 1, 80, 25}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("rear-moto-car", 260, 113);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({260, 300}, {1240, 300}, 2)));
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0,
                                     {{{40, 300}, 6},
                                      {{286, 300}, 5.5},
                                      {{302.5, 300}, 5},
                                      {{317.5, 300}, 4.5},
                                      {{331, 300}, 4},
                                      {{343, 300}, 3.5},
                                      {{353.5, 300}, 3},
                                      {{362.5, 300}, 2.5},
                                      {{370, 300}, 2},
                                      {{470, 300}, 1.6},
                                      {{478, 300}, 1.2},
                                      {{496, 300}, 1.6},
                                      {{504, 300}, 2},
                                      {{1180, 300}, 0}}));
        s.conflicts = {{0, 1, 85, 15}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("rear-bus-car", 240, 114);
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 0, line({240, 480}, {1240, 480}, 2)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 42, 21, 0,
                                     {{{30, 480}, 5.5},
                                      {{296.36, 480}, 4.5},
                                      {{309.86, 480}, 3.5},
                                      {{320.36, 480}, 2.5},
                                      {{327.86, 480}, 2},
                                      {{437.86, 480}, 1.2},
                                      {{465.86, 480}, 1.6},
                                      {{473.86, 480}, 2},
                                      {{1180, 480}, 0}}));
        s.conflicts = {{0, 1, 62, 28}};
        suite.push_back(std::move(s));
    }

    // -- positives: motorcycle squeezing past ------------------------------
    {
        ScenarioSpec s = scenario("weave-moto-car", 240, 115);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({260, 360}, {1240, 360}, 2)));
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0,
                                     {{{40, 384}, 6},
                                      {{190, 372}, 6},
                                      {{760, 372}, 6},
                                      {{910, 384}, 6},
                                      {{1230, 384}, 0}}));
        s.conflicts = {{0, 1, 55, 13}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("weave-moto-bus", 300, 116);
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 0, line({100, 300}, {1240, 300}, 2.5)));
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0,
                                     {{{20, 330}, 5},
                                      {{170, 318}, 5},
                                      {{700, 318}, 5},
                                      {{850, 330}, 5},
                                      {{1200, 330}, 0}}));
        s.conflicts = {{0, 1, 32, 19}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("weave-moto-car-close", 260, 117);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 44, 22, 0, line({260, 560}, {1240, 560}, 2)));
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0,
                                     {{{60, 585}, 6},
                                      {{210, 574}, 6},
                                      {{820, 574}, 6},
                                      {{970, 585}, 6},
                                      {{1230, 585}, 0}}));
        s.conflicts = {{0, 1, 50, 15}};
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("weave-two-motos", 240, 118);
        s.vehicles.push_back(
            vehicle(ObjectClass::Motorcycle, 18, 10, 0, line({182, 400}, {1200, 400}, 0.5)));
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0,
                                     {{{20, 414}, 3},
                                      {{120, 404}, 3},
                                      {{1200, 404}, 0}}));
        s.conflicts = {{0, 1, 65, 7}};
        suite.push_back(std::move(s));
    }

    // -- negatives: free-flowing traffic -----------------------------------
    {
        ScenarioSpec s = scenario("freeflow-two-lanes", 300, 119);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({40, 300}, {1240, 300}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 42, 21, 0, line({1240, 420}, {40, 420}, 4)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-convoy", 360, 120);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({40, 280}, {1240, 280}, 3)));
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 0, line({400, 280}, {1240, 280}, 3)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 44, 22, 10, line({1200, 440}, {40, 440}, 5)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-follow", 245, 121);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({100, 360}, {1240, 360}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({260, 360}, {1240, 360}, 4)));
        s.vehicles.push_back(
            vehicle(ObjectClass::Motorcycle, 18, 10, 5, line({50, 500}, {1230, 500}, 6)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-opposing", 420, 122);
        s.vehicles.push_back(
            vehicle(ObjectClass::Motorcycle, 18, 10, 0, line({40, 340}, {1230, 340}, 5)));
        s.vehicles.push_back(vehicle(ObjectClass::Truck, 60, 26, 0, line({1230, 460}, {50, 460}, 3)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-four-lanes", 500, 123);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({40, 240}, {1240, 240}, 3)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 42, 21, 8, line({60, 360}, {1240, 360}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 16, line({100, 480}, {1240, 480}, 3.5)));
        s.vehicles.push_back(
            vehicle(ObjectClass::Motorcycle, 18, 10, 20, line({80, 600}, {1220, 600}, 5)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-slow", 587, 124);
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 0, line({200, 400}, {1240, 400}, 1.5)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({1240, 250}, {60, 250}, 2)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("freeflow-long", 800, 125);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({60, 300}, {1240, 300}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 42, 21, 0, line({360, 300}, {1240, 300}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 44, 22, 12, line({1200, 550}, {40, 550}, 4.5)));
        s.vehicles.push_back(
            vehicle(ObjectClass::Motorcycle, 18, 10, 30, line({100, 650}, {1220, 650}, 5.5)));
        suite.push_back(std::move(s));
    }

    // -- negatives: crossing paths but cleanly separated in time -----------
    {
        ScenarioSpec s = scenario("yield-late-arrival", 300, 126);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({40, 360}, {1240, 360}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 42, 21, 200, line({640, 40}, {640, 680}, 4)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("yield-stop-and-go", 300, 127);
        s.vehicles.push_back(vehicle(ObjectClass::Bus, 70, 30, 0, line({100, 360}, {1240, 360}, 3)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0,
                                     {{{700, 60}, 4},
                                      {{700, 255}, 3},
                                      {{700, 270}, 2},
                                      {{700, 280}, 1.2},
                                      {{700, 285}, 0.6},
                                      {{700, 289}, 0.25},
                                      {{700, 295}, 1},
                                      {{700, 300}, 2},
                                      {{700, 308}, 3},
                                      {{700, 320}, 4},
                                      {{700, 680}, 0}}));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("yield-truck-wait", 320, 128);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({1240, 300}, {40, 300}, 4)));
        s.vehicles.push_back(vehicle(ObjectClass::Truck, 60, 26, 0,
                                     {{{500, 80}, 3},
                                      {{500, 200}, 2},
                                      {{500, 212}, 1.2},
                                      {{500, 222}, 0.6},
                                      {{500, 228}, 0.2},
                                      {{500, 234}, 0.8},
                                      {{500, 240}, 1.6},
                                      {{500, 248}, 2.4},
                                      {{500, 258}, 3},
                                      {{500, 640}, 0}}));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("yield-wide-gap", 245, 129);
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 0, line({60, 420}, {1240, 420}, 5)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 44, 22, 120, line({900, 100}, {900, 660}, 4)));
        suite.push_back(std::move(s));
    }
    {
        ScenarioSpec s = scenario("yield-moto-first", 240, 130);
        s.vehicles.push_back(vehicle(ObjectClass::Motorcycle, 18, 10, 0, line({40, 500}, {1230, 500}, 6)));
        s.vehicles.push_back(vehicle(ObjectClass::Car, 40, 20, 60, line({800, 200}, {800, 680}, 3)));
        suite.push_back(std::move(s));
    }

    for (const ScenarioSpec& s : suite) s.validate();
    return suite;
}

// ---------------------------------------------------------------------------
// Scenario files.

namespace {

[[noreturn]] void sfail(const std::string& origin, size_t line, const std::string& why) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": " + why);
}

std::vector<double> split_numbers(const config::IniEntry& e, const std::string& origin) {
    std::vector<double> out;
    std::istringstream ss(e.value);
    std::string tok;
    while (ss >> tok) {
        double v = 0.0;
        const char* b = tok.data();
        auto [p, ec] = std::from_chars(b, b + tok.size(), v);
        if (ec != std::errc() || p != b + tok.size())
            sfail(origin, e.line, "value of " + e.key + " must be numbers separated by spaces");
        out.push_back(v);
    }
    return out;
}

} // namespace

ScenarioSpec parse_scenario(const std::string& text, const std::string& origin) {
    ScenarioSpec spec;
    int current_index = -1;
    std::string current_section;

    for (const config::IniEntry& e : config::parse_ini(text, origin)) {
        if (e.section_index != current_index) {
            current_index = e.section_index;
            current_section = e.section;
            if (e.section == "vehicle") spec.vehicles.emplace_back();
            else if (e.section == "conflict") spec.conflicts.emplace_back();
            else if (e.section != "scenario")
                sfail(origin, e.line, "unknown section [" + e.section + "]");
        }

        if (current_section == "scenario") {
            const auto nums = [&] { return split_numbers(e, origin); };
            if (e.key == "name") spec.name = e.value;
            else if (e.key == "arena_width") spec.arena_width = nums().at(0);
            else if (e.key == "arena_height") spec.arena_height = nums().at(0);
            else if (e.key == "duration") spec.duration = static_cast<int>(nums().at(0));
            else if (e.key == "seed") spec.seed = static_cast<std::uint64_t>(nums().at(0));
            else if (e.key == "gt_tau_pixels") spec.gt_tau_pixels = nums().at(0);
            else sfail(origin, e.line, "unknown key " + e.key + " in [scenario]");
        } else if (current_section == "vehicle") {
            VehicleSpec& v = spec.vehicles.back();
            if (e.key == "class") {
                const auto cls = object_class_from_string(e.value);
                if (!cls) sfail(origin, e.line, "unknown class \"" + e.value + "\"");
                v.object_class = *cls;
            } else if (e.key == "width") v.width = split_numbers(e, origin).at(0);
            else if (e.key == "height") v.height = split_numbers(e, origin).at(0);
            else if (e.key == "spawn") v.spawn_frame = static_cast<int>(split_numbers(e, origin).at(0));
            else if (e.key == "waypoint") {
                const auto nums = split_numbers(e, origin);
                if (nums.size() != 2 && nums.size() != 3)
                    sfail(origin, e.line, "waypoint needs x y [speed]");
                v.path.push_back({{nums[0], nums[1]}, nums.size() == 3 ? nums[2] : 0.0});
            } else sfail(origin, e.line, "unknown key " + e.key + " in [vehicle]");
        } else { // conflict
            ScriptedConflict& c = spec.conflicts.back();
            const auto nums = split_numbers(e, origin);
            if (e.key == "vehicles") {
                if (nums.size() != 2) sfail(origin, e.line, "vehicles needs two indices");
                c.vehicle_a = static_cast<int>(nums[0]);
                c.vehicle_b = static_cast<int>(nums[1]);
            } else if (e.key == "frame") c.target_frame = static_cast<int>(nums.at(0));
            else if (e.key == "min_distance") c.target_distance = nums.at(0);
            else sfail(origin, e.line, "unknown key " + e.key + " in [conflict]");
        }
    }

    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
    return parse_scenario(io::read_file(path), path);
}

std::string print_scenario(const ScenarioSpec& spec) {
    std::string out;
    const auto kv = [&out](const char* k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    out += "[scenario]\n";
    kv("name", spec.name);
    kv("arena_width", config::format_double(spec.arena_width));
    kv("arena_height", config::format_double(spec.arena_height));
    kv("duration", std::to_string(spec.duration));
    kv("seed", std::to_string(spec.seed));
    kv("gt_tau_pixels", config::format_double(spec.gt_tau_pixels));
    for (const VehicleSpec& v : spec.vehicles) {
        out += "\n[vehicle]\n";
        kv("class", to_string(v.object_class));
        kv("width", config::format_double(v.width));
        kv("height", config::format_double(v.height));
        kv("spawn", std::to_string(v.spawn_frame));
        for (size_t k = 0; k < v.path.size(); ++k) {
            std::string w = config::format_double(v.path[k].pos.x) + " " +
                            config::format_double(v.path[k].pos.y);
            if (k + 1 < v.path.size()) w += " " + config::format_double(v.path[k].speed);
            kv("waypoint", w);
        }
    }
    for (const ScriptedConflict& c : spec.conflicts) {
        out += "\n[conflict]\n";
        kv("vehicles", std::to_string(c.vehicle_a) + " " + std::to_string(c.vehicle_b));
        kv("frame", std::to_string(c.target_frame));
        kv("min_distance", config::format_double(c.target_distance));
    }
    return out;
}

} // namespace crosswatch::sim

#include "crosswatch/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace crosswatch::geometry {

double BBox::diagonal() const { return std::sqrt(w * w + h * h); }

bool BBox::valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w > 0.0 && h > 0.0;
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(a.x, b.x);
    const double iy = std::max(a.y, b.y);
    const double ix2 = std::min(a.x + a.w, b.x + b.w);
    const double iy2 = std::min(a.y + a.h, b.y + b.h);
    const double iw = ix2 - ix;
    const double ih = iy2 - iy;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

BBox union_box(const BBox& a, const BBox& b) {
    const double x1 = std::min(a.x, b.x);
    const double y1 = std::min(a.y, b.y);
    const double x2 = std::max(a.x + a.w, b.x + b.w);
    const double y2 = std::max(a.y + a.h, b.y + b.h);
    return {x1, y1, x2 - x1, y2 - y1};
}

Eigen::Vector4d to_sort_obs(const BBox& b) {
    const Point2 c = b.center();
    return {c.x, c.y, b.w * b.h, b.w / b.h};
}

BBox from_sort_obs(const Eigen::Vector4d& z) {
    const double w = std::sqrt(z[2] * z[3]);
    const double h = z[2] / w;
    return {z[0] - 0.5 * w, z[1] - 0.5 * h, w, h};
}

Eigen::Vector4d to_deepsort_obs(const BBox& b) {
    const Point2 c = b.center();
    return {c.x, c.y, b.w / b.h, b.h};
}

BBox from_deepsort_obs(const Eigen::Vector4d& z) {
    const double h = z[3];
    const double w = z[2] * h;
    return {z[0] - 0.5 * w, z[1] - 0.5 * h, w, h};
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Segment& s) {
    return cross(s.a, s.b, p) == 0.0 &&
           p.x >= std::min(s.a.x, s.b.x) && p.x <= std::max(s.a.x, s.b.x) &&
           p.y >= std::min(s.a.y, s.b.y) && p.y <= std::max(s.a.y, s.b.y);
}

double dist(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

bool is_point(const Segment& s) { return s.a.x == s.b.x && s.a.y == s.b.y; }

// order the endpoints of a collinear segment along the dominant axis
struct Interval1 {
    double lo, hi;
    Point2 plo, phi;
};

Interval1 project_collinear(const Segment& s, bool use_x) {
    const double va = use_x ? s.a.x : s.a.y;
    const double vb = use_x ? s.b.x : s.b.y;
    if (va <= vb) return {va, vb, s.a, s.b};
    return {vb, va, s.b, s.a};
}

} // namespace

std::optional<Point2> segment_intersection(const Segment& p, const Segment& q) {
    if (is_point(p) && is_point(q)) {
        if (p.a.x == q.a.x && p.a.y == q.a.y) return p.a;
        return std::nullopt;
    }
    if (is_point(p)) {
        if (on_segment(p.a, q)) return p.a;
        return std::nullopt;
    }
    if (is_point(q)) {
        if (on_segment(q.a, p)) return q.a;
        return std::nullopt;
    }

    const double d1 = cross(q.a, q.b, p.a);
    const double d2 = cross(q.a, q.b, p.b);
    const double d3 = cross(p.a, p.b, q.a);
    const double d4 = cross(p.a, p.b, q.b);

    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        // proper crossing: solve for the intersection point
        const double t = d1 / (d1 - d2);
        return Point2{p.a.x + t * (p.b.x - p.a.x), p.a.y + t * (p.b.y - p.a.y)};
    }

    if (d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0) {
        // collinear: overlap midpoint keeps the answer symmetric
        const bool use_x = std::abs(p.b.x - p.a.x) >= std::abs(p.b.y - p.a.y);
        const Interval1 ip = project_collinear(p, use_x);
        const Interval1 iq = project_collinear(q, use_x);
        const double lo = std::max(ip.lo, iq.lo);
        const double hi = std::min(ip.hi, iq.hi);
        if (lo > hi) return std::nullopt;
        const Point2 plo = ip.lo >= iq.lo ? ip.plo : iq.plo;
        const Point2 phi = ip.hi <= iq.hi ? ip.phi : iq.phi;
        return Point2{0.5 * (plo.x + phi.x), 0.5 * (plo.y + phi.y)};
    }

    // endpoint touches
    if (d1 == 0.0 && on_segment(p.a, q)) return p.a;
    if (d2 == 0.0 && on_segment(p.b, q)) return p.b;
    if (d3 == 0.0 && on_segment(q.a, p)) return q.a;
    if (d4 == 0.0 && on_segment(q.b, p)) return q.b;

    return std::nullopt;
}

Point2 closest_point_on_segment(const Point2& p, const Segment& s) {
    const double dx = s.b.x - s.a.x;
    const double dy = s.b.y - s.a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return s.a;
    double t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return {s.a.x + t * dx, s.a.y + t * dy};
}

double point_segment_distance(const Point2& p, const Segment& s) {
    return dist(p, closest_point_on_segment(p, s));
}

double min_segment_distance(const Segment& p, const Segment& q) {
    // intersection implies distance 0 by definition; checking it first keeps
    // the two predicates exactly consistent instead of agreeing only up to
    // floating point noise
    if (segment_intersection(p, q)) return 0.0;
    double best = point_segment_distance(p.a, q);
    best = std::min(best, point_segment_distance(p.b, q));
    best = std::min(best, point_segment_distance(q.a, p));
    best = std::min(best, point_segment_distance(q.b, p));
    return best;
}

} // namespace crosswatch::geometry

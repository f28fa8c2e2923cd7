#pragma once

#include <Eigen/Dense>
#include <optional>

namespace crosswatch::geometry {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned box, (x, y) is the top-left corner. Width and height must be
// positive for a box to be valid; loaders and the simulator enforce that.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
    double area() const { return w * h; }
    double diagonal() const;
    bool valid() const;
};

// Intersection-over-union of two boxes, in [0, 1]. Disjoint or merely
// touching boxes score 0.
double iou(const BBox& a, const BBox& b);

BBox union_box(const BBox& a, const BBox& b);

// Observation vector conversions for the two filter parameterizations.
// Area/aspect form: (cx, cy, s, r) with s = w*h and r = w/h.
// Height form: (cx, cy, g, h) with g = w/h.
Eigen::Vector4d to_sort_obs(const BBox& b);
BBox from_sort_obs(const Eigen::Vector4d& z);
Eigen::Vector4d to_deepsort_obs(const BBox& b);
BBox from_deepsort_obs(const Eigen::Vector4d& z);

struct Segment {
    Point2 a;
    Point2 b;
};

// Closed-segment intersection test. A proper crossing or an endpoint touch
// yields the contact point; collinear overlapping segments yield the midpoint
// of the shared portion, which keeps the result symmetric in the arguments.
// Degenerate (zero-length) segments are handled as points.
std::optional<Point2> segment_intersection(const Segment& p, const Segment& q);

// Minimum distance between two closed segments. Exactly 0.0 whenever
// segment_intersection reports a hit, strictly positive otherwise.
double min_segment_distance(const Segment& p, const Segment& q);

// Distance from a point to a closed segment.
double point_segment_distance(const Point2& p, const Segment& s);

// Nearest point of a closed segment to p.
Point2 closest_point_on_segment(const Point2& p, const Segment& s);

} // namespace crosswatch::geometry

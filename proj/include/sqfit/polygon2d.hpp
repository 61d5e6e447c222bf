#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sqfit {

struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Convex polygon with counter-clockwise vertices, collinear vertices pruned.
struct ConvexPolygon {
    std::vector<Eigen::Vector2d> vertices;
};

double area(const ConvexPolygon& poly);

/// Area-weighted centroid.
Eigen::Vector2d centroid(const ConvexPolygon& poly);

/// Inside-or-on-boundary test for a convex CCW polygon.
bool contains(const ConvexPolygon& poly, const Eigen::Vector2d& point, double tol = 1e-9);

/// Minimal convex polygon containing all points (monotone chain). Throws
/// DegenerateInput when fewer than three points or all collinear.
ConvexPolygon convex_hull(const std::vector<Eigen::Vector2d>& points);

/// Convex-convex intersection by Sutherland-Hodgman clipping; empty result
/// when the polygons do not overlap.
std::optional<ConvexPolygon> intersect(const ConvexPolygon& a, const ConvexPolygon& b);

/// Intersection over union in [0, 1].
double iou(const ConvexPolygon& a, const ConvexPolygon& b);

/// n points uniform over the interior, by rejection inside the bounding box.
/// Deterministic for a fixed seed.
std::vector<Eigen::Vector2d> sample_interior(const ConvexPolygon& poly, int n,
                                             std::uint64_t seed);

}  // namespace sqfit

#include "sqfit/polygon2d.hpp"

#include <algorithm>
#include <cmath>

#include "sqfit/rng.hpp"

namespace sqfit {

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double bbox_diag_sq(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).squaredNorm();
}

/// Drop duplicate and collinear vertices from a CCW ring.
std::vector<Eigen::Vector2d> prune_ring(const std::vector<Eigen::Vector2d>& ring) {
    if (ring.size() < 3) return ring;
    const double tol = 1e-12 * bbox_diag_sq(ring);
    std::vector<Eigen::Vector2d> out;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& prev = ring[(i + n - 1) % n];
        const auto& cur = ring[i];
        const auto& next = ring[(i + 1) % n];
        if ((cur - prev).squaredNorm() <= tol) continue;
        if (cross(prev, cur, next) <= tol) continue;  // collinear or reflex sliver
        out.push_back(cur);
    }
    return out;
}

}  // namespace

double area(const ConvexPolygon& poly) {
    double twice = 0.0;
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % v.size()];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * twice;
}

Eigen::Vector2d centroid(const ConvexPolygon& poly) {
    const auto& v = poly.vertices;
    double twice = 0.0;
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % v.size()];
        const double w = p.x() * q.y() - q.x() * p.y();
        twice += w;
        acc += w * (p + q);
    }
    if (std::abs(twice) < 1e-300) throw DegenerateInput("centroid: zero-area polygon");
    return acc / (3.0 * twice);
}

bool contains(const ConvexPolygon& poly, const Eigen::Vector2d& point, double tol) {
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (cross(v[i], v[(i + 1) % v.size()], point) < -tol) return false;
    }
    return true;
}

ConvexPolygon convex_hull(const std::vector<Eigen::Vector2d>& points) {
    if (points.size() < 3) throw DegenerateInput("convex_hull: need at least 3 points");

    std::vector<Eigen::Vector2d> pts = points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a == b; }),
              pts.end());

    const std::size_t n = pts.size();
    if (n < 3) throw DegenerateInput("convex_hull: fewer than 3 distinct points");

    const double tol = 1e-12 * bbox_diag_sq(pts);
    std::vector<Eigen::Vector2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= tol) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= tol) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);

    if (hull.size() < 3) throw DegenerateInput("convex_hull: input is collinear");
    return {hull};
}

std::optional<ConvexPolygon> intersect(const ConvexPolygon& a, const ConvexPolygon& b) {
    std::vector<Eigen::Vector2d> subject = a.vertices;
    // Clip the subject against each CCW edge of b; inside = left of edge.
    for (std::size_t i = 0; i < b.vertices.size() && !subject.empty(); ++i) {
        const Eigen::Vector2d& e0 = b.vertices[i];
        const Eigen::Vector2d& e1 = b.vertices[(i + 1) % b.vertices.size()];
        std::vector<Eigen::Vector2d> out;
        out.reserve(subject.size() + 1);
        for (std::size_t j = 0; j < subject.size(); ++j) {
            const Eigen::Vector2d& cur = subject[j];
            const Eigen::Vector2d& nxt = subject[(j + 1) % subject.size()];
            const double dc = cross(e0, e1, cur);
            const double dn = cross(e0, e1, nxt);
            if (dc >= 0.0) {
                out.push_back(cur);
                if (dn < 0.0) out.push_back(cur + (nxt - cur) * (dc / (dc - dn)));
            } else if (dn >= 0.0) {
                out.push_back(cur + (nxt - cur) * (dc / (dc - dn)));
            }
        }
        subject = std::move(out);
    }

    if (subject.size() < 3) return std::nullopt;
    ConvexPolygon result{prune_ring(subject)};
    if (result.vertices.size() < 3 || area(result) <= 0.0) return std::nullopt;
    return result;
}

double iou(const ConvexPolygon& a, const ConvexPolygon& b) {
    const auto inter = intersect(a, b);
    if (!inter) return 0.0;
    const double ai = area(*inter);
    const double u = area(a) + area(b) - ai;
    if (u <= 0.0) return 0.0;
    return std::clamp(ai / u, 0.0, 1.0);
}

std::vector<Eigen::Vector2d> sample_interior(const ConvexPolygon& poly, int n,
                                             std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_interior: n must be >= 1");
    Eigen::Vector2d lo = poly.vertices.front(), hi = poly.vertices.front();
    for (const auto& v : poly.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }

    Rng rng(seed);
    std::vector<Eigen::Vector2d> samples;
    samples.reserve(n);
    while (static_cast<int>(samples.size()) < n) {
        const Eigen::Vector2d p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()));
        if (contains(poly, p)) samples.push_back(p);
    }
    return samples;
}

}  // namespace sqfit

#include "sqfit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sqfit/fitting.hpp"
#include "sqfit/rng.hpp"

namespace sqfit {

namespace {

/// World-frame axis-aligned box containing the body: transformed corners of
/// the local [-a, a] box (the surface never leaves it).
void grow_bounding_box(const SuperquadricParams& q, Eigen::Vector3d& lo, Eigen::Vector3d& hi) {
    const Eigen::Matrix3d R = euler_to_rot(q.orientation);
    for (int corner = 0; corner < 8; ++corner) {
        const Eigen::Vector3d local((corner & 1 ? 1 : -1) * q.size(0),
                                    (corner & 2 ? 1 : -1) * q.size(1),
                                    (corner & 4 ? 1 : -1) * q.size(2));
        const Eigen::Vector3d w = R * local + q.position;
        lo = lo.cwiseMin(w);
        hi = hi.cwiseMax(w);
    }
}

ConvexPolygon silhouette_or_empty(const SuperquadricParams& q, const Pose& pose,
                                  const CameraIntrinsics& intr, int grid, bool& ok) {
    try {
        ok = true;
        return silhouette(q, pose, intr, grid, grid);
    } catch (const BehindCamera&) {
    } catch (const DegenerateInput&) {
    }
    ok = false;
    return {};
}

}  // namespace

double iou3d(const SuperquadricParams& a, const SuperquadricParams& b, int n_mc,
             std::uint64_t seed, Exec exec) {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    grow_bounding_box(a, lo, hi);
    grow_bounding_box(b, lo, hi);

    // Draw the sample block serially so the point set depends only on the
    // seed; classification is then order-independent integer counting.
    Eigen::MatrixXd pts(3, n_mc);
    Rng rng(seed);
    for (int i = 0; i < n_mc; ++i)
        for (int k = 0; k < 3; ++k) pts(k, i) = rng.uniform(lo(k), hi(k));

    std::int64_t inter = 0, uni = 0;

    const auto classify = [&](int i, std::int64_t& it, std::int64_t& un) {
        const Eigen::Vector3d w = pts.col(i);
        const bool in_a = implicit_value(a, world_to_sq(a, w)) < 1.0;
        const bool in_b = implicit_value(b, world_to_sq(b, w)) < 1.0;
        it += in_a && in_b;
        un += in_a || in_b;
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static) reduction(+ : inter, uni)
        for (int i = 0; i < n_mc; ++i) classify(i, inter, uni);
    } else {
        for (int i = 0; i < n_mc; ++i) classify(i, inter, uni);
    }

    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double r_iou(const SuperquadricParams& est, const SuperquadricParams& gt,
             const std::vector<CameraView>& views, int grid) {
    double sum = 0.0;
    for (const auto& view : views) {
        bool est_ok = false, gt_ok = false;
        const ConvexPolygon se = silhouette_or_empty(est, view.pose, view.intrinsics, grid, est_ok);
        const ConvexPolygon sg = silhouette_or_empty(gt, view.pose, view.intrinsics, grid, gt_ok);
        if (est_ok && gt_ok) sum += iou(se, sg);
    }
    return sum / static_cast<double>(views.size());
}

double r_iou_m(const SuperquadricParams& est, const ObservationSet& obs, int grid) {
    return 1.0 - cost_g1(est, obs, grid, grid);
}

Stats compute_stats(std::vector<double> values) {
    if (values.empty()) throw EmptyInput("compute_stats: no values");
    Stats s;
    const int n = static_cast<int>(values.size());
    std::sort(values.begin(), values.end());
    s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    double sum = 0.0;
    for (double v : values) sum += v;
    s.average = sum / n;
    if (n > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.average) * (v - s.average);
        s.std_dev = std::sqrt(acc / (n - 1));
    }
    return s;
}

AggregateRow aggregate(const std::vector<TrialMetrics>& trials) {
    if (trials.empty()) throw EmptyInput("aggregate: no trials");
    std::vector<double> iou, riou, rioum, time;
    int successes = 0;
    for (const auto& t : trials) {
        iou.push_back(t.iou3d);
        riou.push_back(t.r_iou);
        rioum.push_back(t.r_iou_m);
        time.push_back(t.time_s);
        successes += t.success ? 1 : 0;
    }
    AggregateRow row;
    row.iou3d = compute_stats(std::move(iou));
    row.r_iou = compute_stats(std::move(riou));
    row.r_iou_m = compute_stats(std::move(rioum));
    row.time_s = compute_stats(std::move(time));
    row.success_rate = static_cast<double>(successes) / static_cast<double>(trials.size());
    return row;
}

double sq_volume(const SuperquadricParams& params) {
    const double e1 = params.shape(0), e2 = params.shape(1);
    return 2.0 * params.size.prod() * e1 * e2 * std::beta(e1 / 2.0 + 1.0, e1) *
           std::beta(e2 / 2.0, e2 / 2.0);
}

}  // namespace sqfit

#pragma once

#include <cstdint>
#include <vector>

#include "sqfit/exec.hpp"
#include "sqfit/observation.hpp"

namespace sqfit {

struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrialMetrics {
    double iou3d = 0.0;
    double r_iou = 0.0;
    double r_iou_m = 0.0;
    bool success = false;  // iou3d > 0
    double time_s = 0.0;
};

struct Stats {
    double median = 0.0;
    double average = 0.0;
    double std_dev = 0.0;  // sample standard deviation, 0 for a single value
};

struct AggregateRow {
    Stats iou3d, r_iou, r_iou_m, time_s;
    double success_rate = 0.0;
};

/// Monte-Carlo 3D intersection over union: uniform samples in the combined
/// bounding box of both bodies, classified by the implicit function.
/// Deterministic per seed; bit-identical in serial and parallel.
double iou3d(const SuperquadricParams& a, const SuperquadricParams& b, int n_mc,
             std::uint64_t seed, Exec exec = Exec::parallel);

/// Mean per-view silhouette IOU between two parameter sets. A body that is
/// not fully in front of a camera contributes 0 for that view.
double r_iou(const SuperquadricParams& est, const SuperquadricParams& gt,
             const std::vector<CameraView>& views, int grid = 64);

/// Mean per-view IOU between the estimate's silhouette and the convex hull
/// of the mask samples.
double r_iou_m(const SuperquadricParams& est, const ObservationSet& obs, int grid = 64);

/// Median / average / sample standard deviation per metric plus the success
/// rate (fraction of trials with positive 3D IOU).
AggregateRow aggregate(const std::vector<TrialMetrics>& trials);

Stats compute_stats(std::vector<double> values);

/// Closed-form superquadric volume.
double sq_volume(const SuperquadricParams& params);

}  // namespace sqfit

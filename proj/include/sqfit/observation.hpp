#pragma once

#include <cstdint>
#include <vector>

#include "sqfit/camera_geometry.hpp"
#include "sqfit/polygon2d.hpp"
#include "sqfit/sq_core.hpp"

namespace sqfit {

/// Silhouette polygon of one object in one view plus the random interior
/// pixels standing in for a semantic instance mask.
struct MaskObservation {
    int view_id = 0;
    ConvexPolygon polygon;
    std::vector<Eigen::Vector2d> samples;
};

/// All mask observations of one object plus the observing cameras.
struct ObservationSet {
    std::vector<MaskObservation> observations;
    std::vector<Pose> poses;
    CameraIntrinsics intrinsics;

    std::vector<CameraView> views() const {
        std::vector<CameraView> v;
        v.reserve(poses.size());
        for (const auto& p : poses) v.push_back({p, intrinsics});
        return v;
    }
};

/// Silhouette of the superquadric in a view: convex hull of the projected
/// surface grid. Throws BehindCamera when any grid point is not in front of
/// the camera.
ConvexPolygon silhouette(const SuperquadricParams& params, const Pose& view,
                         const CameraIntrinsics& intr, int n_eta = 64, int n_omega = 64);

/// Silhouette plus n uniformly sampled interior pixels; deterministic per seed.
MaskObservation make_observation(const SuperquadricParams& params, const Pose& view,
                                 const CameraIntrinsics& intr, int view_id, int n_samples,
                                 std::uint64_t seed, int n_eta = 64, int n_omega = 64);

}  // namespace sqfit

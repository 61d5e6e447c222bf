#include "sqfit/observation.hpp"

namespace sqfit {

ConvexPolygon silhouette(const SuperquadricParams& params, const Pose& view,
                         const CameraIntrinsics& intr, int n_eta, int n_omega) {
    const RigidTransform world_from_cam = pose_to_transform(view);
    const RigidTransform cam_from_world = world_from_cam.inverse();

    const auto grid = sample_surface_grid(params, n_eta, n_omega);
    std::vector<Eigen::Vector2d> pixels;
    pixels.reserve(grid.size());
    for (const auto& w : grid) {
        pixels.push_back(project(intr, cam_from_world.apply(w)));  // throws BehindCamera
    }
    return convex_hull(pixels);
}

MaskObservation make_observation(const SuperquadricParams& params, const Pose& view,
                                 const CameraIntrinsics& intr, int view_id, int n_samples,
                                 std::uint64_t seed, int n_eta, int n_omega) {
    MaskObservation obs;
    obs.view_id = view_id;
    obs.polygon = silhouette(params, view, intr, n_eta, n_omega);
    obs.samples = sample_interior(obs.polygon, n_samples, seed);
    return obs;
}

}  // namespace sqfit

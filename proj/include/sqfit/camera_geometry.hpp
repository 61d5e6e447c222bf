#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace sqfit {

struct NonPositiveDepth : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BehindCamera : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientViews : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Pinhole intrinsics. Camera frame is z forward, x right, y down.
struct CameraIntrinsics {
    Eigen::Vector2d focal{400.0, 300.0};            // pixels
    Eigen::Vector2d principal_point{320.0, 240.0};  // pixels
    Eigen::Vector2i resolution{640, 480};           // pixels
};

/// 6-DoF pose: position plus ZYX Euler orientation, world frame.
struct Pose {
    Eigen::Vector3d position{0.0, 0.0, 0.0};
    Eigen::Vector3d orientation{0.0, 0.0, 0.0};
};

/// Rotation + translation, applied as rotation * x + translation.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * x + translation; }
    RigidTransform inverse() const;
    RigidTransform compose(const RigidTransform& then_inner) const;
};

struct CameraView {
    Pose pose;
    CameraIntrinsics intrinsics;
};

/// Transform mapping camera-frame points into the world frame.
RigidTransform pose_to_transform(const Pose& pose);

/// Camera-frame point for a pixel at the given depth along the ray.
Eigen::Vector3d back_project(const CameraIntrinsics& intr, const Eigen::Vector2d& pixel,
                             double depth);

/// Pixel for a camera-frame point; the point must be in front of the camera.
Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& t_cam);

/// World-frame ray direction through a pixel (unnormalized, unit camera depth).
Eigen::Vector3d bearing_world(const Pose& pose, const CameraIntrinsics& intr,
                              const Eigen::Vector2d& pixel);

/// Linear multi-view triangulation: stacks p_C_i + d_i * v_i = x into a
/// least-squares system over [x, d_1..d_P] and solves it by Householder QR.
Eigen::Vector3d triangulate(const std::vector<Eigen::Vector2d>& centroids,
                            const std::vector<CameraView>& views);

/// Scalar least-squares depth d minimizing ||p_C + d * bearing - center||.
double depth_prior(const Pose& view, const Eigen::Vector3d& bearing,
                   const Eigen::Vector3d& sq_center);

}  // namespace sqfit

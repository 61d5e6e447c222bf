#include "sqfit/camera_geometry.hpp"

#include "sqfit/sq_core.hpp"

namespace sqfit {

RigidTransform RigidTransform::inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
}

RigidTransform RigidTransform::compose(const RigidTransform& then_inner) const {
    return {rotation * then_inner.rotation, rotation * then_inner.translation + translation};
}

RigidTransform pose_to_transform(const Pose& pose) {
    return {euler_to_rot(pose.orientation), pose.position};
}

Eigen::Vector3d back_project(const CameraIntrinsics& intr, const Eigen::Vector2d& pixel,
                             double depth) {
    if (depth <= 0.0) throw NonPositiveDepth("back_project: depth must be positive");
    return depth * Eigen::Vector3d((pixel.x() - intr.principal_point.x()) / intr.focal.x(),
                                   (pixel.y() - intr.principal_point.y()) / intr.focal.y(), 1.0);
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& t_cam) {
    if (t_cam.z() <= 1e-9) throw BehindCamera("project: point behind camera");
    return {intr.focal.x() * t_cam.x() / t_cam.z() + intr.principal_point.x(),
            intr.focal.y() * t_cam.y() / t_cam.z() + intr.principal_point.y()};
}

Eigen::Vector3d bearing_world(const Pose& pose, const CameraIntrinsics& intr,
                              const Eigen::Vector2d& pixel) {
    return euler_to_rot(pose.orientation) * back_project(intr, pixel, 1.0);
}

Eigen::Vector3d triangulate(const std::vector<Eigen::Vector2d>& centroids,
                            const std::vector<CameraView>& views) {
    const int P = static_cast<int>(views.size());
    if (P < 2 || centroids.size() != views.size())
        throw InsufficientViews("triangulate: need at least two views with centroids");

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * P, 3 + P);
    Eigen::VectorXd b(3 * P);
    for (int i = 0; i < P; ++i) {
        A.block<3, 3>(3 * i, 0) = Eigen::Matrix3d::Identity();
        A.block<3, 1>(3 * i, 3 + i) = -bearing_world(views[i].pose, views[i].intrinsics, centroids[i]);
        b.segment<3>(3 * i) = views[i].pose.position;
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < 1e-8 * sv(0))
        throw DegenerateGeometry("triangulate: near-parallel bearing rays");

    const Eigen::VectorXd x = A.householderQr().solve(b);
    return x.head<3>();
}

double depth_prior(const Pose& view, const Eigen::Vector3d& bearing,
                   const Eigen::Vector3d& sq_center) {
    return bearing.dot(sq_center - view.position) / bearing.squaredNorm();
}

}  // namespace sqfit

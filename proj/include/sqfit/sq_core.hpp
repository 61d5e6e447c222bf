#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace sqfit {

/// Point within radial-distance guard of the superquadric center; the
/// distance direction is undefined there.
struct DegeneratePoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One superquadric: size per axis, two roundness exponents, and a 6-DoF
/// world pose. 11 free parameters in total.
struct SuperquadricParams {
    Eigen::Vector3d size{1.0, 1.0, 1.0};        // meters, per local axis
    Eigen::Vector2d shape{1.0, 1.0};            // roundness, valid in [0.1, 1.9]
    Eigen::Vector3d position{0.0, 0.0, 0.0};    // world frame, meters
    Eigen::Vector3d orientation{0.0, 0.0, 0.0}; // world frame, ZYX Euler, radians

    /// Flat layout [size(3), shape(2), position(3), orientation(3)] used by
    /// the optimizer and the gradient code.
    Eigen::Matrix<double, 11, 1> to_vector() const;
    static SuperquadricParams from_vector(const Eigen::Matrix<double, 11, 1>& v);
};

/// Sign-preserving power: sign(x) * |x|^e. Keeps the parametric surface
/// closed for non-integer exponents over negative bases.
double spow(double x, double e);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

/// Rotation from ZYX Euler angles: R = Rz(r_z) * Ry(r_y) * Rx(r_x).
Eigen::Matrix3d euler_to_rot(const Eigen::Vector3d& r);

/// Euler angles (ZYX convention, components in (-pi, pi]) from a rotation
/// matrix. Falls back to r_x = 0 at the pitch singularity.
Eigen::Vector3d euler_from_rot(const Eigen::Matrix3d& R);

/// Point on the surface in local coordinates for latitude eta in
/// [-pi/2, pi/2] and longitude omega in [-pi, pi].
Eigen::Vector3d surface_point(const SuperquadricParams& params, double eta, double omega);

/// Implicit inside-outside function F evaluated at a local point:
/// 1 on the surface, < 1 inside, > 1 outside.
double implicit_value(const SuperquadricParams& params, const Eigen::Vector3d& t_local);

/// Radial distance ||t|| * (F(t)^(-eps1/2) - 1): zero on the surface,
/// positive inside, negative outside. Throws DegeneratePoint when
/// ||t|| < 1e-12.
double radial_distance(const SuperquadricParams& params, const Eigen::Vector3d& t_local);

/// Radial distance with the center guard clamped instead of thrown; used on
/// optimization paths where trial states may probe degenerate geometry.
double radial_distance_clamped(const SuperquadricParams& params, const Eigen::Vector3d& t_local);

/// Radial distance of a world point together with its analytic first
/// derivatives with respect to the 11 parameters and the point itself.
struct RadialGradient {
    double value = 0.0;
    Eigen::Matrix<double, 11, 1> wrt_params = Eigen::Matrix<double, 11, 1>::Zero();
    Eigen::Vector3d wrt_point = Eigen::Vector3d::Zero();
};

RadialGradient radial_distance_gradient(const SuperquadricParams& params,
                                        const Eigen::Vector3d& t_world);

/// Uniform (eta, omega) grid over the full surface, transformed to world
/// coordinates. n_eta >= 2, n_omega >= 3; returns n_eta * n_omega points.
std::vector<Eigen::Vector3d> sample_surface_grid(const SuperquadricParams& params,
                                                 int n_eta, int n_omega);

/// World point into the superquadric's local frame.
Eigen::Vector3d world_to_sq(const SuperquadricParams& params, const Eigen::Vector3d& t_world);

/// Local point back into the world frame.
Eigen::Vector3d sq_to_world(const SuperquadricParams& params, const Eigen::Vector3d& t_local);

}  // namespace sqfit

#pragma once

#include <cstdint>
#include <string>

#include "sqfit/observation.hpp"

namespace sqfit {

struct ExhaustedRejection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Simulation parameters: circular camera rig plus uniform ranges for the
/// random ground-truth object.
struct SceneConfig {
    int camera_count = 3;
    double circle_radius = 10.0;  // meters
    double elevation = 0.0;       // radians above the z = 0 plane
    CameraIntrinsics intrinsics;

    Eigen::Vector2d size_range{0.1, 5.0};
    Eigen::Vector2d position_range{-5.0, 5.0};
    Eigen::Vector2d orientation_range{-M_PI, M_PI};
    Eigen::Vector2d shape_range{0.1, 1.9};

    /// When set, one shape exponent is drawn from the extreme bands
    /// [0.1, 0.15] or [1.85, 1.9] instead of the full range.
    bool extreme_shapes = false;

    int samples_per_observation = 100;
    int silhouette_grid = 64;
};

struct Scene {
    SuperquadricParams gt;
    std::vector<CameraView> views;
    ObservationSet observations;
};

/// Equally spaced poses on a circle around the origin, each looking at the
/// world origin.
std::vector<Pose> camera_ring(int count, double radius, double elevation = 0.0);

/// Uniform draw of superquadric parameters within the configured ranges.
SuperquadricParams random_sq(const SceneConfig& config, std::uint64_t seed);

/// Random scene with valid observations in every view: redraws objects whose
/// silhouette leaves any image or that contain a camera center. Throws
/// ExhaustedRejection after 10^4 attempts.
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// JSON serialization of a scene (the on-disk interchange format).
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

}  // namespace sqfit

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sqfit/fitting.hpp"
#include "sqfit/rng.hpp"
#include "sqfit/simulator.hpp"

using namespace sqfit;

TEST_SUITE("simulator") {

TEST_CASE("camera ring geometry") {
    const auto ring = camera_ring(3, 10.0);
    REQUIRE(ring.size() == 3);
    const CameraIntrinsics intr;
    for (int i = 0; i < 3; ++i) {
        CHECK(ring[i].position.norm() == doctest::Approx(10.0).epsilon(1e-12));
        const double angle = std::atan2(ring[i].position.y(), ring[i].position.x());
        CHECK(wrap_angle(angle - 2.0 * M_PI * i / 3.0) == doctest::Approx(0.0).epsilon(1e-9));

        // the origin lands on the principal point
        const RigidTransform cam_from_world = pose_to_transform(ring[i]).inverse();
        const Eigen::Vector2d px = project(intr, cam_from_world.apply(Eigen::Vector3d::Zero()));
        CHECK((px - intr.principal_point).norm() < 1e-9);
    }

    const auto pair = camera_ring(2, 4.0);
    CHECK((pair[0].position + pair[1].position).norm() < 1e-9);  // antipodal

    CHECK_THROWS(camera_ring(1, 10.0));
    CHECK_THROWS(camera_ring(3, 0.0));
}

TEST_CASE("random draws stay within the configured ranges") {
    SceneConfig cfg;
    double size_min = 1e9, size_max = -1e9, shape_min = 1e9, shape_max = -1e9;
    for (int i = 0; i < 10000; ++i) {
        const SuperquadricParams q = random_sq(cfg, i);
        size_min = std::min(size_min, q.size.minCoeff());
        size_max = std::max(size_max, q.size.maxCoeff());
        shape_min = std::min(shape_min, q.shape.minCoeff());
        shape_max = std::max(shape_max, q.shape.maxCoeff());
        CHECK((q.position.array().abs() <= 5.0).all());
    }
    CHECK(size_min >= 0.1);
    CHECK(size_max <= 5.0);
    CHECK(size_min < 0.2);   // extremes are actually reached
    CHECK(size_max > 4.8);
    CHECK(shape_min < 0.15);  // covers the extreme-shape bands
    CHECK(shape_max > 1.85);

    CHECK(random_sq(cfg, 7).to_vector() == random_sq(cfg, 7).to_vector());
}

TEST_CASE("extreme-shape draws force one exponent into the bands") {
    SceneConfig cfg;
    cfg.extreme_shapes = true;
    for (int i = 0; i < 500; ++i) {
        const SuperquadricParams q = random_sq(cfg, 5000 + i);
        const bool e1 = (q.shape(0) <= 0.15 && q.shape(0) >= 0.1) ||
                        (q.shape(0) >= 1.85 && q.shape(0) <= 1.9);
        const bool e2 = (q.shape(1) <= 0.15 && q.shape(1) >= 0.1) ||
                        (q.shape(1) >= 1.85 && q.shape(1) <= 1.9);
        CHECK((e1 || e2));
    }
}

TEST_CASE("generated scenes have valid in-frame observations") {
    SceneConfig cfg;
    const Scene scene = generate_scene(cfg, 3);
    REQUIRE(scene.observations.observations.size() == 3);
    for (const auto& o : scene.observations.observations) {
        CHECK(o.samples.size() == 100);
        for (const auto& v : o.polygon.vertices) {
            CHECK(v.x() >= 0.0);
            CHECK(v.x() <= 640.0);
            CHECK(v.y() >= 0.0);
            CHECK(v.y() <= 480.0);
        }
        for (const auto& s : o.samples) CHECK(contains(o.polygon, s));
    }
    // no camera sits inside the object
    for (const auto& view : scene.views)
        CHECK(implicit_value(scene.gt, world_to_sq(scene.gt, view.pose.position)) > 1.0);
}

TEST_CASE("scene generation is reproducible") {
    SceneConfig cfg;
    const Scene a = generate_scene(cfg, 17);
    const Scene b = generate_scene(cfg, 17);
    CHECK(a.gt.to_vector() == b.gt.to_vector());
    for (std::size_t i = 0; i < a.observations.observations.size(); ++i)
        CHECK(a.observations.observations[i].samples == b.observations.observations[i].samples);
}

TEST_CASE("a tiny centered object is always accepted") {
    SceneConfig cfg;
    cfg.size_range = Eigen::Vector2d(0.1, 0.1);
    cfg.position_range = Eigen::Vector2d(0.0, 0.0);
    const Scene scene = generate_scene(cfg, 1);
    CHECK(scene.gt.size.isApprox(Eigen::Vector3d(0.1, 0.1, 0.1), 1e-12));
}

TEST_CASE("infeasible configurations exhaust the redraw budget") {
    SceneConfig cfg;
    cfg.size_range = Eigen::Vector2d(50.0, 60.0);  // every camera ends up inside the body
    CHECK_THROWS_AS(generate_scene(cfg, 1), ExhaustedRejection);
}

TEST_CASE("ground truth is a near-zero of the analytic cost") {
    for (std::uint64_t seed : {101, 102}) {
        SceneConfig cfg;
        const Scene scene = generate_scene(cfg, seed);

        DepthSet d;
        d.mode = DepthMode::separate;
        d.values.resize(total_samples(scene.observations));
        int i = 0;
        for (const auto& o : scene.observations.observations) {
            const Pose& pose = scene.observations.poses[o.view_id];
            for (const auto& s : o.samples) {
                double depth = 0.0;
                REQUIRE(oracles::ray_surface_depth(scene.gt, pose,
                                                   scene.observations.intrinsics, s, 40.0,
                                                   depth));
                d.values(i++) = depth;
            }
        }
        CHECK(residuals_g4(scene.gt, scene.observations, d).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("scene JSON round trip") {
    SceneConfig cfg;
    const Scene scene = generate_scene(cfg, 19);
    const std::string path = (std::filesystem::temp_directory_path() / "sqfit_scene.json").string();
    save_scene(scene, path);
    const Scene loaded = load_scene(path);

    CHECK(loaded.gt.to_vector() == scene.gt.to_vector());
    REQUIRE(loaded.views.size() == scene.views.size());
    for (std::size_t i = 0; i < scene.views.size(); ++i) {
        CHECK(loaded.views[i].pose.position == scene.views[i].pose.position);
        CHECK(loaded.views[i].pose.orientation == scene.views[i].pose.orientation);
    }
    for (std::size_t i = 0; i < scene.observations.observations.size(); ++i) {
        CHECK(loaded.observations.observations[i].samples ==
              scene.observations.observations[i].samples);
        CHECK(loaded.observations.observations[i].polygon.vertices ==
              scene.observations.observations[i].polygon.vertices);
    }
    std::filesystem::remove(path);
}

TEST_CASE("malformed scene files are rejected with context") {
    const std::string path = (std::filesystem::temp_directory_path() / "sqfit_bad.json").string();
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_WITH_AS(load_scene(path), doctest::Contains("sqfit_bad.json"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

}  // TEST_SUITE

#include "sqfit/simulator.hpp"

#include <fstream>
#include <json.hpp>

#include "sqfit/rng.hpp"

namespace sqfit {

namespace {

constexpr int kMaxRedraws = 10000;

bool inside_image(const CameraIntrinsics& intr, const Eigen::Vector2d& px) {
    return px.x() >= 0.0 && px.x() <= intr.resolution.x() && px.y() >= 0.0 &&
           px.y() <= intr.resolution.y();
}

/// Pose looking from `position` toward `target`, camera y axis pointing
/// downward in the world.
Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
    const Eigen::Vector3d forward = (target - position).normalized();
    Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
    if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();  // looking straight up/down
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);

    Eigen::Matrix3d R;
    R.col(0) = right;
    R.col(1) = down;
    R.col(2) = forward;
    return {position, euler_from_rot(R)};
}

nlohmann::json vec_to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
nlohmann::json vec_to_json(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

Eigen::Vector3d vec3_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
Eigen::Vector2d vec2_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

nlohmann::json points_to_json(const std::vector<Eigen::Vector2d>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pts) arr.push_back(vec_to_json(p));
    return arr;
}

std::vector<Eigen::Vector2d> points_from_json(const nlohmann::json& arr) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(arr.size());
    for (const auto& p : arr) pts.push_back(vec2_from_json(p));
    return pts;
}

}  // namespace

std::vector<Pose> camera_ring(int count, double radius, double elevation) {
    if (count < 2) throw std::invalid_argument("camera_ring: need at least 2 cameras");
    if (radius <= 0.0) throw std::invalid_argument("camera_ring: radius must be positive");

    std::vector<Pose> poses;
    poses.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * M_PI * i / count;
        const Eigen::Vector3d position(radius * std::cos(angle) * std::cos(elevation),
                                       radius * std::sin(angle) * std::cos(elevation),
                                       radius * std::sin(elevation));
        poses.push_back(look_at(position, Eigen::Vector3d::Zero()));
    }
    return poses;
}

SuperquadricParams random_sq(const SceneConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    SuperquadricParams q;
    for (int i = 0; i < 3; ++i)
        q.size(i) = rng.uniform(config.size_range(0), config.size_range(1));
    if (config.extreme_shapes) {
        const int extreme_axis = static_cast<int>(rng.below(2));
        for (int i = 0; i < 2; ++i) {
            if (i == extreme_axis) {
                const bool low_band = rng.below(2) == 0;
                q.shape(i) = low_band ? rng.uniform(0.10, 0.15) : rng.uniform(1.85, 1.90);
            } else {
                q.shape(i) = rng.uniform(config.shape_range(0), config.shape_range(1));
            }
        }
    } else {
        for (int i = 0; i < 2; ++i)
            q.shape(i) = rng.uniform(config.shape_range(0), config.shape_range(1));
    }
    for (int i = 0; i < 3; ++i)
        q.position(i) = rng.uniform(config.position_range(0), config.position_range(1));
    for (int i = 0; i < 3; ++i)
        q.orientation(i) = rng.uniform(config.orientation_range(0), config.orientation_range(1));
    return q;
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
    Scene scene;
    const std::vector<Pose> poses = camera_ring(config.camera_count, config.circle_radius,
                                                config.elevation);
    scene.views.clear();
    for (const auto& p : poses) scene.views.push_back({p, config.intrinsics});

    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        const std::uint64_t draw_seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
        const SuperquadricParams candidate = random_sq(config, draw_seed);

        bool valid = true;
        std::vector<MaskObservation> observations;
        for (int v = 0; v < config.camera_count && valid; ++v) {
            // Reject objects containing a camera center.
            if (implicit_value(candidate, world_to_sq(candidate, poses[v].position)) <= 1.0) {
                valid = false;
                break;
            }
            try {
                MaskObservation o = make_observation(
                    candidate, poses[v], config.intrinsics, v, config.samples_per_observation,
                    derive_seed(draw_seed, 1000 + v), config.silhouette_grid,
                    config.silhouette_grid);
                for (const auto& vert : o.polygon.vertices) {
                    if (!inside_image(config.intrinsics, vert)) {
                        valid = false;
                        break;
                    }
                }
                if (valid) observations.push_back(std::move(o));
            } catch (const BehindCamera&) {
                valid = false;
            } catch (const DegenerateInput&) {
                valid = false;
            }
        }

        if (valid) {
            scene.gt = candidate;
            scene.observations.observations = std::move(observations);
            scene.observations.intrinsics = config.intrinsics;
            scene.observations.poses = poses;
            return scene;
        }
    }
    throw ExhaustedRejection("generate_scene: no valid object within the redraw budget");
}

std::string scene_to_json(const Scene& scene) {
    nlohmann::json j;
    j["gt_sq"] = {{"a", vec_to_json(scene.gt.size)},
                  {"eps", vec_to_json(scene.gt.shape)},
                  {"p", vec_to_json(scene.gt.position)},
                  {"r", vec_to_json(scene.gt.orientation)}};

    nlohmann::json cams = nlohmann::json::array();
    for (const auto& view : scene.views) {
        cams.push_back({{"f", vec_to_json(view.intrinsics.focal)},
                        {"kappa", vec_to_json(view.intrinsics.principal_point)},
                        {"resolution", {view.intrinsics.resolution.x(), view.intrinsics.resolution.y()}},
                        {"p", vec_to_json(view.pose.position)},
                        {"r", vec_to_json(view.pose.orientation)}});
    }
    j["cameras"] = cams;

    nlohmann::json obs = nlohmann::json::array();
    for (const auto& o : scene.observations.observations) {
        nlohmann::json verts = nlohmann::json::array();
        for (const auto& v : o.polygon.vertices) verts.push_back(vec_to_json(v));
        obs.push_back({{"view_id", o.view_id},
                       {"polygon", verts},
                       {"samples", points_to_json(o.samples)}});
    }
    j["observations"] = obs;
    return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);

    Scene scene;
    const auto& gt = j.at("gt_sq");
    scene.gt.size = vec3_from_json(gt.at("a"));
    scene.gt.shape = vec2_from_json(gt.at("eps"));
    scene.gt.position = vec3_from_json(gt.at("p"));
    scene.gt.orientation = vec3_from_json(gt.at("r"));

    for (const auto& c : j.at("cameras")) {
        CameraView view;
        view.intrinsics.focal = vec2_from_json(c.at("f"));
        view.intrinsics.principal_point = vec2_from_json(c.at("kappa"));
        view.intrinsics.resolution = Eigen::Vector2i(c.at("resolution").at(0).get<int>(),
                                                     c.at("resolution").at(1).get<int>());
        view.pose.position = vec3_from_json(c.at("p"));
        view.pose.orientation = vec3_from_json(c.at("r"));
        scene.views.push_back(view);
    }
    if (scene.views.size() < 2) throw std::runtime_error("scene: need at least two cameras");

    for (std::size_t i = 1; i < scene.views.size(); ++i) {
        const auto& a = scene.views[0].intrinsics;
        const auto& b = scene.views[i].intrinsics;
        if (a.focal != b.focal || a.principal_point != b.principal_point ||
            a.resolution != b.resolution)
            throw std::runtime_error("scene: cameras must share intrinsics");
    }

    scene.observations.intrinsics = scene.views[0].intrinsics;
    for (const auto& v : scene.views) scene.observations.poses.push_back(v.pose);

    scene.observations.observations.resize(scene.views.size());
    std::vector<bool> seen(scene.views.size(), false);
    for (const auto& jo : j.at("observations")) {
        MaskObservation o;
        o.view_id = jo.at("view_id");
        if (o.view_id < 0 || o.view_id >= static_cast<int>(scene.views.size()) || seen[o.view_id])
            throw std::runtime_error("scene: bad or duplicate observation view_id");
        seen[o.view_id] = true;
        o.polygon.vertices = points_from_json(jo.at("polygon"));
        if (o.polygon.vertices.size() < 3) throw std::runtime_error("scene: degenerate polygon");
        o.samples = points_from_json(jo.at("samples"));
        scene.observations.observations[o.view_id] = std::move(o);
    }
    for (bool s : seen)
        if (!s) throw std::runtime_error("scene: missing observation for a camera");

    return scene;
}

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scene: cannot open " + path);
    out << scene_to_json(scene) << "\n";
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scene: cannot open " + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return scene_from_json(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_scene: " + path + ": " + e.what());
    }
}

}  // namespace sqfit

#include "sqfit/fitting.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace sqfit {

namespace {

constexpr double kSizeLower = 0.1;
constexpr double kShapeLower = 0.1;
constexpr double kShapeUpper = 1.9;
const double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd separate_depth_values(const DepthSet& depths, const ObservationSet& obs) {
    if (depths.mode == DepthMode::separate) return depths.values;
    const auto offsets = sample_offsets(obs);
    Eigen::VectorXd out(total_samples(obs));
    for (std::size_t p = 0; p < obs.observations.size(); ++p) {
        const int n = static_cast<int>(obs.observations[p].samples.size());
        out.segment(offsets[p], n).setConstant(depths.values(static_cast<int>(p)));
    }
    return out;
}

/// Per-row depth variable index for the given mode.
int depth_index(const DepthSet& depths, const std::vector<int>& offsets, int view, int sample) {
    return depths.mode == DepthMode::combined ? view : offsets[view] + sample;
}

struct RayTable {
    std::vector<Eigen::Matrix3d> rotations;       // camera to world
    std::vector<Eigen::Vector3d> origins;         // camera positions
    std::vector<Eigen::Vector3d> unit_rays;       // world-frame ray per sample
    std::vector<int> view_of_row;                 // residual row -> view
    std::vector<int> sample_of_row;               // residual row -> sample in view
};

RayTable build_ray_table(const ObservationSet& obs) {
    RayTable t;
    t.rotations.reserve(obs.poses.size());
    t.origins.reserve(obs.poses.size());
    for (const auto& pose : obs.poses) {
        t.rotations.push_back(euler_to_rot(pose.orientation));
        t.origins.push_back(pose.position);
    }
    for (std::size_t p = 0; p < obs.observations.size(); ++p) {
        const auto& o = obs.observations[p];
        for (std::size_t n = 0; n < o.samples.size(); ++n) {
            t.unit_rays.push_back(t.rotations[o.view_id] *
                                  back_project(obs.intrinsics, o.samples[n], 1.0));
            t.view_of_row.push_back(o.view_id);
            t.sample_of_row.push_back(static_cast<int>(n));
        }
    }
    return t;
}

double volume_factor(const SuperquadricParams& q) {
    return q.size(0) * q.size(1) * q.size(2) + 1.0;
}

}  // namespace

std::vector<int> sample_offsets(const ObservationSet& obs) {
    std::vector<int> offsets(obs.observations.size(), 0);
    int acc = 0;
    for (std::size_t p = 0; p < obs.observations.size(); ++p) {
        offsets[p] = acc;
        acc += static_cast<int>(obs.observations[p].samples.size());
    }
    return offsets;
}

int total_samples(const ObservationSet& obs) {
    int acc = 0;
    for (const auto& o : obs.observations) acc += static_cast<int>(o.samples.size());
    return acc;
}

DepthSet to_separate(const DepthSet& depths, const ObservationSet& obs) {
    return {DepthMode::separate, separate_depth_values(depths, obs)};
}

DepthSet to_combined(const DepthSet& depths, const ObservationSet& obs) {
    if (depths.mode == DepthMode::combined) return depths;
    const auto offsets = sample_offsets(obs);
    Eigen::VectorXd out(static_cast<int>(obs.observations.size()));
    for (std::size_t p = 0; p < obs.observations.size(); ++p) {
        const int n = static_cast<int>(obs.observations[p].samples.size());
        out(static_cast<int>(p)) = depths.values.segment(offsets[p], n).mean();
    }
    return {DepthMode::combined, out};
}

std::string to_string(StageId id) {
    switch (id) {
        case StageId::s1: return "1";
        case StageId::s2: return "2";
        case StageId::s3a: return "3A";
        case StageId::s3b: return "3B";
        case StageId::s3c: return "3C";
        case StageId::s3d: return "3D";
        case StageId::s3e: return "3E";
        case StageId::s3f: return "3F";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Cost functions
// ---------------------------------------------------------------------------

Eigen::VectorXd per_view_costs(const SuperquadricParams& params, const ObservationSet& obs,
                               int n_eta, int n_omega) {
    const std::vector<Eigen::Vector3d> grid = sample_surface_grid(params, n_eta, n_omega);
    const int P = static_cast<int>(obs.observations.size());
    Eigen::VectorXd costs = Eigen::VectorXd::Ones(P);

    bool behind_any = false;
    for (int p = 0; p < P; ++p) {
        const auto& o = obs.observations[p];
        const RigidTransform cam_from_world = pose_to_transform(obs.poses[o.view_id]).inverse();

        std::vector<Eigen::Vector2d> pixels;
        pixels.reserve(grid.size());
        try {
            for (const auto& w : grid)
                pixels.push_back(project(obs.intrinsics, cam_from_world.apply(w)));
            const ConvexPolygon sil = convex_hull(pixels);
            const ConvexPolygon mask = convex_hull(o.samples);
            costs(p) = 1.0 - iou(sil, mask);
        } catch (const BehindCamera&) {
            behind_any = true;
            break;
        } catch (const DegenerateInput&) {
            // silhouette collapsed to a segment: no usable overlap
        }
    }
    // Not fully observable: the whole evaluation is the no-overlap plateau.
    if (behind_any) costs.setOnes();
    return costs;
}

double cost_g1(const SuperquadricParams& params, const ObservationSet& obs,
               int n_eta, int n_omega) {
    return per_view_costs(params, obs, n_eta, n_omega).mean();
}

double cost_g2(const SuperquadricParams& params, const ObservationSet& obs, double c_p,
               int n_eta, int n_omega) {
    return cost_g1(params, obs, n_eta, n_omega) + constraint_penalty(sq_parameter_vector(params), c_p);
}

Eigen::VectorXd residuals_g4(const SuperquadricParams& params, const ObservationSet& obs,
                             const DepthSet& depths, Exec exec) {
    const RayTable rays = build_ray_table(obs);
    const auto offsets = sample_offsets(obs);
    const int rows = static_cast<int>(rays.unit_rays.size());
    Eigen::VectorXd r(rows);

    const auto row = [&](int i) {
        const int p = rays.view_of_row[i];
        const double d = depths.values(depth_index(depths, offsets, p, rays.sample_of_row[i]));
        const Eigen::Vector3d w = rays.origins[p] + d * rays.unit_rays[i];
        r(i) = radial_distance_clamped(params, world_to_sq(params, w));
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < rows; ++i) row(i);
    } else {
        for (int i = 0; i < rows; ++i) row(i);
    }
    return r;
}

Eigen::VectorXd residuals_g5(const SuperquadricParams& params, const ObservationSet& obs,
                             const DepthSet& depths, Exec exec) {
    return volume_factor(params) * residuals_g4(params, obs, depths, exec);
}

Eigen::MatrixXd residuals_g5_jacobian(const SuperquadricParams& params,
                                      const ObservationSet& obs, const DepthSet& depths,
                                      Exec exec) {
    const RayTable rays = build_ray_table(obs);
    const auto offsets = sample_offsets(obs);
    const int rows = static_cast<int>(rays.unit_rays.size());
    const int cols = 11 + static_cast<int>(depths.values.size());

    const double vf = volume_factor(params);
    const Eigen::Vector3d dvf(params.size(1) * params.size(2), params.size(0) * params.size(2),
                              params.size(0) * params.size(1));

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, cols);

    const auto row = [&](int i) {
        const int p = rays.view_of_row[i];
        const int di = depth_index(depths, offsets, p, rays.sample_of_row[i]);
        const double d = depths.values(di);
        const Eigen::Vector3d w = rays.origins[p] + d * rays.unit_rays[i];

        RadialGradient g;
        try {
            g = radial_distance_gradient(params, w);
        } catch (const DegeneratePoint&) {
            return;  // flat row; the residual itself is guarded
        }

        J.row(i).head<11>() = vf * g.wrt_params.transpose();
        J.row(i).head<3>() += g.value * dvf.transpose();
        J(i, 11 + di) = vf * g.wrt_point.dot(rays.unit_rays[i]);
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < rows; ++i) row(i);
    } else {
        for (int i = 0; i < rows; ++i) row(i);
    }
    return J;
}

ParameterVector sq_parameter_vector(const SuperquadricParams& params) {
    ParameterVector pv;
    pv.values = params.to_vector();
    pv.free_mask.assign(11, 1);
    pv.lower = Eigen::VectorXd::Constant(11, -kInf);
    pv.upper = Eigen::VectorXd::Constant(11, kInf);
    pv.lower.segment<3>(0).setConstant(kSizeLower);
    pv.lower.segment<2>(3).setConstant(kShapeLower);
    pv.upper.segment<2>(3).setConstant(kShapeUpper);
    return pv;
}

// ---------------------------------------------------------------------------
// Stage 1: triangulation and combined depth
// ---------------------------------------------------------------------------

Stage1Result stage1_triangulation(const ObservationSet& obs) {
    const int P = static_cast<int>(obs.observations.size());
    if (P < 2) throw InsufficientViews("stage1: need at least two observations");

    std::vector<Eigen::Vector2d> centroids;
    std::vector<CameraView> views;
    centroids.reserve(P);
    views.reserve(P);
    for (const auto& o : obs.observations) {
        centroids.push_back(centroid(o.polygon));
        views.push_back({obs.poses[o.view_id], obs.intrinsics});
    }

    Stage1Result out;
    out.position = triangulate(centroids, views);
    out.depths.mode = DepthMode::combined;
    out.depths.values.resize(P);
    for (int p = 0; p < P; ++p) {
        const Eigen::Vector3d v = bearing_world(views[p].pose, views[p].intrinsics, centroids[p]);
        out.depths.values(p) = depth_prior(views[p].pose, v, out.position);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 2: PCA initialization
// ---------------------------------------------------------------------------

PrincipalBox principal_box(const std::vector<Eigen::Vector3d>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 4) throw DegenerateCloud("principal_box: not enough points");

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : points) mean += p;
    mean /= n;

    Eigen::MatrixXd centered(3, n);
    for (int i = 0; i < n; ++i) centered.col(i) = points[i] - mean;

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered / std::sqrt(double(n - 1)),
                                                Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv(2) < 1e-10 * sv(0)) throw DegenerateCloud("principal_box: rank-deficient cloud");

    Eigen::Matrix3d axes = svd.matrixU();
    if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);

    const Eigen::MatrixXd rotated = axes.transpose() * centered;
    PrincipalBox box;
    box.rotation = axes;
    box.half_extents = (rotated.rowwise().maxCoeff() - rotated.rowwise().minCoeff()) / 2.0;
    return box;
}

double optimize_sample_depth(const SuperquadricParams& params, const Pose& pose,
                             const CameraIntrinsics& intr, const Eigen::Vector2d& sample,
                             double d0) {
    const Eigen::Matrix3d R = euler_to_rot(pose.orientation);
    const Eigen::Vector3d ray = R * back_project(intr, sample, 1.0);

    const auto value = [&](double d) {
        const Eigen::Vector3d w = pose.position + d * ray;
        const double g3 = radial_distance_clamped(params, world_to_sq(params, w));
        return g3 * g3;
    };

    // Damped Newton on the squared radial distance.
    double d = d0;
    double f = value(d);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        const double h = 1e-6 * std::max(1.0, std::abs(d));
        const double fp = value(d + h), fm = value(d - h);
        const double g = (fp - fm) / (2.0 * h);
        const double H = (fp - 2.0 * f + fm) / (h * h);

        double step = H > 1e-18 ? -g / H : -g;
        if (!std::isfinite(step)) break;

        double scale = 1.0;
        bool improved = false;
        for (int k = 0; k < 20; ++k) {
            const double d_try = d + scale * step;
            if (d_try > 0.0) {
                const double f_try = value(d_try);
                if (f_try < f) {
                    d = d_try;
                    f = f_try;
                    improved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!improved || std::abs(scale * step) < 1e-12 * std::max(1.0, std::abs(d))) {
            converged = true;
            break;
        }
        if (f < 1e-24) {
            converged = true;
            break;
        }
    }
    if (converged && f < 1e-16) return d;

    // Golden-section fallback over a wide bracket around the prior.
    double lo = 0.1 * d0, hi = 10.0 * d0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * d0; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = value(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = value(x2);
        }
    }
    const double d_golden = (lo + hi) / 2.0;
    return value(d_golden) < f ? d_golden : d;
}

std::pair<SuperquadricParams, DepthSet> stage2_pca_init(const ObservationSet& obs,
                                                        const DepthSet& combined_depths,
                                                        const Eigen::Vector3d& position,
                                                        const FitOptions& opts) {
    const DepthSet combined = to_combined(combined_depths, obs);

    // Phase 1: back-project every sample at its view's depth prior.
    std::vector<Eigen::Vector3d> cloud;
    cloud.reserve(total_samples(obs));
    for (std::size_t p = 0; p < obs.observations.size(); ++p) {
        const auto& o = obs.observations[p];
        const Pose& pose = obs.poses[o.view_id];
        const Eigen::Matrix3d R = euler_to_rot(pose.orientation);
        const double d = combined.values(static_cast<int>(p));
        for (const auto& s : o.samples)
            cloud.push_back(pose.position + d * (R * back_project(obs.intrinsics, s, 1.0)));
    }

    // Phase 2 and 3: principal axes give orientation, extents give size.
    const PrincipalBox box = principal_box(cloud);

    SuperquadricParams q;
    q.size = box.half_extents.cwiseMax(kSizeLower);
    q.shape = Eigen::Vector2d(1.0, 1.0);
    q.position = position;
    q.orientation = euler_from_rot(box.rotation);

    // Per-sample depths onto the initialized quadric.
    DepthSet separate;
    separate.mode = DepthMode::separate;
    separate.values.resize(total_samples(obs));
    const auto offsets = sample_offsets(obs);

    std::vector<std::pair<int, int>> rows;
    rows.reserve(total_samples(obs));
    for (std::size_t p = 0; p < obs.observations.size(); ++p)
        for (std::size_t n = 0; n < obs.observations[p].samples.size(); ++n)
            rows.emplace_back(static_cast<int>(p), static_cast<int>(n));

    const auto solve_row = [&](int i) {
        const auto [p, n] = rows[i];
        const auto& o = obs.observations[p];
        separate.values(offsets[p] + n) =
            optimize_sample_depth(q, obs.poses[o.view_id], obs.intrinsics, o.samples[n],
                                  combined.values(p));
    };

    if (opts.exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < static_cast<int>(rows.size()); ++i) solve_row(i);
    } else {
        for (int i = 0; i < static_cast<int>(rows.size()); ++i) solve_row(i);
    }

    return {q, separate};
}

// ---------------------------------------------------------------------------
// Stage 3 variants
// ---------------------------------------------------------------------------

namespace {

/// Free/fixed layout of one stage-3 setup.
struct VariantPlan {
    bool analytic = false;
    bool with_depths = false;
    DepthMode depth_mode = DepthMode::separate;
    bool shape_free = true;
    bool quadric_free = true;  // size + pose
    bool reset_shape_to_one = false;
};

VariantPlan plan_for(StageId variant) {
    switch (variant) {
        case StageId::s3a: return {false, false, DepthMode::separate, true, true, false};
        case StageId::s3b: return {false, false, DepthMode::separate, false, true, true};
        case StageId::s3c: return {true, true, DepthMode::combined, false, true, false};
        case StageId::s3d: return {true, true, DepthMode::separate, false, true, false};
        case StageId::s3e: return {true, true, DepthMode::separate, true, true, false};
        case StageId::s3f: return {false, false, DepthMode::separate, true, false, false};
        default: throw std::invalid_argument("stage3: not a stage-3 id");
    }
}

}  // namespace

PipelineState stage3(StageId variant, const PipelineState& state, const ObservationSet& obs,
                     const FitOptions& opts, const std::optional<LmSettings>& override_settings,
                     std::string* termination) {
    const VariantPlan plan = plan_for(variant);

    PipelineState next = state;
    if (plan.reset_shape_to_one) next.params.shape = Eigen::Vector2d(1.0, 1.0);
    if (plan.with_depths)
        next.depths = plan.depth_mode == DepthMode::combined ? to_combined(next.depths, obs)
                                                             : to_separate(next.depths, obs);

    LmSettings settings = override_settings
                              ? *override_settings
                              : (plan.analytic ? opts.lm_analytic : opts.lm_numeric);
    settings.exec = opts.exec;

    const int n_depths = plan.with_depths ? static_cast<int>(next.depths.values.size()) : 0;
    ParameterVector pv = sq_parameter_vector(next.params);
    if (plan.with_depths) {
        ParameterVector full;
        full.values.resize(11 + n_depths);
        full.values << pv.values, next.depths.values;
        full.lower.resize(11 + n_depths);
        full.lower << pv.lower, Eigen::VectorXd::Constant(n_depths, opts.depth_lower_bound);
        full.upper.resize(11 + n_depths);
        full.upper << pv.upper, Eigen::VectorXd::Constant(n_depths, kInf);
        full.free_mask.assign(11 + n_depths, 1);
        pv = std::move(full);
    }

    for (int i = 0; i < 3; ++i) pv.free_mask[i] = plan.quadric_free;        // size
    for (int i = 3; i < 5; ++i) pv.free_mask[i] = plan.shape_free;          // shape
    for (int i = 5; i < 11; ++i) pv.free_mask[i] = plan.quadric_free;       // pose

    LmResult lm;
    if (plan.analytic) {
        const DepthMode mode = next.depths.mode;
        const ResidualFn residuals = [&, mode](const Eigen::VectorXd& v) {
            const SuperquadricParams q = SuperquadricParams::from_vector(v.head<11>());
            const DepthSet d{mode, v.tail(n_depths)};
            return residuals_g5(q, obs, d, settings.exec);
        };
        const JacobianFn jacobian = [&, mode](const Eigen::VectorXd& v) {
            const SuperquadricParams q = SuperquadricParams::from_vector(v.head<11>());
            const DepthSet d{mode, v.tail(n_depths)};
            return residuals_g5_jacobian(q, obs, d, settings.exec);
        };
        lm = levenberg_marquardt(residuals, jacobian, pv, settings);
        next.params = SuperquadricParams::from_vector(lm.x.head<11>());
        next.depths.values = lm.x.tail(n_depths);
    } else {
        const ResidualFn residual = [&](const Eigen::VectorXd& v) {
            return per_view_costs(SuperquadricParams::from_vector(v.head<11>()), obs,
                                  opts.grid_eta, opts.grid_omega);
        };
        lm = levenberg_marquardt(residual, nullptr, pv, settings);
        next.params = SuperquadricParams::from_vector(lm.x.head<11>());
    }

    if (termination) *termination = to_string(lm.reason);
    return next;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

PipelineState cold_start(const ObservationSet& obs, const FitOptions& opts) {
    PipelineState state;
    Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
    for (const auto& pose : obs.poses) {
        const Eigen::Matrix3d R = euler_to_rot(pose.orientation);
        look_at += pose.position + opts.cold_start_depth * (R * Eigen::Vector3d::UnitZ());
    }
    look_at /= static_cast<double>(obs.poses.size());

    state.params.size = Eigen::Vector3d::Ones();
    state.params.shape = Eigen::Vector2d(1.0, 1.0);
    state.params.position = look_at;
    state.params.orientation = Eigen::Vector3d::Zero();
    state.depths.mode = DepthMode::combined;
    state.depths.values =
        Eigen::VectorXd::Constant(static_cast<int>(obs.observations.size()), opts.cold_start_depth);
    return state;
}

FitReport run_pipeline(const std::vector<StageSpec>& stages, const ObservationSet& obs,
                       const FitOptions& opts) {
    FitReport report;
    PipelineState state = cold_start(obs, opts);
    report.initial = state;

    for (const auto& spec : stages) {
        StageSnapshot snap;
        snap.id = spec.id;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            switch (spec.id) {
                case StageId::s1: {
                    const Stage1Result r = stage1_triangulation(obs);
                    state.params.position = r.position;
                    state.depths = r.depths;
                    break;
                }
                case StageId::s2: {
                    auto [q, d] = stage2_pca_init(obs, state.depths, state.params.position, opts);
                    state.params = q;
                    state.depths = d;
                    break;
                }
                default:
                    state = stage3(spec.id, state, obs, opts, spec.settings, &snap.termination);
                    break;
            }
            for (int k = 0; k < 3; ++k)
                state.params.orientation(k) = wrap_angle(state.params.orientation(k));
        } catch (const std::exception& e) {
            snap.error = e.what();
        }
        snap.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        snap.params = state.params;
        snap.depths = state.depths;
        report.stages.push_back(std::move(snap));
    }

    report.final_params = state.params;
    report.final_depths = state.depths;
    return report;
}

}  // namespace sqfit

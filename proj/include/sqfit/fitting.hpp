#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sqfit/observation.hpp"
#include "sqfit/optim.hpp"

namespace sqfit {

struct DegenerateCloud : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unknown depths used when back-projecting mask samples: either one per
/// camera view (combined) or one per sample (separate).
enum class DepthMode { combined, separate };

struct DepthSet {
    DepthMode mode = DepthMode::combined;
    Eigen::VectorXd values;
};

/// Start offset of each view's sample block in a separate-depth vector.
std::vector<int> sample_offsets(const ObservationSet& obs);
int total_samples(const ObservationSet& obs);

DepthSet to_separate(const DepthSet& depths, const ObservationSet& obs);
DepthSet to_combined(const DepthSet& depths, const ObservationSet& obs);

enum class StageId { s1, s2, s3a, s3b, s3c, s3d, s3e, s3f };

std::string to_string(StageId id);

struct StageSpec {
    StageId id;
    std::optional<LmSettings> settings;  // per-stage override of the defaults
};

struct FitOptions {
    int grid_eta = 64;
    int grid_omega = 64;
    LmSettings lm_numeric;   // stages 3A/3B/3F
    LmSettings lm_analytic;  // stages 3C/3D/3E
    double cold_start_depth = 10.0;
    double depth_lower_bound = 0.01;
    Exec exec = Exec::parallel;

    FitOptions() {
        lm_numeric.penalty_weight = 1.0;
        lm_numeric.penalty_mode = PenaltyMode::add_to_scalar;
        lm_analytic.penalty_weight = 100.0;
        lm_analytic.penalty_mode = PenaltyMode::append_residual;
    }
};

struct PipelineState {
    SuperquadricParams params;
    DepthSet depths;
};

struct StageSnapshot {
    StageId id{};
    SuperquadricParams params;
    DepthSet depths;
    double wall_time_s = 0.0;
    std::string termination;  // optimizer stop reason, when the stage ran one
    std::string error;        // empty on success
};

struct FitReport {
    PipelineState initial;
    std::vector<StageSnapshot> stages;
    SuperquadricParams final_params;
    DepthSet final_depths;

    bool all_stages_ok() const {
        for (const auto& s : stages)
            if (!s.error.empty()) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Cost functions
// ---------------------------------------------------------------------------

/// Per-view 1 - IOU between the projected silhouette of the estimate and the
/// convex hull of that view's mask samples; all ones when the estimate is
/// behind any camera. The numeric stages minimize the sum of these squared.
Eigen::VectorXd per_view_costs(const SuperquadricParams& params, const ObservationSet& obs,
                               int n_eta = 64, int n_omega = 64);

/// 1 - mean over views of the silhouette/mask IOU. Exactly 1 when there is
/// no overlap anywhere or the estimate is behind a camera.
double cost_g1(const SuperquadricParams& params, const ObservationSet& obs,
               int n_eta = 64, int n_omega = 64);

/// cost_g1 plus the soft box-constraint penalty on the 11 parameters.
double cost_g2(const SuperquadricParams& params, const ObservationSet& obs, double c_p = 1.0,
               int n_eta = 64, int n_omega = 64);

/// Radial distances of all back-projected samples, one entry per (view,
/// sample). Combined depths broadcast one value per view.
Eigen::VectorXd residuals_g4(const SuperquadricParams& params, const ObservationSet& obs,
                             const DepthSet& depths, Exec exec = Exec::parallel);

/// residuals_g4 scaled by (a_x * a_y * a_z + 1), pulling the fit toward the
/// minimal size that still explains the observations.
Eigen::VectorXd residuals_g5(const SuperquadricParams& params, const ObservationSet& obs,
                             const DepthSet& depths, Exec exec = Exec::parallel);

/// Analytic Jacobian of residuals_g5 with respect to [params(11), depths].
Eigen::MatrixXd residuals_g5_jacobian(const SuperquadricParams& params,
                                      const ObservationSet& obs, const DepthSet& depths,
                                      Exec exec = Exec::parallel);

/// Box bounds for the 11-parameter vector: size >= 0.1, shape in [0.1, 1.9].
ParameterVector sq_parameter_vector(const SuperquadricParams& params);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct Stage1Result {
    Eigen::Vector3d position;
    DepthSet depths;  // combined
};

/// Triangulate the mask centroids and derive one rough depth per view.
Stage1Result stage1_triangulation(const ObservationSet& obs);

/// Principal axes and half extents of a 3D point cloud (PCA box).
struct PrincipalBox {
    Eigen::Matrix3d rotation;      // columns are principal axes, det = +1
    Eigen::Vector3d half_extents;  // (max - min) / 2 along each axis
};

PrincipalBox principal_box(const std::vector<Eigen::Vector3d>& points);

/// Back-project all samples at their view's combined depth, estimate
/// orientation and size by PCA, fix shape to (1, 1), and fit one depth per
/// sample to the resulting quadric.
std::pair<SuperquadricParams, DepthSet> stage2_pca_init(const ObservationSet& obs,
                                                        const DepthSet& combined_depths,
                                                        const Eigen::Vector3d& position,
                                                        const FitOptions& opts = {});

/// Depth minimizing the squared radial distance along one sample ray;
/// damped Newton started at d0 with a golden-section fallback.
double optimize_sample_depth(const SuperquadricParams& params, const Pose& pose,
                             const CameraIntrinsics& intr, const Eigen::Vector2d& sample,
                             double d0);

/// Final optimization, one of the six setups:
///   A: numeric cost, all 11 parameters
///   B: numeric cost, quadric parameters (shape pinned to (1, 1))
///   C: analytic cost, quadric parameters + combined depths
///   D: analytic cost, quadric parameters + separate depths
///   E: analytic cost, all parameters + separate depths
///   F: numeric cost, shape parameters only
PipelineState stage3(StageId variant, const PipelineState& state, const ObservationSet& obs,
                     const FitOptions& opts = {},
                     const std::optional<LmSettings>& override_settings = std::nullopt,
                     std::string* termination = nullptr);

/// Initial state when no stage has run: unit quadric at the mean camera
/// look-at point, default depth per view.
PipelineState cold_start(const ObservationSet& obs, const FitOptions& opts = {});

/// Execute stages in order, threading parameters and depths forward. Stage
/// errors are recorded and the previous state carries over.
FitReport run_pipeline(const std::vector<StageSpec>& stages, const ObservationSet& obs,
                       const FitOptions& opts = {});

}  // namespace sqfit

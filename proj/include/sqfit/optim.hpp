#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqfit/exec.hpp"

namespace sqfit {

struct NonFiniteResidual : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularNormalMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Optimization state: values with a free/fixed mask and box bounds used by
/// the soft constraint penalty. Fixed entries are never modified.
struct ParameterVector {
    Eigen::VectorXd values;
    std::vector<std::uint8_t> free_mask;  // 1 = free
    Eigen::VectorXd lower, upper;         // +-inf allowed

    static ParameterVector unconstrained(const Eigen::VectorXd& x);

    int size() const { return static_cast<int>(values.size()); }
    int free_count() const;
    std::vector<int> free_indices() const;
};

/// How the constraint penalty enters the squared cost.
enum class PenaltyMode {
    none,
    add_to_scalar,    // scalar problems: residual becomes [r + c_p * sum(rho)]
    append_residual,  // vector problems: append sqrt(c_p * sum(rho))
};

struct LmSettings {
    double initial_lambda = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    int max_iterations = 200;
    double cost_rel_tol = 1e-8;
    double step_tol = 1e-10;
    double fd_step = 1e-6;  // h_i = fd_step * max(1, |x_i|)
    double penalty_weight = 0.0;
    PenaltyMode penalty_mode = PenaltyMode::none;
    Exec exec = Exec::parallel;
};

enum class LmStop { max_iterations, cost_rel_tol, step_tol };

std::string to_string(LmStop stop);

struct LmResult {
    Eigen::VectorXd x;
    std::vector<double> cost_history;  // accepted costs, starting with the initial one
    LmStop reason = LmStop::max_iterations;
    int iterations = 0;
};

/// Residuals as a function of the full parameter vector.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
/// Jacobian with one column per parameter (all K of them; the engine selects
/// the free columns).
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Soft box-constraint penalty: c_p times the summed distances to violated
/// bounds. Exactly zero on the (closed) feasible box.
double constraint_penalty(const ParameterVector& x, double c_p);

/// Central-difference Jacobian over the free parameters, one column per free
/// entry. Columns are independent evaluations, so the parallel path is
/// bit-identical to the serial one.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const ParameterVector& x,
                                 double fd_step = 1e-6, Exec exec = Exec::parallel);

/// Levenberg-Marquardt with multiplicative damping on diag(J^T J). Pass a
/// null jacobian_fn to fall back to finite differences on the (penalty
/// augmented) residuals.
LmResult levenberg_marquardt(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn,
                             const ParameterVector& x0, const LmSettings& settings);

}  // namespace sqfit

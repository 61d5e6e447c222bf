#include "sqfit/optim.hpp"

#include <cmath>
#include <limits>

namespace sqfit {

namespace {

constexpr double kLambdaMax = 1e14;
constexpr double kLambdaMin = 1e-12;
constexpr double kDiagFloor = 1e-12;

double penalty_sum(const Eigen::VectorXd& values, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper) {
    double sum = 0.0;
    for (int i = 0; i < values.size(); ++i) {
        if (values(i) < lower(i)) sum += lower(i) - values(i);
        else if (values(i) > upper(i)) sum += values(i) - upper(i);
    }
    return sum;
}

/// d(sum rho)/dx_i: -1 below the lower bound, +1 above the upper, else 0.
double penalty_slope(double v, double lo, double hi) {
    if (v < lo) return -1.0;
    if (v > hi) return 1.0;
    return 0.0;
}

}  // namespace

ParameterVector ParameterVector::unconstrained(const Eigen::VectorXd& x) {
    ParameterVector pv;
    pv.values = x;
    pv.free_mask.assign(x.size(), 1);
    pv.lower = Eigen::VectorXd::Constant(x.size(), -std::numeric_limits<double>::infinity());
    pv.upper = Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::infinity());
    return pv;
}

int ParameterVector::free_count() const {
    int n = 0;
    for (auto f : free_mask) n += f ? 1 : 0;
    return n;
}

std::vector<int> ParameterVector::free_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
        if (free_mask[i]) idx.push_back(i);
    return idx;
}

std::string to_string(LmStop stop) {
    switch (stop) {
        case LmStop::max_iterations: return "max_iterations";
        case LmStop::cost_rel_tol: return "cost_rel_tol";
        case LmStop::step_tol: return "step_tol";
    }
    return "unknown";
}

double constraint_penalty(const ParameterVector& x, double c_p) {
    return c_p * penalty_sum(x.values, x.lower, x.upper);
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const ParameterVector& x,
                                 double fd_step, Exec exec) {
    const Eigen::VectorXd r0 = fn(x.values);
    if (!r0.allFinite()) throw NonFiniteResidual("numeric_jacobian: residual not finite");

    const std::vector<int> free = x.free_indices();
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd J(r0.size(), nf);

    const auto column = [&](int c) {
        const int i = free[c];
        const double h = fd_step * std::max(1.0, std::abs(x.values(i)));
        Eigen::VectorXd xp = x.values, xm = x.values;
        xp(i) += h;
        xm(i) -= h;
        J.col(c) = (fn(xp) - fn(xm)) / (2.0 * h);
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < nf; ++c) column(c);
    } else {
        for (int c = 0; c < nf; ++c) column(c);
    }

    if (!J.allFinite()) throw NonFiniteResidual("numeric_jacobian: non-finite column");
    return J;
}

LmResult levenberg_marquardt(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn,
                             const ParameterVector& x0, const LmSettings& settings) {
    const double c_p = settings.penalty_weight;
    const PenaltyMode mode = c_p > 0.0 ? settings.penalty_mode : PenaltyMode::none;

    // Residuals with the soft constraint folded in, so the squared norm is
    // the total cost in every mode.
    const ResidualFn augmented = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd r = residual_fn(v);
        if (mode == PenaltyMode::none) return r;
        const double pen = c_p * penalty_sum(v, x0.lower, x0.upper);
        if (mode == PenaltyMode::add_to_scalar) {
            r.array() += pen;
            return r;
        }
        Eigen::VectorXd out(r.size() + 1);
        out << r, std::sqrt(pen);
        return out;
    };

    const std::vector<int> free = x0.free_indices();
    const int nf = static_cast<int>(free.size());

    LmResult result;
    result.x = x0.values;

    Eigen::VectorXd r = augmented(result.x);
    if (!r.allFinite()) throw NonFiniteResidual("levenberg_marquardt: residual not finite at x0");
    double cost = r.squaredNorm();
    result.cost_history.push_back(cost);

    if (nf == 0) {
        result.reason = LmStop::step_tol;
        return result;
    }

    // Free columns of the Jacobian of the augmented residual.
    const auto jacobian_free = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
        if (!jacobian_fn) {
            ParameterVector pv = x0;
            pv.values = v;
            return numeric_jacobian(augmented, pv, settings.fd_step, settings.exec);
        }
        const Eigen::MatrixXd full = jacobian_fn(v);
        Eigen::MatrixXd Jr(full.rows(), nf);
        for (int c = 0; c < nf; ++c) Jr.col(c) = full.col(free[c]);
        if (mode == PenaltyMode::none) return Jr;

        const double pen = c_p * penalty_sum(v, x0.lower, x0.upper);
        Eigen::RowVectorXd slope(nf);
        for (int c = 0; c < nf; ++c)
            slope(c) = c_p * penalty_slope(v(free[c]), x0.lower(free[c]), x0.upper(free[c]));
        if (mode == PenaltyMode::add_to_scalar) {
            Jr.rowwise() += slope;
            return Jr;
        }
        Eigen::MatrixXd J(Jr.rows() + 1, nf);
        J.topRows(Jr.rows()) = Jr;
        // d sqrt(pen)/dx; zero inside the box where the sqrt is flat.
        J.bottomRows(1) = pen > 0.0 ? (slope / (2.0 * std::sqrt(pen))).eval()
                                    : Eigen::RowVectorXd::Zero(nf).eval();
        return J;
    };

    double lambda = settings.initial_lambda;

    // iterations counts accepted steps; the final convergence-detection pass
    // that produces no step is not one.
    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
        const Eigen::MatrixXd J = jacobian_free(result.x);
        const Eigen::VectorXd g = J.transpose() * r;
        const Eigen::MatrixXd H = J.transpose() * J;
        // Scale floor keeps parameters with a locally flat gradient from
        // taking unbounded steps when H is rank-deficient.
        const double diag_floor = std::max(kDiagFloor, 1e-3 * H.diagonal().maxCoeff());
        const Eigen::VectorXd diag = H.diagonal().cwiseMax(diag_floor);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = H;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(-g);

            if (!step.allFinite()) {
                lambda *= settings.lambda_up;
                if (lambda > kLambdaMax)
                    throw SingularNormalMatrix("levenberg_marquardt: damped system unsolvable");
                continue;
            }

            if (step.norm() < settings.step_tol) {
                result.reason = LmStop::step_tol;
                return result;
            }

            Eigen::VectorXd x_try = result.x;
            for (int c = 0; c < nf; ++c) x_try(free[c]) += step(c);
            const Eigen::VectorXd r_try = augmented(x_try);
            const double cost_try = r_try.allFinite() ? r_try.squaredNorm()
                                                      : std::numeric_limits<double>::infinity();

            if (cost_try < cost) {
                accepted = true;
                lambda = std::max(lambda * settings.lambda_down, kLambdaMin);
                const double rel = (cost - cost_try) / std::max(cost, 1e-300);
                result.x = x_try;
                r = r_try;
                cost = cost_try;
                result.cost_history.push_back(cost);
                result.iterations = iter;
                if (step.norm() < settings.step_tol) {
                    result.reason = LmStop::step_tol;
                    return result;
                }
                if (rel < settings.cost_rel_tol) {
                    result.reason = LmStop::cost_rel_tol;
                    return result;
                }
            } else {
                lambda *= settings.lambda_up;
                if (lambda > kLambdaMax) {
                    // No decrease possible at maximal damping: the step has
                    // effectively collapsed to zero.
                    result.reason = LmStop::step_tol;
                    return result;
                }
            }
        }
    }

    result.reason = LmStop::max_iterations;
    return result;
}

}  // namespace sqfit

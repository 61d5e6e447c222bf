#include <doctest.h>

#include "oracles.hpp"
#include "sqfit/optim.hpp"
#include "sqfit/rng.hpp"
#include "sqfit/sq_core.hpp"

using namespace sqfit;

namespace {

ParameterVector bounded(const Eigen::VectorXd& x, double lo, double hi) {
    ParameterVector pv = ParameterVector::unconstrained(x);
    pv.lower.setConstant(lo);
    pv.upper.setConstant(hi);
    return pv;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("constraint penalty distances") {
    // shape exponent past its upper bound
    ParameterVector pv = bounded(Eigen::VectorXd::Constant(1, 2.0), 0.1, 1.9);
    CHECK(constraint_penalty(pv, 100.0) == doctest::Approx(10.0));

    // inside the box
    pv.values(0) = 1.0;
    CHECK(constraint_penalty(pv, 100.0) == doctest::Approx(0.0));

    // below a lower bound
    ParameterVector size = bounded(Eigen::VectorXd::Constant(1, 0.05), 0.1,
                                   std::numeric_limits<double>::infinity());
    CHECK(constraint_penalty(size, 1.0) == doctest::Approx(0.05));

    // exactly on the boundary
    size.values(0) = 0.1;
    CHECK(constraint_penalty(size, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("penalty grows linearly with violation distance") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        ParameterVector pv = bounded(Eigen::VectorXd::Zero(3), -1.0, 1.0);
        const double excess = rng.uniform(0.0, 5.0);
        pv.values(1) = 1.0 + excess;
        CHECK(constraint_penalty(pv, 2.0) == doctest::Approx(2.0 * excess));
    }
}

TEST_CASE("numeric jacobian of a quadratic") {
    const ResidualFn fn = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(1);
        r(0) = x(0) * x(0);
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::VectorXd::Constant(1, 3.0));
    const Eigen::MatrixXd J = numeric_jacobian(fn, pv);
    CHECK(J(0, 0) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("fixed parameters have no jacobian column") {
    const ResidualFn fn = [](const Eigen::VectorXd& x) { return x; };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::VectorXd::Ones(3));
    pv.free_mask = {1, 0, 1};
    const Eigen::MatrixXd J = numeric_jacobian(fn, pv);
    CHECK(J.cols() == 2);
    CHECK(J.rows() == 3);
}

TEST_CASE("numeric jacobian is bit-identical in serial and parallel") {
    const ResidualFn fn = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(3);
        r << std::sin(x(0)) * x(1), std::exp(0.1 * x(2)), x(0) * x(1) * x(2);
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector3d(0.3, -1.2, 2.0));
    const Eigen::MatrixXd a = numeric_jacobian(fn, pv, 1e-6, Exec::serial);
    const Eigen::MatrixXd b = numeric_jacobian(fn, pv, 1e-6, Exec::parallel);
    CHECK(a == b);
}

TEST_CASE("numeric jacobian matches the analytic radial gradient") {
    SuperquadricParams q;
    q.size = Eigen::Vector3d(1.4, 0.9, 2.2);
    q.shape = Eigen::Vector2d(0.8, 1.3);
    q.orientation = Eigen::Vector3d(0.5, -0.3, 1.1);
    const Eigen::Vector3d world(2.5, -1.0, 1.5);

    const ResidualFn fn = [&](const Eigen::VectorXd& v) {
        const SuperquadricParams p = SuperquadricParams::from_vector(v.head<11>());
        Eigen::VectorXd r(1);
        r(0) = radial_distance(p, world_to_sq(p, world));
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(q.to_vector());
    const Eigen::MatrixXd J = numeric_jacobian(fn, pv);
    const RadialGradient g = radial_distance_gradient(q, world);
    for (int i = 0; i < 11; ++i) {
        const double scale = std::max({1.0, std::abs(g.wrt_params(i)), std::abs(J(0, i))});
        CHECK(std::abs(J(0, i) - g.wrt_params(i)) / scale < 1e-5);
    }
}

TEST_CASE("non-finite residual at the start is an error") {
    const ResidualFn fn = [](const Eigen::VectorXd&) {
        Eigen::VectorXd r(1);
        r(0) = std::numeric_limits<double>::quiet_NaN();
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::VectorXd::Ones(1));
    CHECK_THROWS_AS(numeric_jacobian(fn, pv), NonFiniteResidual);
    CHECK_THROWS_AS(levenberg_marquardt(fn, nullptr, pv, LmSettings{}), NonFiniteResidual);
}

TEST_CASE("LM solves exact linear least squares in a few iterations") {
    // y = 2x on five samples, residuals y_i - m x_i, start at m = 0
    const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    const ResidualFn fn = [&](const Eigen::VectorXd& m) {
        return (2.0 * xs - m(0) * xs).eval();
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::VectorXd::Zero(1));
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, LmSettings{});
    CHECK(res.x(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(res.iterations <= 3);
}

TEST_CASE("LM reaches the Rosenbrock minimum") {
    const ResidualFn fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(2);
        r << 10.0 * (v(1) - v(0) * v(0)), 1.0 - v(0);
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector2d(-1.2, 1.0));
    LmSettings settings;
    settings.max_iterations = 500;
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, settings);
    CHECK((res.x - Eigen::Vector2d(1, 1)).norm() < 1e-6);

    // independent long-run gradient descent lands at the same optimum
    Eigen::Vector2d x(-1.2, 1.0);
    for (int i = 0; i < 200000; ++i) {
        const double r1 = 10.0 * (x(1) - x(0) * x(0)), r2 = 1.0 - x(0);
        Eigen::Vector2d g(-20.0 * x(0) * r1 - r2, 10.0 * r1);
        x -= 1e-3 * g;
    }
    CHECK((x - Eigen::Vector2d(1, 1)).norm() < 1e-3);
    CHECK((res.x.head<2>() - x).norm() < 2e-3);
}

TEST_CASE("starting at the optimum stops immediately") {
    const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    const ResidualFn fn = [&](const Eigen::VectorXd& m) {
        return (2.0 * xs - m(0) * xs).eval();
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::VectorXd::Constant(1, 2.0));
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, LmSettings{});
    CHECK(res.reason == LmStop::step_tol);
    CHECK(res.iterations <= 1);
    CHECK(res.x(0) == doctest::Approx(2.0));
}

TEST_CASE("fully masked problems return the start unchanged") {
    const ResidualFn fn = [](const Eigen::VectorXd& x) { return x; };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector3d(1, 2, 3));
    pv.free_mask = {0, 0, 0};
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, LmSettings{});
    CHECK(res.x.isApprox(Eigen::Vector3d(1, 2, 3), 0.0));
}

TEST_CASE("accepted cost never increases") {
    const ResidualFn fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(3);
        r << v(0) * v(0) - v(1), std::sin(v(1)) + 0.3, v(0) - 0.7 * v(1) + 0.1;
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector2d(2.0, -1.5));
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, LmSettings{});
    for (std::size_t i = 1; i < res.cost_history.size(); ++i)
        CHECK(res.cost_history[i] <= res.cost_history[i - 1]);
}

TEST_CASE("soft penalty pulls a bounded parameter back into the box") {
    // minimize (x - 3)^2 subject to x <= 1 as a soft constraint
    const ResidualFn fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(1);
        r(0) = v(0) - 3.0;
        return r;
    };
    ParameterVector pv = bounded(Eigen::VectorXd::Zero(1), -1.0, 1.0);
    LmSettings settings;
    settings.penalty_weight = 100.0;
    settings.penalty_mode = PenaltyMode::append_residual;
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, settings);
    // unconstrained optimum is 3; the penalty holds it near the bound
    CHECK(res.x(0) < 1.2);
    CHECK(res.x(0) > 0.8);
}

TEST_CASE("LM is bit-identical across jacobian execution modes") {
    const ResidualFn fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(3);
        r << v(0) * v(0) - v(1), std::sin(v(1)) + 0.3, v(0) - 0.7 * v(1) + 0.1;
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector2d(2.0, -1.5));
    LmSettings serial, parallel;
    serial.exec = Exec::serial;
    parallel.exec = Exec::parallel;
    const LmResult a = levenberg_marquardt(fn, nullptr, pv, serial);
    const LmResult b = levenberg_marquardt(fn, nullptr, pv, parallel);
    CHECK(a.x == b.x);
    CHECK(a.cost_history == b.cost_history);
}

TEST_CASE("LM with masked parameters leaves them untouched") {
    const ResidualFn fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(2);
        r << v(0) - 1.0, v(1) - 5.0;
        return r;
    };
    ParameterVector pv = ParameterVector::unconstrained(Eigen::Vector2d(0.0, 0.0));
    pv.free_mask = {1, 0};
    const LmResult res = levenberg_marquardt(fn, nullptr, pv, LmSettings{});
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(res.x(1) == 0.0);
}

}  // TEST_SUITE

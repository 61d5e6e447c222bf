#include "sqfit/gradcheck.hpp"

#include <cmath>

#include "sqfit/rng.hpp"
#include "sqfit/sq_core.hpp"

namespace sqfit {

namespace {

/// Radial distance as a function of the 14-vector [params(11), point(3)].
double radial_of(const Eigen::Matrix<double, 14, 1>& v) {
    const SuperquadricParams q = SuperquadricParams::from_vector(v.head<11>());
    return radial_distance(q, world_to_sq(q, v.tail<3>()));
}

}  // namespace

bool gradient_check(int n_configs, std::uint64_t seed, std::ostream& log) {
    Rng rng(seed);
    int produced = 0;
    double worst = 0.0;
    bool ok = true;

    while (produced < n_configs) {
        SuperquadricParams q;
        for (int i = 0; i < 3; ++i) q.size(i) = rng.uniform(0.2, 3.0);
        for (int i = 0; i < 2; ++i) q.shape(i) = rng.uniform(0.1, 1.9);
        for (int i = 0; i < 3; ++i) q.position(i) = rng.uniform(-2.0, 2.0);
        for (int i = 0; i < 3; ++i) q.orientation(i) = rng.uniform(-M_PI, M_PI);

        Eigen::Vector3d dir(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0));
        if (dir.norm() < 1e-6) continue;
        const Eigen::Vector3d local = rng.uniform(0.2, 10.0) * dir.normalized();

        const double F = implicit_value(q, local);
        if (F < 0.1 || F > 10.0) continue;
        ++produced;

        const Eigen::Vector3d world = sq_to_world(q, local);
        const RadialGradient analytic = radial_distance_gradient(q, world);

        Eigen::Matrix<double, 14, 1> x;
        x << q.to_vector(), world;
        Eigen::Matrix<double, 14, 1> g_analytic;
        g_analytic << analytic.wrt_params, analytic.wrt_point;

        const double h = 1e-6;
        double config_err = 0.0;
        for (int i = 0; i < 14; ++i) {
            Eigen::Matrix<double, 14, 1> xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fd = (radial_of(xp) - radial_of(xm)) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(g_analytic(i)), std::abs(fd)});
            config_err = std::max(config_err, std::abs(g_analytic(i) - fd) / scale);
        }
        worst = std::max(worst, config_err);
        if (config_err >= 1e-5) {
            ok = false;
            log << "gradcheck FAIL: config " << produced << " relative error " << config_err
                << "\n";
        }
    }

    log << "gradcheck: " << n_configs << " configurations, worst relative error " << worst
        << (ok ? " [ok]" : " [FAILED]") << "\n";
    return ok;
}

}  // namespace sqfit

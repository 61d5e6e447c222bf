// Compares the OpenMP kernels against their serial reference paths and
// checks that both produce bit-identical results.

#include <omp.h>

#include <chrono>
#include <cstdio>

#include "sqfit/fitting.hpp"
#include "sqfit/metrics.hpp"
#include "sqfit/optim.hpp"
#include "sqfit/simulator.hpp"

using namespace sqfit;

namespace {

template <typename F>
double time_ms(F&& fn, int repeats) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", omp_get_max_threads());

    SceneConfig cfg;
    cfg.samples_per_observation = 2000;  // larger residual block than the defaults
    const Scene scene = generate_scene(cfg, 42);
    const ObservationSet& obs = scene.observations;

    const FitOptions opts;
    PipelineState state = cold_start(obs, opts);
    const Stage1Result s1 = stage1_triangulation(obs);
    state.params.position = s1.position;
    state.depths = to_separate(s1.depths, obs);

    // residuals_g4 over P*N samples
    {
        Eigen::VectorXd rs, rp;
        const double ts = time_ms([&] { rs = residuals_g4(state.params, obs, state.depths, Exec::serial); }, 20);
        const double tp = time_ms([&] { rp = residuals_g4(state.params, obs, state.depths, Exec::parallel); }, 20);
        report("residuals_g4", ts, tp, rs == rp);
    }

    // analytic jacobian of residuals_g5
    {
        Eigen::MatrixXd js, jp;
        const double ts = time_ms([&] { js = residuals_g5_jacobian(state.params, obs, state.depths, Exec::serial); }, 10);
        const double tp = time_ms([&] { jp = residuals_g5_jacobian(state.params, obs, state.depths, Exec::parallel); }, 10);
        report("residuals_g5_jacobian", ts, tp, js == jp);
    }

    // finite-difference jacobian columns of the numeric cost
    {
        const ResidualFn cost = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd r(1);
            r(0) = cost_g1(SuperquadricParams::from_vector(v.head<11>()), obs);
            return r;
        };
        ParameterVector pv = sq_parameter_vector(scene.gt);
        Eigen::MatrixXd js, jp;
        const double ts = time_ms([&] { js = numeric_jacobian(cost, pv, 1e-6, Exec::serial); }, 3);
        const double tp = time_ms([&] { jp = numeric_jacobian(cost, pv, 1e-6, Exec::parallel); }, 3);
        report("numeric_jacobian (cost)", ts, tp, js == jp);
    }

    // Monte-Carlo 3D IOU
    {
        SuperquadricParams other = scene.gt;
        other.position += Eigen::Vector3d(0.5, 0.0, 0.0);
        double vs = 0.0, vp = 0.0;
        const double ts = time_ms([&] { vs = iou3d(scene.gt, other, 1000000, 7, Exec::serial); }, 3);
        const double tp = time_ms([&] { vp = iou3d(scene.gt, other, 1000000, 7, Exec::parallel); }, 3);
        report("iou3d (1e6 samples)", ts, tp, vs == vp);
    }

    return 0;
}

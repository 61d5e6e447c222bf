#include "sqfit/sq_core.hpp"

#include <cmath>

namespace sqfit {

namespace {

constexpr double kCenterGuard = 1e-12;  // norm below which the distance direction degenerates
constexpr double kImplicitFloor = 1e-12;  // F clamp before the negative-power evaluation
constexpr double kTinyBase = 1e-300;      // treat power bases below this as exactly zero

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

struct ImplicitTerms {
    double mx, my, mz;  // |t_i| / a_i
    double A, B, u;     // A = mx^(2/e2), B = my^(2/e2), u = A + B
    double W, Z;        // W = u^(e2/e1), Z = mz^(2/e1)
    double F;           // W + Z
};

ImplicitTerms implicit_terms(const SuperquadricParams& q, const Eigen::Vector3d& t) {
    const double e1 = q.shape(0), e2 = q.shape(1);
    ImplicitTerms c{};
    c.mx = std::abs(t.x() / q.size(0));
    c.my = std::abs(t.y() / q.size(1));
    c.mz = std::abs(t.z() / q.size(2));
    c.A = c.mx > kTinyBase ? std::pow(c.mx, 2.0 / e2) : 0.0;
    c.B = c.my > kTinyBase ? std::pow(c.my, 2.0 / e2) : 0.0;
    c.u = c.A + c.B;
    c.W = c.u > kTinyBase ? std::pow(c.u, e2 / e1) : 0.0;
    c.Z = c.mz > kTinyBase ? std::pow(c.mz, 2.0 / e1) : 0.0;
    c.F = c.W + c.Z;
    return c;
}

double radial_from_terms(double norm, double F, double e1) {
    const double Fc = std::max(F, kImplicitFloor);
    return norm * (std::pow(Fc, -e1 / 2.0) - 1.0);
}

Eigen::Matrix3d rot_x(double a) {
    Eigen::Matrix3d m;
    m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return m;
}

Eigen::Matrix3d rot_y(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return m;
}

Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return m;
}

Eigen::Matrix3d drot_x(double a) {
    Eigen::Matrix3d m;
    m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
    return m;
}

Eigen::Matrix3d drot_y(double a) {
    Eigen::Matrix3d m;
    m << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
    return m;
}

Eigen::Matrix3d drot_z(double a) {
    Eigen::Matrix3d m;
    m << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
    return m;
}

}  // namespace

Eigen::Matrix<double, 11, 1> SuperquadricParams::to_vector() const {
    Eigen::Matrix<double, 11, 1> v;
    v << size, shape, position, orientation;
    return v;
}

SuperquadricParams SuperquadricParams::from_vector(const Eigen::Matrix<double, 11, 1>& v) {
    SuperquadricParams q;
    q.size = v.segment<3>(0);
    q.shape = v.segment<2>(3);
    q.position = v.segment<3>(5);
    q.orientation = v.segment<3>(8);
    return q;
}

double spow(double x, double e) {
    if (x == 0.0) return 0.0;
    return sgn(x) * std::pow(std::abs(x), e);
}

double wrap_angle(double a) {
    double x = std::fmod(a + M_PI, 2.0 * M_PI);
    if (x <= 0.0) x += 2.0 * M_PI;
    return x - M_PI;
}

Eigen::Matrix3d euler_to_rot(const Eigen::Vector3d& r) {
    return rot_z(r.z()) * rot_y(r.y()) * rot_x(r.x());
}

Eigen::Vector3d euler_from_rot(const Eigen::Matrix3d& R) {
    const double sy = -R(2, 0);
    if (std::abs(sy) > 1.0 - 1e-12) {
        // Pitch at +-pi/2: only the sum/difference of roll and yaw is
        // observable, pick roll = 0.
        const double ry = sy > 0 ? M_PI / 2.0 : -M_PI / 2.0;
        return {0.0, ry, wrap_angle(std::atan2(-R(0, 1), R(1, 1)))};
    }
    return {wrap_angle(std::atan2(R(2, 1), R(2, 2))),
            std::asin(sy),
            wrap_angle(std::atan2(R(1, 0), R(0, 0)))};
}

Eigen::Vector3d surface_point(const SuperquadricParams& params, double eta, double omega) {
    const double e1 = params.shape(0), e2 = params.shape(1);
    const double ce = spow(std::cos(eta), e1);
    const double se = spow(std::sin(eta), e1);
    const double co = spow(std::cos(omega), e2);
    const double so = spow(std::sin(omega), e2);
    return {params.size(0) * ce * co, params.size(1) * ce * so, params.size(2) * se};
}

double implicit_value(const SuperquadricParams& params, const Eigen::Vector3d& t_local) {
    return implicit_terms(params, t_local).F;
}

double radial_distance(const SuperquadricParams& params, const Eigen::Vector3d& t_local) {
    const double norm = t_local.norm();
    if (norm < kCenterGuard) throw DegeneratePoint("radial_distance: point at superquadric center");
    return radial_from_terms(norm, implicit_terms(params, t_local).F, params.shape(0));
}

double radial_distance_clamped(const SuperquadricParams& params, const Eigen::Vector3d& t_local) {
    const double norm = std::max(t_local.norm(), kCenterGuard);
    return radial_from_terms(norm, implicit_terms(params, t_local).F, params.shape(0));
}

RadialGradient radial_distance_gradient(const SuperquadricParams& params,
                                        const Eigen::Vector3d& t_world) {
    const double e1 = params.shape(0), e2 = params.shape(1);
    const Eigen::Matrix3d R = euler_to_rot(params.orientation);
    const Eigen::Vector3d offset = t_world - params.position;
    const Eigen::Vector3d t = R.transpose() * offset;

    const double norm = t.norm();
    if (norm < kCenterGuard)
        throw DegeneratePoint("radial_distance_gradient: point at superquadric center");

    const ImplicitTerms c = implicit_terms(params, t);
    const bool clamped = c.F < kImplicitFloor;
    const double Fc = std::max(c.F, kImplicitFloor);
    const double Q = std::pow(Fc, -e1 / 2.0);

    RadialGradient g;
    g.value = norm * (Q - 1.0);

    // dF/dt and dF/da in local coordinates. dF/da_i = -(t_i/a_i) dF/dt_i
    // because F depends on the axis only through |t_i|/a_i.
    Eigen::Vector3d dF_dt = Eigen::Vector3d::Zero();
    if (c.u > kTinyBase) {
        const double outer = (2.0 / e1) * std::pow(c.u, e2 / e1 - 1.0);
        if (c.mx > kTinyBase)
            dF_dt.x() = outer * std::pow(c.mx, 2.0 / e2 - 1.0) * sgn(t.x()) / params.size(0);
        if (c.my > kTinyBase)
            dF_dt.y() = outer * std::pow(c.my, 2.0 / e2 - 1.0) * sgn(t.y()) / params.size(1);
    }
    if (c.mz > kTinyBase)
        dF_dt.z() = (2.0 / e1) * std::pow(c.mz, 2.0 / e1 - 1.0) * sgn(t.z()) / params.size(2);

    const Eigen::Vector3d dF_da = -dF_dt.cwiseProduct(t).cwiseQuotient(params.size);

    // dF with respect to the two shape exponents.
    double dF_de1 = 0.0;
    if (c.u > kTinyBase) dF_de1 += c.W * std::log(c.u) * (-e2 / (e1 * e1));
    if (c.mz > kTinyBase) dF_de1 += c.Z * std::log(c.mz) * (-2.0 / (e1 * e1));

    double dF_de2 = 0.0;
    if (c.u > kTinyBase) {
        double du_de2 = 0.0;
        if (c.mx > kTinyBase) du_de2 += c.A * std::log(c.mx) * (-2.0 / (e2 * e2));
        if (c.my > kTinyBase) du_de2 += c.B * std::log(c.my) * (-2.0 / (e2 * e2));
        dF_de2 = c.W * (std::log(c.u) / e1 + (e2 / e1) * du_de2 / c.u);
    }

    // Inside the floor the distance no longer responds to F.
    const double dQ_dF = clamped ? 0.0 : -e1 / 2.0 * std::pow(Fc, -e1 / 2.0 - 1.0);
    const double dQ_de1 =
        clamped ? 0.0 : Q * (-0.5 * std::log(Fc) - (e1 / 2.0) * dF_de1 / Fc);

    const Eigen::Vector3d dG_dt = (t / norm) * (Q - 1.0) + norm * dQ_dF * dF_dt;

    g.wrt_params.segment<3>(0) = norm * dQ_dF * dF_da;
    g.wrt_params(3) = norm * dQ_de1;
    g.wrt_params(4) = norm * dQ_dF * dF_de2;

    g.wrt_point = R * dG_dt;
    g.wrt_params.segment<3>(5) = -g.wrt_point;

    const Eigen::Matrix3d Rx = rot_x(params.orientation.x());
    const Eigen::Matrix3d Ry = rot_y(params.orientation.y());
    const Eigen::Matrix3d Rz = rot_z(params.orientation.z());
    const Eigen::Matrix3d dR[3] = {Rz * Ry * drot_x(params.orientation.x()),
                                   Rz * drot_y(params.orientation.y()) * Rx,
                                   drot_z(params.orientation.z()) * Ry * Rx};
    for (int k = 0; k < 3; ++k)
        g.wrt_params(8 + k) = dG_dt.dot(dR[k].transpose() * offset);

    return g;
}

std::vector<Eigen::Vector3d> sample_surface_grid(const SuperquadricParams& params,
                                                 int n_eta, int n_omega) {
    if (n_eta < 2 || n_omega < 3)
        throw std::invalid_argument("sample_surface_grid: need n_eta >= 2 and n_omega >= 3");

    const Eigen::Matrix3d R = euler_to_rot(params.orientation);
    const double e1 = params.shape(0), e2 = params.shape(1);

    // Per-row and per-column powers; each grid point is then three multiplies.
    std::vector<double> ce(n_eta), se(n_eta), co(n_omega), so(n_omega);
    for (int i = 0; i < n_eta; ++i) {
        const double eta = -M_PI / 2.0 + M_PI * i / (n_eta - 1);
        ce[i] = spow(std::cos(eta), e1);
        se[i] = spow(std::sin(eta), e1);
    }
    for (int j = 0; j < n_omega; ++j) {
        const double omega = -M_PI + 2.0 * M_PI * j / (n_omega - 1);
        co[j] = spow(std::cos(omega), e2);
        so[j] = spow(std::sin(omega), e2);
    }

    std::vector<Eigen::Vector3d> points;
    points.reserve(static_cast<std::size_t>(n_eta) * n_omega);
    for (int i = 0; i < n_eta; ++i) {
        for (int j = 0; j < n_omega; ++j) {
            const Eigen::Vector3d local(params.size(0) * ce[i] * co[j],
                                        params.size(1) * ce[i] * so[j],
                                        params.size(2) * se[i]);
            points.push_back(R * local + params.position);
        }
    }
    return points;
}

Eigen::Vector3d world_to_sq(const SuperquadricParams& params, const Eigen::Vector3d& t_world) {
    return euler_to_rot(params.orientation).transpose() * (t_world - params.position);
}

Eigen::Vector3d sq_to_world(const SuperquadricParams& params, const Eigen::Vector3d& t_local) {
    return euler_to_rot(params.orientation) * t_local + params.position;
}

}  // namespace sqfit

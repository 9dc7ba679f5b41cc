#include "satslam/frames_dynamics.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace satslam {

double mean_motion(double altitude, double mu, double body_radius) {
    if (altitude <= 0.0 || mu <= 0.0 || body_radius <= 0.0) {
        throw DomainError("mean_motion: altitude, mu and body_radius must be positive");
    }
    const double a = body_radius + altitude;
    return std::sqrt(mu / (a * a * a));
}

double closed_orbit_vy(double x0, double nu) {
    return -2.0 * nu * x0;
}

RelativeState cw_closed_form(const RelativeState& s0, double nu, double t) {
    const double th = nu * t;
    const double s = std::sin(th);
    const double c = std::cos(th);

    const double x0 = s0.r.x(), y0 = s0.r.y(), z0 = s0.r.z();
    const double vx0 = s0.v.x(), vy0 = s0.v.y(), vz0 = s0.v.z();

    RelativeState out;
    out.r.x() = (4.0 - 3.0 * c) * x0 + (s / nu) * vx0 + (2.0 / nu) * (1.0 - c) * vy0;
    out.r.y() = 6.0 * (s - th) * x0 + y0 - (2.0 / nu) * (1.0 - c) * vx0 +
                ((4.0 * s - 3.0 * th) / nu) * vy0;
    out.r.z() = c * z0 + (s / nu) * vz0;
    out.v.x() = 3.0 * nu * s * x0 + c * vx0 + 2.0 * s * vy0;
    out.v.y() = -6.0 * nu * (1.0 - c) * x0 - 2.0 * s * vx0 + (4.0 * c - 3.0) * vy0;
    out.v.z() = -nu * s * z0 + c * vz0;
    out.t = s0.t + t;
    return out;
}

// Square root of a PSD matrix for sampling; tolerates singular inputs.
static Mat3 psd_sqrt(const Mat3& m) {
    if (m.isZero(0.0)) {
        return Mat3::Zero();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    return es.eigenvectors() *
           es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

std::vector<RelativeState> cw_propagate_noisy(const RelativeState& s0, const OrbitParams& p,
                                              int steps, Rng& rng) {
    std::vector<RelativeState> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(s0);

    const Mat3 noise_chol = psd_sqrt(p.sigma_w);
    for (int i = 0; i < steps; ++i) {
        RelativeState next = cw_closed_form(out.back(), p.nu, p.dt);
        Vec3 eta;
        eta.x() = rng.normal();
        eta.y() = rng.normal();
        eta.z() = rng.normal();
        const Vec3 w = noise_chol * eta;
        next.v += w * p.dt;
        next.r += 0.5 * w * p.dt * p.dt;
        out.push_back(next);
    }
    return out;
}

Mat3 pointing_rotation(const Vec3& r_ct, const Vec3& v_ct, const Vec3& r_o) {
    constexpr double kEpsPos = 1e-9;
    constexpr double kEpsCross = 1e-12;

    const Vec3 boresight = r_o - r_ct;
    const double range = boresight.norm();
    if (range <= kEpsPos) {
        throw DegenerateGeometryError("pointing_rotation: chaser coincides with observation target");
    }
    const Vec3 cross = v_ct.cross(boresight);
    const double cross_norm = cross.norm();
    if (cross_norm <= kEpsCross) {
        throw DegenerateGeometryError("pointing_rotation: velocity parallel to boresight");
    }

    Mat3 r;
    r.col(2) = boresight / range;
    r.col(1) = cross / cross_norm;
    r.col(0) = r.col(1).cross(r.col(2));
    return r;
}

Mat3 skew(const Vec3& w) {
    Mat3 m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
         -w.y(), w.x(), 0.0;
    return m;
}

Mat3 so3_exp(const Vec3& w) {
    const double th = w.norm();
    const Mat3 wx = skew(w);
    if (th < 1e-9) {
        return Mat3::Identity() + wx + 0.5 * wx * wx;
    }
    return Mat3::Identity() + (std::sin(th) / th) * wx +
           ((1.0 - std::cos(th)) / (th * th)) * wx * wx;
}

Vec3 so3_log(const Mat3& r) {
    const double tr = r.trace();
    const double cos_th = std::min(1.0, std::max(-1.0, 0.5 * (tr - 1.0)));
    const double th = std::acos(cos_th);
    Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    if (th < 1e-9) {
        return 0.5 * axis;
    }
    if (th > M_PI - 1e-6) {
        // Near pi the antisymmetric part degenerates; recover the axis from
        // the symmetric part R + I = 2(cos(th) I + (1-cos(th)) aa^T + ...).
        Mat3 sym = 0.5 * (r + Mat3::Identity());
        Vec3 a;
        int k = 0;
        sym.diagonal().maxCoeff(&k);
        a = sym.col(k) / std::sqrt(sym(k, k));
        a.normalize();
        // Fix the sign with the antisymmetric part when it is not exactly zero.
        if (axis.dot(a) < 0.0) a = -a;
        return th * a;
    }
    return (th / (2.0 * std::sin(th))) * axis;
}

Mat3 so3_right_jacobian_inverse(const Vec3& w) {
    const double th = w.norm();
    const Mat3 wx = skew(w);
    if (th < 1e-6) {
        return Mat3::Identity() + 0.5 * wx + (1.0 / 12.0) * wx * wx;
    }
    const double coef = 1.0 / (th * th) - (1.0 + std::cos(th)) / (2.0 * th * std::sin(th));
    return Mat3::Identity() + 0.5 * wx + coef * wx * wx;
}

Mat3 orthonormalize(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 out = svd.matrixU() * svd.matrixV().transpose();
    if (out.determinant() < 0.0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1.0;
        out = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return out;
}

Pose se3_retract(const Pose& p, const Tangent6& xi) {
    Pose out;
    out.rotation = p.rotation * so3_exp(xi.head<3>());
    if ((out.rotation.transpose() * out.rotation - Mat3::Identity()).norm() > 1e-9) {
        out.rotation = orthonormalize(out.rotation);
    }
    out.translation = p.translation + xi.tail<3>();
    return out;
}

Tangent6 se3_local(const Pose& p, const Pose& q) {
    Tangent6 xi;
    xi.head<3>() = so3_log(p.rotation.transpose() * q.rotation);
    xi.tail<3>() = q.translation - p.translation;
    return xi;
}

} // namespace satslam

#include "satslam/camera_sensor.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace satslam {

Vec3 world_to_camera(const Pose& p, const Vec3& l) {
    return p.rotation.transpose() * (l - p.translation);
}

namespace {

Vec2 project_camera_point(const Vec3& lc, const Intrinsics& k) {
    return {k.fx * lc.x() / lc.z() + k.cx, k.fy * lc.y() / lc.z() + k.cy};
}

} // namespace

Vec2 project(const Pose& p, const Vec3& l, const Intrinsics& k) {
    const Vec3 lc = world_to_camera(p, l);
    if (lc.z() <= kMinDepth) {
        throw BehindCameraError("project: landmark at or behind the camera plane");
    }
    return project_camera_point(lc, k);
}

std::pair<Eigen::Matrix<double, 2, 6>, Eigen::Matrix<double, 2, 3>>
project_jacobians(const Pose& p, const Vec3& l, const Intrinsics& k) {
    const Vec3 lc = world_to_camera(p, l);
    if (lc.z() <= kMinDepth) {
        throw BehindCameraError("project_jacobians: landmark at or behind the camera plane");
    }

    const double inv_z = 1.0 / lc.z();
    Eigen::Matrix<double, 2, 3> d_uv_d_lc;
    d_uv_d_lc << k.fx * inv_z, 0.0, -k.fx * lc.x() * inv_z * inv_z,
                 0.0, k.fy * inv_z, -k.fy * lc.y() * inv_z * inv_z;

    // lc(xi) = exp(-w^) R^T (l - t - dt): d lc/dw = skew(lc), d lc/ddt = -R^T.
    Eigen::Matrix<double, 3, 6> d_lc_d_xi;
    d_lc_d_xi.leftCols<3>() = skew(lc);
    d_lc_d_xi.rightCols<3>() = -p.rotation.transpose();

    return {d_uv_d_lc * d_lc_d_xi, d_uv_d_lc * p.rotation.transpose()};
}

bool visible(const Pose& p, const Vec3& l, const Intrinsics& k) {
    const Vec3 lc = world_to_camera(p, l);
    if (lc.z() <= kMinDepth) {
        return false;
    }
    const Vec2 uv = project_camera_point(lc, k);
    return uv.x() >= 0.0 && uv.x() <= k.width && uv.y() >= 0.0 && uv.y() <= k.height;
}

// Square root of a PSD matrix for sampling; tolerates singular inputs.
static Mat2 psd_sqrt(const Mat2& m) {
    if (m.isZero(0.0)) {
        return Mat2::Zero();
    }
    Eigen::SelfAdjointEigenSolver<Mat2> es(m);
    return es.eigenvectors() *
           es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

std::vector<PixelMeasurement> observe_scene(const Pose& p, const std::vector<Landmark>& scene,
                                            const Intrinsics& k, Rng& rng, int pose_index) {
    std::vector<PixelMeasurement> out;
    const Mat2 noise_chol = psd_sqrt(k.sigma_v);
    for (const Landmark& lm : scene) {
        if (!visible(p, lm.position, k)) {
            continue;
        }
        Vec2 eta;
        eta.x() = rng.normal();
        eta.y() = rng.normal();
        PixelMeasurement m;
        m.pose_index = pose_index;
        m.landmark_id = lm.id;
        m.uv = project(p, lm.position, k) + noise_chol * eta;
        out.push_back(m);
    }
    return out;
}

Vec3 back_project(const Vec2& uv, double depth, const Pose& p, const Intrinsics& k) {
    if (depth <= kMinDepth) {
        throw DomainError("back_project: depth must exceed the minimum camera depth");
    }
    const Vec3 lc(depth * (uv.x() - k.cx) / k.fx, depth * (uv.y() - k.cy) / k.fy, depth);
    return p.rotation * lc + p.translation;
}

} // namespace satslam

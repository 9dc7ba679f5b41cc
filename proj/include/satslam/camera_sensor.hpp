#pragma once

#include <utility>
#include <vector>

#include "satslam/frames_dynamics.hpp"
#include "satslam/rng.hpp"
#include "satslam/types.hpp"

namespace satslam {

struct Intrinsics {
    double fx = 0.0, fy = 0.0;      ///< focal lengths [px]
    double cx = 0.0, cy = 0.0;      ///< principal point [px]
    double width = 0.0, height = 0.0;
    Mat2 sigma_v = Mat2::Zero();    ///< measurement covariance [px^2]
};

struct Landmark {
    int id = 0;
    Vec3 position = Vec3::Zero();  ///< target-frame coordinates [m]
};

struct PixelMeasurement {
    int pose_index = 0;
    int landmark_id = 0;
    Vec2 uv = Vec2::Zero();
};

/// Minimum admissible depth in front of the camera [m].
constexpr double kMinDepth = 0.01;

/// Landmark expressed in camera axes: R^T (l - r).
Vec3 world_to_camera(const Pose& p, const Vec3& l);

/// Pinhole projection. Throws BehindCameraError when the camera-frame depth
/// is not above kMinDepth (signals non-visibility, not corruption).
Vec2 project(const Pose& p, const Vec3& l, const Intrinsics& k);

/// Jacobians of the projection w.r.t. the pose local coordinates (2x6,
/// ordered rotation then translation, consistent with se3_retract) and the
/// landmark position (2x3). Throws BehindCameraError like project.
std::pair<Eigen::Matrix<double, 2, 6>, Eigen::Matrix<double, 2, 3>>
project_jacobians(const Pose& p, const Vec3& l, const Intrinsics& k);

/// True iff the landmark is in front of the camera and its noise-free
/// projection falls inside [0, width] x [0, height].
bool visible(const Pose& p, const Vec3& l, const Intrinsics& k);

/// One noisy measurement per visible landmark; noise drawn from N(0, sigma_v).
/// Measurements are not clamped to image bounds after noise.
std::vector<PixelMeasurement> observe_scene(const Pose& p, const std::vector<Landmark>& scene,
                                            const Intrinsics& k, Rng& rng,
                                            int pose_index = 0);

/// Target-frame point whose camera-frame coordinates are
/// (depth (u-cx)/fx, depth (v-cy)/fy, depth). Exact inverse of project given
/// the matching depth and pose.
Vec3 back_project(const Vec2& uv, double depth, const Pose& p, const Intrinsics& k);

} // namespace satslam

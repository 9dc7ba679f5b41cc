#pragma once

#include <vector>

#include "satslam/rng.hpp"
#include "satslam/types.hpp"

namespace satslam {

/// Relative translational state of the chaser w.r.t. the target, expressed in
/// the rotating target frame. Axes: x radial, y along-track, z cross-track.
struct RelativeState {
    Vec3 r = Vec3::Zero();  ///< position [m]
    Vec3 v = Vec3::Zero();  ///< velocity [m/s]
    double t = 0.0;         ///< epoch [s]
};

struct OrbitParams {
    double nu = 0.0;              ///< target mean motion [rad/s]
    Mat3 sigma_w = Mat3::Zero();  ///< disturbance acceleration covariance [(m/s^2)^2]
    double dt = 0.0;              ///< simulation step [s]
};

/// Rigid transform of the chaser camera in the target frame: rotation maps
/// camera-frame vectors into target-frame vectors, translation is the camera
/// position in the target frame.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
};

/// Mean motion for a circular orbit at the given altitude: sqrt(mu / (R + h)^3).
double mean_motion(double altitude, double mu, double body_radius);

/// Along-track velocity that closes the relative orbit for a given radial
/// offset: v_y = -2 nu x0.
double closed_orbit_vy(double x0, double nu);

/// Analytic state transition of the undisturbed relative-motion equations.
RelativeState cw_closed_form(const RelativeState& s0, double nu, double t);

/// Propagates `steps` steps of length p.dt. Each step applies the closed-form
/// transition plus a piecewise-constant disturbance acceleration drawn from
/// N(0, sigma_w): velocity += w*dt, position += w*dt^2/2. Returns steps+1
/// states including s0.
std::vector<RelativeState> cw_propagate_noisy(const RelativeState& s0, const OrbitParams& p,
                                              int steps, Rng& rng);

/// Camera-pointing attitude: column 3 is the unit vector from the chaser to
/// the observation target r_o, column 2 is normal to the velocity/boresight
/// plane, column 1 completes the right-handed triad.
/// Throws DegenerateGeometryError if the chaser coincides with r_o or the
/// velocity is parallel to the boresight.
Mat3 pointing_rotation(const Vec3& r_ct, const Vec3& v_ct, const Vec3& r_o);

/// Local perturbation of a pose: rotation right-multiplied by the exponential
/// of the skew of xi.head<3>(), translation incremented by xi.tail<3>().
Pose se3_retract(const Pose& p, const Tangent6& xi);

/// Inverse of se3_retract: se3_local(p, se3_retract(p, xi)) == xi for
/// ||xi_rot|| < pi.
Tangent6 se3_local(const Pose& p, const Pose& q);

Mat3 skew(const Vec3& w);

/// Rodrigues formula, exp of the skew of w.
Mat3 so3_exp(const Vec3& w);

/// Rotation log (axis-angle vector); inverse of so3_exp for angles < pi.
Vec3 so3_log(const Mat3& r);

/// Inverse right Jacobian of the SO(3) exponential at w: the derivative of
/// so3_log(so3_exp(w) so3_exp(dw)) w.r.t. dw at dw = 0.
Mat3 so3_right_jacobian_inverse(const Vec3& w);

/// Nearest rotation matrix in the Frobenius sense (SVD projection).
Mat3 orthonormalize(const Mat3& r);

} // namespace satslam

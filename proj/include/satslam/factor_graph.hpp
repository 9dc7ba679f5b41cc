#pragma once

#include <memory>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "satslam/camera_sensor.hpp"
#include "satslam/frames_dynamics.hpp"
#include "satslam/types.hpp"

namespace satslam {

enum class VarKind { Pose, Landmark };

/// PoseVar keys carry a tangent dimension of 6, LandmarkVar keys 3.
struct VariableKey {
    VarKind kind = VarKind::Pose;
    int index = 0;

    bool operator==(const VariableKey&) const = default;
    int tangent_dim() const { return kind == VarKind::Pose ? 6 : 3; }
};

inline VariableKey pose_key(int index) { return {VarKind::Pose, index}; }
inline VariableKey landmark_key(int index) { return {VarKind::Landmark, index}; }

struct PriorFactor {
    VariableKey key;
    Pose prior_pose;
    Mat6 sigma_p = Mat6::Identity();
};

struct ProjectionFactor {
    VariableKey pose_key;
    VariableKey landmark_key;
    Vec2 z = Vec2::Zero();
    Mat2 sigma_v = Mat2::Identity();
    std::shared_ptr<const Intrinsics> intrinsics;
};

using Factor = std::variant<PriorFactor, ProjectionFactor>;

/// Values for every variable of a graph, indexed by key.
struct Estimate {
    std::vector<Pose> poses;
    std::vector<Vec3> landmarks;

    const Pose& pose(VariableKey k) const { return poses.at(static_cast<std::size_t>(k.index)); }
    const Vec3& landmark(VariableKey k) const { return landmarks.at(static_cast<std::size_t>(k.index)); }
    bool covers(const class FactorGraph& g) const;
};

/// Bipartite store of variables and factors encoding the belief. Variables
/// carry initial values; factor order is preserved.
class FactorGraph {
public:
    VariableKey add_pose_variable(const Pose& init);
    VariableKey add_landmark_variable(const Vec3& init);

    /// Throws StructuralError if the factor references an unknown key.
    void add_prior(PriorFactor f);
    void add_projection(ProjectionFactor f);

    int num_poses() const { return static_cast<int>(pose_inits_.size()); }
    int num_landmarks() const { return static_cast<int>(landmark_inits_.size()); }
    int num_factors() const { return static_cast<int>(factors_.size()); }
    int tangent_dim() const { return 6 * num_poses() + 3 * num_landmarks(); }
    int residual_dim() const;

    bool has(VariableKey k) const;
    const std::vector<Factor>& factors() const { return factors_; }
    const std::vector<VariableKey>& variable_order() const { return order_; }
    const Pose& pose_init(int index) const { return pose_inits_.at(static_cast<std::size_t>(index)); }
    const Vec3& landmark_init(int index) const { return landmark_inits_.at(static_cast<std::size_t>(index)); }

    Estimate initial_estimate() const;

    /// Landmarks attached to fewer than two projection factors (their depth
    /// is weakly or not at all constrained).
    std::vector<VariableKey> weakly_constrained_landmarks() const;

private:
    std::vector<Pose> pose_inits_;
    std::vector<Vec3> landmark_inits_;
    std::vector<VariableKey> order_;
    std::vector<Factor> factors_;
};

/// Whitened linearization of a graph at an estimate. Rows follow factor
/// order (6 per prior, 2 per projection); columns follow variable insertion
/// order. Factors behind the camera at the linearization point occupy zero
/// rows and are counted in skipped_factors.
struct LinearSystem {
    Eigen::SparseMatrix<double> jacobian;
    Eigen::VectorXd residual;
    std::vector<VariableKey> column_order;
    std::vector<int> column_offsets;
    int skipped_factors = 0;

    int column_offset_of(VariableKey k) const;
};

LinearSystem linearize(const FactorGraph& g, const Estimate& e);

struct SolverConfig {
    int max_iterations = 100;
    double relative_cost_tol = 1e-6;
    double step_tol = 1e-8;
    double lambda_init = 1e-4;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double lambda_max = 1e12;
};

struct SolveResult {
    Estimate estimate;
    double final_cost = 0.0;
    int iterations = 0;
    int skipped_factors = 0;
    std::vector<double> cost_history;  ///< cost after each accepted step
};

/// Levenberg-Marquardt on the manifold (poses via se3_retract, landmarks
/// additive). Cost is 0.5 * ||whitened residual||^2 and is non-increasing
/// across accepted steps. Throws RankDeficiencyError when the normal
/// equations at the initial estimate are singular.
SolveResult optimize_map(const FactorGraph& g, const Estimate& init,
                         const SolverConfig& cfg = SolverConfig{});

/// Lambda = A^T A in the column order of the linear system.
Eigen::SparseMatrix<double> information_matrix(const LinearSystem& ls);

/// Log-determinant via sparse Cholesky (sum of 2 ln diag L); never forms the
/// determinant. Throws SingularInformationError when the factorization fails.
double log_det(const Eigen::SparseMatrix<double>& m);

/// The key's diagonal block of Lambda^{-1} at the estimate: 3x3 for
/// landmarks; for poses the 6x6 local block with the rotation part mapped to
/// yaw-pitch-roll coordinates.
Eigen::MatrixXd marginal_covariance(const FactorGraph& g, const Estimate& e, VariableKey key);

/// Marginal blocks for several keys sharing one factorization.
std::vector<Eigen::MatrixXd> marginal_covariances(const FactorGraph& g, const Estimate& e,
                                                  const std::vector<VariableKey>& keys);

/// Yaw-pitch-roll (z-y-x) angles of a rotation: R = Rz(yaw) Ry(pitch) Rx(roll).
Vec3 yaw_pitch_roll(const Mat3& r);

Mat3 rotation_from_ypr(const Vec3& ypr);

/// Derivative of yaw_pitch_roll(r * exp(skew(w))) w.r.t. w at w = 0.
Mat3 ypr_rate_jacobian(const Mat3& r);

} // namespace satslam

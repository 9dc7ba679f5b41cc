#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "satslam/factor_graph.hpp"

namespace satslam {

struct PlannerConfig {
    int m_candidates = 10;
    Vec3 box_lower = Vec3(-1.2, -2.0, -2.0);  ///< sampling box for observation targets [m]
    Vec3 box_upper = Vec3(2.5, 2.0, 5.0);
    int horizon = 12;
    std::uint64_t seed = 0;
    /// 0 keeps the maximum-likelihood (noise-free) predicted measurements.
    /// n > 0 averages the reward over n sampled measurement sets, each scored
    /// after a short MAP refit of the augmented graph.
    int num_measurement_samples = 0;
    bool parallel = true;
};

constexpr double kInfeasibleReward = -std::numeric_limits<double>::infinity();

/// An observation target with the pose trajectory and predicted measurements
/// it induces. Predicted measurements use pose_index = step within the plan
/// (0-based) and landmark_id = landmark variable index in the base graph.
struct CandidatePlan {
    Vec3 target = Vec3::Zero();
    std::vector<Pose> poses;
    std::vector<PixelMeasurement> predicted;
    double reward = kInfeasibleReward;
};

struct BeliefSummary {
    double logdet_lambda = 0.0;
    int tangent_dim = 0;
};

/// A landmark of the current map: graph variable index plus estimated position.
struct MappedLandmark {
    int key_index = 0;
    Vec3 position = Vec3::Zero();
};

struct CandidateDiagnostics {
    int predicted_count = 0;
    int skipped_factors = 0;
    bool feasible = false;
};

struct PlanResult {
    Vec3 target = Vec3::Zero();
    int chosen_index = -1;
    std::vector<double> rewards;
    std::vector<CandidateDiagnostics> diagnostics;
    BeliefSummary prior;
};

/// M i.i.d. uniform samples inside the config box.
std::vector<Vec3> sample_targets(const PlannerConfig& cfg, Rng& rng);

/// Noise-free relative states at the next `horizon` steps with camera
/// attitudes pointing at `target`. Throws DegenerateGeometryError naming the
/// offending step.
std::vector<Pose> predict_plan(const RelativeState& s_k, double nu, double dt, int horizon,
                               const Vec3& target);

/// Noise-free projections of the mapped landmarks visible from each pose.
std::vector<PixelMeasurement> predict_measurements(const std::vector<Pose>& poses,
                                                   const std::vector<MappedLandmark>& map_estimate,
                                                   const Intrinsics& k);

/// base + horizon pose variables at the predicted poses + one projection
/// factor per predicted measurement. The base graph is not modified; no new
/// landmark variables are created.
std::pair<FactorGraph, Estimate> augment(const FactorGraph& base, const CandidatePlan& plan,
                                         const Estimate& base_estimate,
                                         const std::shared_ptr<const Intrinsics>& intrinsics);

/// Information gain between the prior belief and an augmented posterior:
/// -(n'/2) ln(2 pi e) + (post_logdet - prior_logdet)/2 with
/// n' = post_dim - prior_dim.
double info_gain(const BeliefSummary& prior, double post_logdet, int post_dim);

/// Differential entropy of an n-dimensional Gaussian with the given
/// covariance log-determinant.
double entropy_gaussian(int dim, double logdet_sigma);

/// Samples M observation targets, scores each by the expected information
/// gain of its augmented belief, and returns the best one. Candidates whose
/// augmented information matrix is singular (or whose pointing geometry
/// degenerates) score -inf; ties break toward the lowest candidate index.
/// Throws NoInformativePlanError when every candidate is infeasible.
PlanResult plan_active(const FactorGraph& base, const Estimate& base_estimate,
                       const RelativeState& s_k, double nu, double dt, const PlannerConfig& cfg,
                       const std::shared_ptr<const Intrinsics>& intrinsics, Rng& rng);

/// Scores an explicit candidate target list (the core of plan_active).
PlanResult evaluate_candidates(const FactorGraph& base, const Estimate& base_estimate,
                               const RelativeState& s_k, double nu, double dt,
                               const std::vector<Vec3>& targets, const PlannerConfig& cfg,
                               const std::shared_ptr<const Intrinsics>& intrinsics, Rng& rng);

} // namespace satslam

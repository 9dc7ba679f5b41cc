#include "satslam/belief_planner.hpp"

#include <cmath>
#include <future>
#include <string>

#include <Eigen/Cholesky>

namespace satslam {

std::vector<Vec3> sample_targets(const PlannerConfig& cfg, Rng& rng) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(cfg.m_candidates));
    for (int m = 0; m < cfg.m_candidates; ++m) {
        Vec3 t;
        for (int a = 0; a < 3; ++a) {
            t(a) = rng.uniform(cfg.box_lower(a), cfg.box_upper(a));
        }
        out.push_back(t);
    }
    return out;
}

std::vector<Pose> predict_plan(const RelativeState& s_k, double nu, double dt, int horizon,
                               const Vec3& target) {
    std::vector<Pose> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int i = 1; i <= horizon; ++i) {
        const RelativeState s = cw_closed_form(s_k, nu, i * dt);
        Pose p;
        try {
            p.rotation = pointing_rotation(s.r, s.v, target);
        } catch (const DegenerateGeometryError& err) {
            throw DegenerateGeometryError(std::string(err.what()) + " at plan step " +
                                          std::to_string(i));
        }
        p.translation = s.r;
        out.push_back(p);
    }
    return out;
}

std::vector<PixelMeasurement> predict_measurements(const std::vector<Pose>& poses,
                                                   const std::vector<MappedLandmark>& map_estimate,
                                                   const Intrinsics& k) {
    std::vector<PixelMeasurement> out;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        for (const MappedLandmark& lm : map_estimate) {
            if (!visible(poses[i], lm.position, k)) {
                continue;
            }
            PixelMeasurement m;
            m.pose_index = static_cast<int>(i);
            m.landmark_id = lm.key_index;
            m.uv = project(poses[i], lm.position, k);
            out.push_back(m);
        }
    }
    return out;
}

std::pair<FactorGraph, Estimate> augment(const FactorGraph& base, const CandidatePlan& plan,
                                         const Estimate& base_estimate,
                                         const std::shared_ptr<const Intrinsics>& intrinsics) {
    FactorGraph graph = base;
    Estimate estimate = base_estimate;

    std::vector<VariableKey> new_keys;
    new_keys.reserve(plan.poses.size());
    for (const Pose& p : plan.poses) {
        new_keys.push_back(graph.add_pose_variable(p));
        estimate.poses.push_back(p);
    }

    for (const PixelMeasurement& m : plan.predicted) {
        if (m.pose_index < 0 || m.pose_index >= static_cast<int>(new_keys.size())) {
            throw StructuralError("augment: predicted measurement references an invalid plan step");
        }
        const VariableKey lm_key = landmark_key(m.landmark_id);
        if (!base.has(lm_key)) {
            throw StructuralError("augment: predicted measurement references unknown landmark " +
                                  std::to_string(m.landmark_id));
        }
        ProjectionFactor f;
        f.pose_key = new_keys[static_cast<std::size_t>(m.pose_index)];
        f.landmark_key = lm_key;
        f.z = m.uv;
        f.sigma_v = intrinsics->sigma_v;
        f.intrinsics = intrinsics;
        graph.add_projection(std::move(f));
    }
    return {std::move(graph), std::move(estimate)};
}

double entropy_gaussian(int dim, double logdet_sigma) {
    if (dim == 0) {
        return 0.0;
    }
    return 0.5 * dim * std::log(2.0 * M_PI * M_E) + 0.5 * logdet_sigma;
}

double info_gain(const BeliefSummary& prior, double post_logdet, int post_dim) {
    const int n_prime = post_dim - prior.tangent_dim;
    return -0.5 * n_prime * std::log(2.0 * M_PI * M_E) +
           0.5 * (post_logdet - prior.logdet_lambda);
}

namespace {

struct CandidateScore {
    double reward = kInfeasibleReward;
    CandidateDiagnostics diagnostics;
};

double reward_of_augmented(const FactorGraph& graph, const Estimate& estimate,
                           const BeliefSummary& prior, CandidateDiagnostics& diag) {
    const LinearSystem ls = linearize(graph, estimate);
    diag.skipped_factors = ls.skipped_factors;
    const double logdet = log_det(information_matrix(ls));
    return info_gain(prior, logdet, graph.tangent_dim());
}

CandidateScore score_candidate(const FactorGraph& base, const Estimate& base_estimate,
                               const RelativeState& s_k, double nu, double dt,
                               const Vec3& target, const PlannerConfig& cfg,
                               const std::vector<MappedLandmark>& map_estimate,
                               const std::shared_ptr<const Intrinsics>& intrinsics,
                               const BeliefSummary& prior, std::uint64_t sample_seed) {
    CandidateScore score;
    CandidatePlan plan;
    plan.target = target;
    try {
        plan.poses = predict_plan(s_k, nu, dt, cfg.horizon, target);
    } catch (const DegenerateGeometryError&) {
        return score;
    }
    plan.predicted = predict_measurements(plan.poses, map_estimate, *intrinsics);
    score.diagnostics.predicted_count = static_cast<int>(plan.predicted.size());

    try {
        if (cfg.num_measurement_samples <= 0) {
            auto [graph, estimate] = augment(base, plan, base_estimate, intrinsics);
            score.reward = reward_of_augmented(graph, estimate, prior, score.diagnostics);
        } else {
            // Sampled-measurement variant: noise only matters through the MAP
            // refit, since the Jacobians at a fixed linearization point do not
            // depend on the measurement values.
            Rng sample_rng(sample_seed);
            const Mat2 noise_chol = Eigen::LLT<Mat2>(intrinsics->sigma_v).matrixL();
            double sum = 0.0;
            for (int s = 0; s < cfg.num_measurement_samples; ++s) {
                CandidatePlan noisy = plan;
                for (PixelMeasurement& m : noisy.predicted) {
                    Vec2 eta;
                    eta.x() = sample_rng.normal();
                    eta.y() = sample_rng.normal();
                    m.uv += noise_chol * eta;
                }
                auto [graph, estimate] = augment(base, noisy, base_estimate, intrinsics);
                const SolveResult solved = optimize_map(graph, estimate);
                sum += reward_of_augmented(graph, solved.estimate, prior, score.diagnostics);
            }
            score.reward = sum / cfg.num_measurement_samples;
        }
        score.diagnostics.feasible = std::isfinite(score.reward);
    } catch (const SingularInformationError&) {
        score.reward = kInfeasibleReward;
    } catch (const RankDeficiencyError&) {
        score.reward = kInfeasibleReward;
    }
    return score;
}

} // namespace

PlanResult evaluate_candidates(const FactorGraph& base, const Estimate& base_estimate,
                               const RelativeState& s_k, double nu, double dt,
                               const std::vector<Vec3>& targets, const PlannerConfig& cfg,
                               const std::shared_ptr<const Intrinsics>& intrinsics, Rng& rng) {
    PlanResult result;

    {
        const LinearSystem ls = linearize(base, base_estimate);
        result.prior.logdet_lambda = log_det(information_matrix(ls));
        result.prior.tangent_dim = base.tangent_dim();
    }

    std::vector<MappedLandmark> map_estimate;
    map_estimate.reserve(base_estimate.landmarks.size());
    for (std::size_t i = 0; i < base_estimate.landmarks.size(); ++i) {
        map_estimate.push_back({static_cast<int>(i), base_estimate.landmarks[i]});
    }

    // Per-candidate seeds are drawn up front so parallel evaluation stays
    // deterministic.
    std::vector<std::uint64_t> sample_seeds;
    sample_seeds.reserve(targets.size());
    for (std::size_t m = 0; m < targets.size(); ++m) {
        sample_seeds.push_back(rng.raw());
    }

    std::vector<CandidateScore> scores(targets.size());
    auto evaluate = [&](std::size_t m) {
        scores[m] = score_candidate(base, base_estimate, s_k, nu, dt, targets[m], cfg,
                                    map_estimate, intrinsics, result.prior, sample_seeds[m]);
    };
    if (cfg.parallel && targets.size() > 1) {
        std::vector<std::future<void>> futures;
        futures.reserve(targets.size());
        for (std::size_t m = 0; m < targets.size(); ++m) {
            futures.push_back(std::async(std::launch::async, evaluate, m));
        }
        for (auto& f : futures) {
            f.get();
        }
    } else {
        for (std::size_t m = 0; m < targets.size(); ++m) {
            evaluate(m);
        }
    }

    result.rewards.reserve(scores.size());
    result.diagnostics.reserve(scores.size());
    for (std::size_t m = 0; m < scores.size(); ++m) {
        result.rewards.push_back(scores[m].reward);
        result.diagnostics.push_back(scores[m].diagnostics);
        if (std::isfinite(scores[m].reward) &&
            (result.chosen_index < 0 ||
             scores[m].reward > result.rewards[static_cast<std::size_t>(result.chosen_index)])) {
            result.chosen_index = static_cast<int>(m);
        }
    }
    if (result.chosen_index < 0) {
        throw NoInformativePlanError("plan_active: every candidate is infeasible");
    }
    result.target = targets[static_cast<std::size_t>(result.chosen_index)];
    return result;
}

PlanResult plan_active(const FactorGraph& base, const Estimate& base_estimate,
                       const RelativeState& s_k, double nu, double dt, const PlannerConfig& cfg,
                       const std::shared_ptr<const Intrinsics>& intrinsics, Rng& rng) {
    const std::vector<Vec3> targets = sample_targets(cfg, rng);
    return evaluate_candidates(base, base_estimate, s_k, nu, dt, targets, cfg, intrinsics, rng);
}

} // namespace satslam

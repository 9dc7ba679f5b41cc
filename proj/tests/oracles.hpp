// Independent reference implementations used only by the test suites:
// a fixed-step RK4 integrator for the relative-motion ODEs, central finite
// differences, and dense linear-algebra counterparts of the sparse paths.
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "satslam/belief_planner.hpp"
#include "satslam/factor_graph.hpp"
#include "satslam/frames_dynamics.hpp"

namespace satslam::test {

// RK4 on the first-order system [r; v], with the relative-motion acceleration
// a(r, v) = (3 nu^2 x + 2 nu vy, -2 nu vx, -nu^2 z) + w(t).
inline RelativeState rk4_relative_motion(const RelativeState& s0, double nu, double t_end,
                                         double dt,
                                         const std::function<Vec3(double)>& disturbance = {}) {
    auto accel = [&](const Vec3& r, const Vec3& v, double t) {
        Vec3 a(3.0 * nu * nu * r.x() + 2.0 * nu * v.y(),
               -2.0 * nu * v.x(),
               -nu * nu * r.z());
        if (disturbance) {
            a += disturbance(t);
        }
        return a;
    };

    Vec3 r = s0.r;
    Vec3 v = s0.v;
    double t = 0.0;
    while (t < t_end - 1e-12) {
        const double h = std::min(dt, t_end - t);
        const Vec3 k1r = v;
        const Vec3 k1v = accel(r, v, t);
        const Vec3 k2r = v + 0.5 * h * k1v;
        const Vec3 k2v = accel(r + 0.5 * h * k1r, v + 0.5 * h * k1v, t + 0.5 * h);
        const Vec3 k3r = v + 0.5 * h * k2v;
        const Vec3 k3v = accel(r + 0.5 * h * k2r, v + 0.5 * h * k2v, t + 0.5 * h);
        const Vec3 k4r = v + h * k3v;
        const Vec3 k4v = accel(r + h * k3r, v + h * k3v, t + h);
        r += (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += h;
    }
    RelativeState out;
    out.r = r;
    out.v = v;
    out.t = s0.t + t_end;
    return out;
}

// Central-difference Jacobian of a vector function of a vector argument.
inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

inline double dense_log_det(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    return Eigen::PartialPivLU<Eigen::MatrixXd>(m).matrixLU().diagonal().array().abs().log().sum();
}

// Random rotation via the exponential of a random axis-angle vector.
inline Mat3 random_rotation(Rng& rng, double max_angle = M_PI * 0.9) {
    Vec3 axis;
    axis.x() = rng.normal();
    axis.y() = rng.normal();
    axis.z() = rng.normal();
    axis.normalize();
    return so3_exp(axis * rng.uniform(0.0, max_angle));
}

inline Vec3 random_vec3(Rng& rng, double scale) {
    Vec3 v;
    v.x() = rng.uniform(-scale, scale);
    v.y() = rng.uniform(-scale, scale);
    v.z() = rng.uniform(-scale, scale);
    return v;
}

inline Intrinsics table_camera() {
    Intrinsics k;
    k.fx = 256.0;
    k.fy = 256.0;
    k.cx = 256.0;
    k.cy = 256.0;
    k.width = 512.0;
    k.height = 512.0;
    k.sigma_v = 4.0 * Mat2::Identity();
    return k;
}

inline Mat3 look_at(const Vec3& from, const Vec3& target, const Vec3& up = Vec3(0, 0, 1)) {
    Mat3 r;
    r.col(2) = (target - from).normalized();
    r.col(0) = up.cross(r.col(2)).normalized();
    r.col(1) = r.col(2).cross(r.col(0));
    return r;
}

struct ToyProblem {
    FactorGraph graph;
    Estimate truth;
    std::shared_ptr<const Intrinsics> intrinsics;
};

// Small generative bundle-adjustment problem: landmarks clustered near the
// origin, poses on an arc of radius ~6 looking at the cluster, priors on the
// first two poses, noisy projections everywhere a landmark is visible.
// Initial values are the generative ones perturbed by init_perturb. The
// factor noise model stays at the nominal 2 px; sigma_px only scales the
// generative measurement noise.
inline ToyProblem make_toy_ba(int n_poses, int n_landmarks, double sigma_px, double init_perturb,
                              Rng& rng, bool with_priors = true) {
    ToyProblem toy;
    const Intrinsics cam = table_camera();
    toy.intrinsics = std::make_shared<Intrinsics>(cam);

    std::vector<Vec3> landmarks;
    for (int j = 0; j < n_landmarks; ++j) {
        landmarks.push_back(Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                 rng.uniform(-1.0, 1.0)));
    }
    std::vector<Pose> poses;
    for (int i = 0; i < n_poses; ++i) {
        const double angle = -0.5 + 1.0 * i / std::max(1, n_poses - 1);
        Pose p;
        p.translation = Vec3(6.0 * std::cos(angle), 6.0 * std::sin(angle), 0.5 * std::sin(angle));
        p.rotation = look_at(p.translation, Vec3::Zero());
        poses.push_back(p);
    }

    for (const Pose& p : poses) {
        Tangent6 xi;
        for (int j = 0; j < 6; ++j) {
            xi(j) = init_perturb * rng.normal();
        }
        toy.graph.add_pose_variable(se3_retract(p, xi));
    }
    for (const Vec3& l : landmarks) {
        Vec3 noise;
        noise.x() = init_perturb * rng.normal();
        noise.y() = init_perturb * rng.normal();
        noise.z() = init_perturb * rng.normal();
        toy.graph.add_landmark_variable(l + noise);
    }

    if (with_priors) {
        for (int i = 0; i < 2 && i < n_poses; ++i) {
            PriorFactor prior;
            prior.key = pose_key(i);
            prior.prior_pose = poses[static_cast<std::size_t>(i)];
            prior.sigma_p = 1e-6 * Mat6::Identity();
            toy.graph.add_prior(std::move(prior));
        }
    }
    for (int i = 0; i < n_poses; ++i) {
        for (int j = 0; j < n_landmarks; ++j) {
            const Pose& p = poses[static_cast<std::size_t>(i)];
            const Vec3& l = landmarks[static_cast<std::size_t>(j)];
            if (!visible(p, l, cam)) {
                continue;
            }
            ProjectionFactor f;
            f.pose_key = pose_key(i);
            f.landmark_key = landmark_key(j);
            Vec2 eta;
            eta.x() = sigma_px * rng.normal();
            eta.y() = sigma_px * rng.normal();
            f.z = project(p, l, cam) + eta;
            f.sigma_v = cam.sigma_v;
            f.intrinsics = toy.intrinsics;
            toy.graph.add_projection(std::move(f));
        }
    }

    toy.truth.poses = poses;
    toy.truth.landmarks = landmarks;
    return toy;
}

// Constructed planner scenario: a landmark-rich cluster and a sparse cluster
// on opposite sides of the chaser's line of sight, both mapped in the base
// graph. Pointing at target_rich predicts tracks of ~20 landmarks, pointing
// at target_poor only sparse_count of them. With fewer than 3 landmarks per
// view the predicted poses are underconstrained and the candidate's
// information matrix is exactly singular.
struct TwoClusterScenario {
    FactorGraph graph;
    Estimate estimate;
    RelativeState s_k;
    double nu = 0.0;
    double dt = 0.0;
    Vec3 target_rich = Vec3::Zero();
    Vec3 target_poor = Vec3::Zero();
    std::shared_ptr<const Intrinsics> intrinsics;
};

inline TwoClusterScenario make_two_cluster_scenario(Rng& rng, int sparse_count = 3) {
    TwoClusterScenario sc;
    sc.nu = 1.0948e-3;
    sc.dt = 90.0;
    sc.intrinsics = std::make_shared<Intrinsics>(table_camera());
    sc.target_rich = Vec3(0.0, 0.0, 3.0);
    sc.target_poor = Vec3(0.0, 0.0, -3.0);

    std::vector<Vec3> landmarks;
    for (int j = 0; j < 20; ++j) {
        landmarks.push_back(sc.target_rich + 0.3 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    }
    for (int j = 0; j < sparse_count; ++j) {
        landmarks.push_back(sc.target_poor + 0.5 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    }

    // Base poses on the chaser orbit before t_k, all looking at the midpoint
    // between the clusters so both carry measurements in the base graph and
    // the graph stays connected to the priors.
    sc.s_k.r = Vec3(0.5, 6.0, 0.0);
    sc.s_k.v = Vec3(0.0, closed_orbit_vy(0.5, sc.nu), 0.002);
    std::vector<Pose> base_poses;
    for (int i = 4; i >= 1; --i) {
        const RelativeState s = cw_closed_form(sc.s_k, sc.nu, -i * sc.dt);
        Pose p;
        p.translation = s.r;
        p.rotation = look_at(s.r, Vec3::Zero());
        base_poses.push_back(p);
    }

    for (const Pose& p : base_poses) {
        sc.graph.add_pose_variable(p);
    }
    for (const Vec3& l : landmarks) {
        Vec3 noise;
        noise.x() = 0.01 * rng.normal();
        noise.y() = 0.01 * rng.normal();
        noise.z() = 0.01 * rng.normal();
        sc.graph.add_landmark_variable(l + noise);
    }
    for (int i = 0; i < 2; ++i) {
        PriorFactor prior;
        prior.key = pose_key(i);
        prior.prior_pose = base_poses[static_cast<std::size_t>(i)];
        prior.sigma_p = 1e-6 * Mat6::Identity();
        sc.graph.add_prior(std::move(prior));
    }
    for (int i = 0; i < static_cast<int>(base_poses.size()); ++i) {
        for (int j = 0; j < static_cast<int>(landmarks.size()); ++j) {
            const Pose& p = base_poses[static_cast<std::size_t>(i)];
            const Vec3& l = landmarks[static_cast<std::size_t>(j)];
            if (!visible(p, l, *sc.intrinsics)) {
                continue;
            }
            ProjectionFactor f;
            f.pose_key = pose_key(i);
            f.landmark_key = landmark_key(j);
            Vec2 eta;
            eta.x() = 2.0 * rng.normal();
            eta.y() = 2.0 * rng.normal();
            f.z = project(p, l, *sc.intrinsics) + eta;
            f.sigma_v = sc.intrinsics->sigma_v;
            f.intrinsics = sc.intrinsics;
            sc.graph.add_projection(std::move(f));
        }
    }
    sc.estimate = sc.graph.initial_estimate();
    return sc;
}

// Reward recomputed through dense linear algebra (no sparse factorizations).
inline double dense_reward_oracle(const FactorGraph& base, const Estimate& base_est,
                                  const RelativeState& s_k, double nu, double dt, int horizon,
                                  const Vec3& target,
                                  const std::shared_ptr<const Intrinsics>& intrinsics) {
    CandidatePlan plan;
    plan.target = target;
    plan.poses = predict_plan(s_k, nu, dt, horizon, target);
    std::vector<MappedLandmark> mapped;
    for (std::size_t i = 0; i < base_est.landmarks.size(); ++i) {
        mapped.push_back({static_cast<int>(i), base_est.landmarks[i]});
    }
    plan.predicted = predict_measurements(plan.poses, mapped, *intrinsics);
    auto [aug_graph, aug_est] = augment(base, plan, base_est, intrinsics);

    const Eigen::MatrixXd a_prior(linearize(base, base_est).jacobian);
    const Eigen::MatrixXd a_post(linearize(aug_graph, aug_est).jacobian);
    const double prior_logdet = dense_log_det(a_prior.transpose() * a_prior);
    const double post_logdet = dense_log_det(a_post.transpose() * a_post);
    return info_gain({prior_logdet, base.tangent_dim()}, post_logdet, aug_graph.tangent_dim());
}

} // namespace satslam::test

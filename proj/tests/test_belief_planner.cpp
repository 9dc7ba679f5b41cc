#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "satslam/belief_planner.hpp"
#include "satslam/json_io.hpp"

using namespace satslam;
using namespace satslam::test;

namespace {

PlannerConfig table_planner(int horizon, std::uint64_t seed = 0) {
    PlannerConfig cfg;
    cfg.m_candidates = 10;
    cfg.box_lower = Vec3(-1.2, -2.0, -2.0);
    cfg.box_upper = Vec3(2.5, 2.0, 5.0);
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("sample_targets") {
    SUBCASE("samples stay inside the configured box") {
        PlannerConfig cfg = table_planner(12);
        cfg.m_candidates = 1000;
        Rng rng(1);
        for (const Vec3& t : sample_targets(cfg, rng)) {
            CHECK(t.x() >= -1.2);
            CHECK(t.x() <= 2.5);
            CHECK(t.y() >= -2.0);
            CHECK(t.y() <= 2.0);
            CHECK(t.z() >= -2.0);
            CHECK(t.z() <= 5.0);
        }
    }
    SUBCASE("degenerate box collapses to a point") {
        PlannerConfig cfg = table_planner(12);
        cfg.box_lower = cfg.box_upper = Vec3(0.1, -0.4, 2.0);
        cfg.m_candidates = 50;
        Rng rng(2);
        for (const Vec3& t : sample_targets(cfg, rng)) {
            CHECK((t - Vec3(0.1, -0.4, 2.0)).norm() == 0.0);
        }
    }
    SUBCASE("empirical mean approaches the box center") {
        PlannerConfig cfg = table_planner(12);
        cfg.m_candidates = 100000;
        Rng rng(3);
        Vec3 mean = Vec3::Zero();
        for (const Vec3& t : sample_targets(cfg, rng)) {
            mean += t;
        }
        mean /= cfg.m_candidates;
        const Vec3 center = 0.5 * (cfg.box_lower + cfg.box_upper);
        const Vec3 widths = cfg.box_upper - cfg.box_lower;
        for (int a = 0; a < 3; ++a) {
            CHECK(std::abs(mean(a) - center(a)) < 0.01 * widths(a));
        }
    }
}

TEST_CASE("predict_plan") {
    const double nu = 1.0948e-3;
    const double dt = 95.0;
    RelativeState s;
    s.r = Vec3(1.0, 6.0, 5.0);
    s.v = Vec3(0.0131, closed_orbit_vy(1.0, nu), 0.0);
    const Vec3 target(0, 0, 1.5);

    SUBCASE("single-step plan lands on the propagated state") {
        const auto poses = predict_plan(s, nu, dt, 1, target);
        REQUIRE(poses.size() == 1);
        const RelativeState next = cw_closed_form(s, nu, dt);
        CHECK((poses[0].translation - next.r).norm() == 0.0);
    }

    SUBCASE("boresights pass through the target") {
        const auto poses = predict_plan(s, nu, dt, 12, target);
        REQUIRE(poses.size() == 12);
        for (const Pose& p : poses) {
            const Vec3 boresight = p.rotation.col(2);
            CHECK(boresight.cross((target - p.translation).normalized()).norm() < 1e-9);
        }
    }

    SUBCASE("targets on the same chaser ray give identical rotations") {
        const auto a = predict_plan(s, nu, dt, 5, target);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Vec3 far_target = a[i].translation + 3.0 * (target - a[i].translation);
            const Mat3 r2 = pointing_rotation(a[i].translation,
                                              cw_closed_form(s, nu, (i + 1) * dt).v, far_target);
            CHECK((a[i].rotation - r2).norm() < 1e-12);
        }
    }
}

TEST_CASE("predict_measurements") {
    const auto cam = std::make_shared<Intrinsics>(table_camera());

    Pose p;  // looking down +z from the origin
    SUBCASE("empty map predicts nothing") {
        CHECK(predict_measurements({p}, {}, *cam).empty());
    }

    SUBCASE("pose staring away from all landmarks predicts nothing") {
        std::vector<MappedLandmark> map = {{0, Vec3(0, 0, -5)}, {1, Vec3(0.4, 0, -6)}};
        CHECK(predict_measurements({p}, map, *cam).empty());
    }

    SUBCASE("counts match a brute-force visibility scan") {
        Rng rng(5);
        std::vector<MappedLandmark> map;
        for (int j = 0; j < 60; ++j) {
            map.push_back({j, random_vec3(rng, 6.0)});
        }
        std::vector<Pose> poses;
        for (int i = 0; i < 4; ++i) {
            Pose q;
            q.translation = random_vec3(rng, 2.0);
            q.rotation = random_rotation(rng);
            poses.push_back(q);
        }
        const auto predicted = predict_measurements(poses, map, *cam);

        std::size_t expected = 0;
        for (std::size_t i = 0; i < poses.size(); ++i) {
            std::size_t per_pose = 0;
            for (const MappedLandmark& lm : map) {
                if (visible(poses[i], lm.position, *cam)) {
                    ++expected;
                    ++per_pose;
                }
            }
            std::size_t got = 0;
            for (const auto& m : predicted) {
                if (m.pose_index == static_cast<int>(i)) {
                    ++got;
                }
            }
            CHECK(got == per_pose);
        }
        CHECK(predicted.size() == expected);
    }
}

TEST_CASE("augment") {
    Rng rng(7);
    const TwoClusterScenario sc = make_two_cluster_scenario(rng);

    CandidatePlan plan;
    plan.target = sc.target_rich;
    plan.poses = predict_plan(sc.s_k, sc.nu, sc.dt, 3, plan.target);
    std::vector<MappedLandmark> mapped;
    for (std::size_t i = 0; i < sc.estimate.landmarks.size(); ++i) {
        mapped.push_back({static_cast<int>(i), sc.estimate.landmarks[i]});
    }
    plan.predicted = predict_measurements(plan.poses, mapped, *sc.intrinsics);
    REQUIRE(!plan.predicted.empty());

    SUBCASE("counts and dimensions") {
        auto [aug, est] = augment(sc.graph, plan, sc.estimate, sc.intrinsics);
        CHECK(aug.num_factors() ==
              sc.graph.num_factors() + static_cast<int>(plan.predicted.size()));
        CHECK(aug.tangent_dim() == sc.graph.tangent_dim() + 6 * 3);
        CHECK(est.covers(aug));
        CHECK(aug.num_landmarks() == sc.graph.num_landmarks());
        CHECK(sc.graph.num_poses() == 4);  // base untouched
    }

    SUBCASE("unknown landmark raises a structural error") {
        CandidatePlan bad = plan;
        bad.predicted[0].landmark_id = 999;
        CHECK_THROWS_AS(augment(sc.graph, bad, sc.estimate, sc.intrinsics), StructuralError);
    }

    SUBCASE("plan with no predictions leaves the new poses unconstrained") {
        CandidatePlan empty_plan;
        empty_plan.target = plan.target;
        empty_plan.poses = plan.poses;
        auto [aug, est] = augment(sc.graph, empty_plan, sc.estimate, sc.intrinsics);
        CHECK(aug.num_factors() == sc.graph.num_factors());
        CHECK_THROWS_AS(log_det(information_matrix(linearize(aug, est))),
                        SingularInformationError);
    }
}

TEST_CASE("entropy_gaussian") {
    CHECK(entropy_gaussian(1, 0.0) == doctest::Approx(1.4189385332).epsilon(1e-10));
    CHECK(entropy_gaussian(0, 0.0) == 0.0);
    // Scaling a covariance by c adds (n/2) ln c.
    const int n = 4;
    const double c = 2.7;
    const double h0 = entropy_gaussian(n, 0.0);
    const double h1 = entropy_gaussian(n, n * std::log(c));
    CHECK(h1 - h0 == doctest::Approx(0.5 * n * std::log(c)).epsilon(1e-12));
}

TEST_CASE("info_gain") {
    SUBCASE("no augmentation means zero gain") {
        CHECK(info_gain({12.34, 42}, 12.34, 42) == 0.0);
    }
    SUBCASE("six new dimensions with unchanged log-determinant") {
        const double expected = -3.0 * std::log(2.0 * M_PI * M_E);
        CHECK(info_gain({5.0, 12}, 5.0, 18) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected == doctest::Approx(-8.51363).epsilon(1e-5));
    }
    SUBCASE("one-dimensional sanity") {
        CHECK(info_gain({0.0, 1}, 2.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("shifting both log-determinants leaves the gain unchanged") {
        const double g0 = info_gain({3.0, 10}, 7.0, 16);
        const double g1 = info_gain({3.0 + 11.5, 10}, 7.0 + 11.5, 16);
        CHECK(g0 == doctest::Approx(g1).epsilon(1e-12));
    }
}

TEST_CASE("info_gain is consistent with the entropy difference") {
    Rng rng(11);
    const ToyProblem toy = make_toy_ba(3, 6, 2.0, 0.02, rng);
    const Estimate e = toy.graph.initial_estimate();

    const Eigen::MatrixXd lambda_prior(information_matrix(linearize(toy.graph, e)));
    const int n_prior = toy.graph.tangent_dim();

    FactorGraph extended = toy.graph;
    Estimate e2 = e;
    Pose extra;
    extra.translation = Vec3(6.5, 0.5, 0.2);
    extra.rotation = look_at(extra.translation, Vec3::Zero());
    const VariableKey new_pose = extended.add_pose_variable(extra);
    e2.poses.push_back(extra);
    for (int j = 0; j < extended.num_landmarks(); ++j) {
        if (!visible(extra, e2.landmarks[static_cast<std::size_t>(j)], *toy.intrinsics)) {
            continue;
        }
        ProjectionFactor f;
        f.pose_key = new_pose;
        f.landmark_key = landmark_key(j);
        f.z = project(extra, e2.landmarks[static_cast<std::size_t>(j)], *toy.intrinsics);
        f.sigma_v = toy.intrinsics->sigma_v;
        f.intrinsics = toy.intrinsics;
        extended.add_projection(std::move(f));
    }
    const Eigen::MatrixXd lambda_post(information_matrix(linearize(extended, e2)));
    const int n_post = extended.tangent_dim();

    const double gain = info_gain({dense_log_det(lambda_prior), n_prior},
                                  dense_log_det(lambda_post), n_post);
    const double entropy_diff =
        entropy_gaussian(n_prior, dense_log_det(lambda_prior.inverse())) -
        entropy_gaussian(n_post, dense_log_det(lambda_post.inverse()));
    CHECK(gain == doctest::Approx(entropy_diff).epsilon(1e-8));
}

TEST_CASE("evaluate_candidates prefers the landmark-rich target") {
    Rng scenario_rng(13);
    const TwoClusterScenario sc = make_two_cluster_scenario(scenario_rng);
    PlannerConfig cfg = table_planner(3, 99);
    cfg.m_candidates = 2;

    Rng rng(99);
    const PlanResult result =
        evaluate_candidates(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt,
                            {sc.target_rich, sc.target_poor}, cfg, sc.intrinsics, rng);

    REQUIRE(result.rewards.size() == 2);
    CHECK(result.chosen_index == 0);
    CHECK((result.target - sc.target_rich).norm() == 0.0);
    CHECK(result.rewards[0] > result.rewards[1]);
    CHECK(result.diagnostics[0].predicted_count > result.diagnostics[1].predicted_count);

    // Dense determinant oracle on both augmented graphs.
    const double oracle_rich = dense_reward_oracle(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, 3,
                                                   sc.target_rich, sc.intrinsics);
    const double oracle_poor = dense_reward_oracle(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, 3,
                                                   sc.target_poor, sc.intrinsics);
    CHECK(result.rewards[0] == doctest::Approx(oracle_rich).epsilon(1e-8));
    CHECK(result.rewards[1] == doctest::Approx(oracle_poor).epsilon(1e-8));
}

TEST_CASE("plan_active") {
    Rng scenario_rng(17);
    const TwoClusterScenario sc = make_two_cluster_scenario(scenario_rng);

    SUBCASE("single candidate wins by default") {
        PlannerConfig cfg = table_planner(3, 5);
        cfg.m_candidates = 1;
        Rng rng(5);
        const PlanResult result = plan_active(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, cfg,
                                              sc.intrinsics, rng);
        CHECK(result.chosen_index == 0);
        CHECK(result.rewards.size() == 1);
        CHECK(std::isfinite(result.rewards[0]));
    }

    SUBCASE("duplicate targets earn identical rewards; max is returned") {
        PlannerConfig cfg = table_planner(3, 5);
        Rng rng(5);
        const PlanResult result =
            evaluate_candidates(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt,
                                {sc.target_rich, sc.target_rich, sc.target_poor}, cfg,
                                sc.intrinsics, rng);
        CHECK(result.rewards[0] == result.rewards[1]);
        CHECK(result.chosen_index == 0);  // ties break to the lowest index
        const double best = *std::max_element(result.rewards.begin(), result.rewards.end());
        CHECK(result.rewards[static_cast<std::size_t>(result.chosen_index)] == best);
    }

    SUBCASE("fixed seed is bit-deterministic") {
        PlannerConfig cfg = table_planner(4, 123);
        auto run = [&] {
            Rng rng(cfg.seed);
            return plan_active(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, cfg, sc.intrinsics,
                               rng);
        };
        const PlanResult a = run();
        const PlanResult b = run();
        CHECK(a.chosen_index == b.chosen_index);
        CHECK((a.target - b.target).norm() == 0.0);
        REQUIRE(a.rewards.size() == b.rewards.size());
        for (std::size_t i = 0; i < a.rewards.size(); ++i) {
            CHECK(a.rewards[i] == b.rewards[i]);
        }
    }

    SUBCASE("planning does not mutate the base graph") {
        const std::string before = graph_to_json(sc.graph).dump();
        PlannerConfig cfg = table_planner(4, 7);
        Rng rng(7);
        plan_active(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, cfg, sc.intrinsics, rng);
        CHECK(graph_to_json(sc.graph).dump() == before);
    }

    SUBCASE("all-infeasible candidate sets raise") {
        PlannerConfig cfg = table_planner(3, 7);
        Rng rng(7);
        const Vec3 away(0.0, 60.0, 0.0);  // no landmarks in that direction
        CHECK_THROWS_AS(evaluate_candidates(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt, {away},
                                            cfg, sc.intrinsics, rng),
                        NoInformativePlanError);
    }
}

TEST_CASE("more predicted measurements never reduce the posterior log-determinant") {
    Rng rng(19);
    const TwoClusterScenario sc = make_two_cluster_scenario(rng);
    std::vector<MappedLandmark> mapped;
    for (std::size_t i = 0; i < sc.estimate.landmarks.size(); ++i) {
        mapped.push_back({static_cast<int>(i), sc.estimate.landmarks[i]});
    }

    CandidatePlan plan;
    plan.target = sc.target_rich;
    plan.poses = predict_plan(sc.s_k, sc.nu, sc.dt, 3, plan.target);
    plan.predicted = predict_measurements(plan.poses, mapped, *sc.intrinsics);
    REQUIRE(plan.predicted.size() >= 4);

    CandidatePlan subset = plan;
    subset.predicted.resize(plan.predicted.size() / 2);

    auto [g_full, e_full] = augment(sc.graph, plan, sc.estimate, sc.intrinsics);
    auto [g_half, e_half] = augment(sc.graph, subset, sc.estimate, sc.intrinsics);

    const Eigen::MatrixXd lambda_full(information_matrix(linearize(g_full, e_full)));
    const Eigen::MatrixXd lambda_half(information_matrix(linearize(g_half, e_half)));
    CHECK(dense_log_det(lambda_full) >= dense_log_det(lambda_half) - 1e-10);
}

TEST_CASE("sampled-measurement averaging keeps the ranking") {
    Rng scenario_rng(23);
    const TwoClusterScenario sc = make_two_cluster_scenario(scenario_rng);
    PlannerConfig cfg = table_planner(3, 31);
    cfg.m_candidates = 2;

    Rng rng_ml(31);
    const PlanResult ml = evaluate_candidates(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt,
                                              {sc.target_rich, sc.target_poor}, cfg,
                                              sc.intrinsics, rng_ml);

    cfg.num_measurement_samples = 3;
    Rng rng_mc(31);
    const PlanResult mc = evaluate_candidates(sc.graph, sc.estimate, sc.s_k, sc.nu, sc.dt,
                                              {sc.target_rich, sc.target_poor}, cfg,
                                              sc.intrinsics, rng_mc);
    CHECK(mc.chosen_index == ml.chosen_index);
    CHECK(std::isfinite(mc.rewards[0]));
    CHECK(std::isfinite(mc.rewards[1]));
    CHECK(mc.rewards[0] > mc.rewards[1]);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "satslam/camera_sensor.hpp"

using namespace satslam;
using namespace satslam::test;

namespace {

Pose random_visible_pose(Rng& rng) {
    Pose p;
    p.rotation = random_rotation(rng);
    p.translation = random_vec3(rng, 5.0);
    return p;
}

// A landmark guaranteed visible from p: back-project a random in-bounds pixel
// at a random depth.
Vec3 random_visible_landmark(const Pose& p, const Intrinsics& k, Rng& rng) {
    const Vec2 uv(rng.uniform(10.0, k.width - 10.0), rng.uniform(10.0, k.height - 10.0));
    return back_project(uv, rng.uniform(1.0, 10.0), p, k);
}

} // namespace

TEST_CASE("world_to_camera") {
    Pose identity;
    CHECK((world_to_camera(identity, Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);

    Pose at_landmark;
    at_landmark.translation = Vec3(4, -5, 6);
    CHECK(world_to_camera(at_landmark, Vec3(4, -5, 6)).norm() == 0.0);

    Pose rotated;
    rotated.rotation << 0, -1, 0, 1, 0, 0, 0, 0, 1;  // 90 deg about z
    CHECK((world_to_camera(rotated, Vec3(1, 0, 0)) - Vec3(0, -1, 0)).norm() < 1e-15);
}

TEST_CASE("project") {
    const Intrinsics k = table_camera();
    Pose identity;
    CHECK((project(identity, Vec3(0, 0, 4), k) - Vec2(256, 256)).norm() == 0.0);
    CHECK((project(identity, Vec3(1, 0, 4), k) - Vec2(320, 256)).norm() == 0.0);
    CHECK_THROWS_AS(project(identity, Vec3(0, 0, -1), k), BehindCameraError);
}

TEST_CASE("project_jacobians closed-form spot checks") {
    const Intrinsics k = table_camera();
    Pose identity;
    const auto [j_pose, j_lm] = project_jacobians(identity, Vec3(0, 0, 4), k);
    CHECK(j_lm(0, 0) == doctest::Approx(64.0));
    CHECK(j_lm(0, 2) == doctest::Approx(0.0));
    CHECK(j_lm(1, 1) == doctest::Approx(64.0));

    Intrinsics k2 = k;
    k2.fx *= 2.0;
    const auto [j_pose2, j_lm2] = project_jacobians(identity, Vec3(0, 0, 4), k2);
    CHECK((j_pose2.row(0) - 2.0 * j_pose.row(0)).norm() < 1e-12);
    CHECK((j_lm2.row(0) - 2.0 * j_lm.row(0)).norm() < 1e-12);
    CHECK((j_pose2.row(1) - j_pose.row(1)).norm() == 0.0);
}

TEST_CASE("project_jacobians match central finite differences") {
    const Intrinsics k = table_camera();
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pose p = random_visible_pose(rng);
        const Vec3 l = random_visible_landmark(p, k, rng);

        const auto [j_pose, j_lm] = project_jacobians(p, l, k);

        const Eigen::MatrixXd fd_pose = numeric_jacobian(
            [&](const Eigen::VectorXd& xi) -> Eigen::VectorXd {
                return project(se3_retract(p, xi), l, k);
            },
            Eigen::VectorXd::Zero(6));
        const Eigen::MatrixXd fd_lm = numeric_jacobian(
            [&](const Eigen::VectorXd& dl) -> Eigen::VectorXd {
                return project(p, l + Vec3(dl), k);
            },
            Eigen::VectorXd::Zero(3));

        CHECK((j_pose - fd_pose).norm() / fd_pose.norm() < 1e-5);
        CHECK((j_lm - fd_lm).norm() / fd_lm.norm() < 1e-5);
    }
}

TEST_CASE("visible") {
    const Intrinsics k = table_camera();
    Pose identity;
    CHECK(visible(identity, Vec3(0, 0, 4), k));
    CHECK_FALSE(visible(identity, Vec3(5, 0, 4), k));  // u = 576 > 512
    CHECK_FALSE(visible(identity, Vec3(0, 0, -4), k));
}

TEST_CASE("observe_scene") {
    Intrinsics k = table_camera();
    Pose identity;
    std::vector<Landmark> scene = {{0, Vec3(0, 0, 4)}, {1, Vec3(1, 0, 4)}, {2, Vec3(0, 0, -4)}};

    SUBCASE("zero covariance gives exact projections") {
        k.sigma_v = Mat2::Zero();
        Rng rng(1);
        const auto meas = observe_scene(identity, scene, k, rng);
        REQUIRE(meas.size() == 2);
        CHECK((meas[0].uv - Vec2(256, 256)).norm() == 0.0);
        CHECK((meas[1].uv - Vec2(320, 256)).norm() == 0.0);
        CHECK(meas[0].landmark_id == 0);
        CHECK(meas[1].landmark_id == 1);
    }

    SUBCASE("empty scene gives empty list") {
        Rng rng(1);
        CHECK(observe_scene(identity, {}, k, rng).empty());
    }

    SUBCASE("sample mean approaches the noise-free projection") {
        Rng rng(2);
        std::vector<Landmark> one = {{0, Vec3(0.5, -0.3, 5)}};
        const Vec2 truth = project(identity, one[0].position, k);
        Vec2 mean = Vec2::Zero();
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            mean += observe_scene(identity, one, k, rng)[0].uv;
        }
        mean /= n;
        CHECK((mean - truth).norm() < 0.1);
    }

    SUBCASE("every returned landmark is visible, count bounded by scene size") {
        Rng rng(3);
        const auto meas = observe_scene(identity, scene, k, rng);
        CHECK(meas.size() <= scene.size());
        for (const auto& m : meas) {
            CHECK(visible(identity, scene[static_cast<std::size_t>(m.landmark_id)].position, k));
        }
    }
}

TEST_CASE("observe_scene noise statistics") {
    const Intrinsics k = table_camera();
    Pose identity;
    std::vector<Landmark> one = {{0, Vec3(0, 0, 5)}};
    const Vec2 truth = project(identity, one[0].position, k);

    Rng rng(9);
    Mat2 cov = Mat2::Zero();
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Vec2 d = observe_scene(identity, one, k, rng)[0].uv - truth;
        cov += d * d.transpose();
    }
    cov /= n;
    CHECK((cov - k.sigma_v).norm() < 0.05 * k.sigma_v.norm());
}

TEST_CASE("back_project") {
    const Intrinsics k = table_camera();
    Pose identity;
    CHECK((back_project(Vec2(256, 256), 4.0, identity, k) - Vec3(0, 0, 4)).norm() == 0.0);
    CHECK_THROWS_AS(back_project(Vec2(256, 256), 0.0, identity, k), DomainError);

    SUBCASE("round trip over random visible landmarks") {
        Rng rng(23);
        for (int trial = 0; trial < 1000; ++trial) {
            const Pose p = random_visible_pose(rng);
            const Vec3 l = random_visible_landmark(p, k, rng);
            const double depth = world_to_camera(p, l).z();
            const Vec3 rebuilt = back_project(project(p, l, k), depth, p, k);
            CHECK((rebuilt - l).norm() < 1e-9);

            const Vec2 uv(rng.uniform(0.0, k.width), rng.uniform(0.0, k.height));
            const Vec3 pt = back_project(uv, depth, p, k);
            CHECK((project(p, pt, k) - uv).norm() < 1e-9);
        }
    }
}

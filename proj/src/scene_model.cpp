#include "satslam/scene_model.hpp"

#include <cmath>

namespace satslam {

namespace {

Vec3 unit_sphere_sample(Rng& rng) {
    while (true) {
        Vec3 u;
        u.x() = 2.0 * rng.uniform01() - 1.0;
        u.y() = 2.0 * rng.uniform01() - 1.0;
        u.z() = 2.0 * rng.uniform01() - 1.0;
        const double n = u.norm();
        if (n > 1e-6 && n <= 1.0) {
            return u / n;
        }
    }
}

// Maps unit-sphere samples through diag(a,b,c) and rejection-corrects for the
// area distortion so the result is uniform on the ellipsoid surface.
Vec3 ellipsoid_sample(const Vec3& semi, Rng& rng) {
    const double min_axis = semi.minCoeff();
    while (true) {
        const Vec3 u = unit_sphere_sample(rng);
        const Vec3 scaled(u.x() / semi.x(), u.y() / semi.y(), u.z() / semi.z());
        const double weight = scaled.norm() * min_axis;  // in (0, 1]
        if (rng.uniform01() <= weight) {
            return Vec3(semi.x() * u.x(), semi.y() * u.y(), semi.z() * u.z());
        }
    }
}

Vec3 box_surface_sample(const Vec3& half, Rng& rng) {
    const double ax = half.y() * half.z();  // faces normal to x
    const double ay = half.x() * half.z();
    const double az = half.x() * half.y();
    const double total = 2.0 * (ax + ay + az);
    double pick = rng.uniform01() * total;
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    Vec3 p;
    if (pick < 2.0 * ax) {
        p.x() = sign * half.x();
        p.y() = rng.uniform(-half.y(), half.y());
        p.z() = rng.uniform(-half.z(), half.z());
    } else if (pick < 2.0 * (ax + ay)) {
        p.y() = sign * half.y();
        p.x() = rng.uniform(-half.x(), half.x());
        p.z() = rng.uniform(-half.z(), half.z());
    } else {
        p.z() = sign * half.z();
        p.x() = rng.uniform(-half.x(), half.x());
        p.y() = rng.uniform(-half.y(), half.y());
    }
    return p;
}

} // namespace

std::vector<Landmark> generate_scene(const SceneConfig& cfg, Rng& rng) {
    if (cfg.num_landmarks < 8) {
        throw DomainError("generate_scene: need at least 8 landmarks");
    }
    if ((cfg.extents.array() <= 0.0).any()) {
        throw DomainError("generate_scene: extents must be positive");
    }
    std::vector<Landmark> out;
    out.reserve(static_cast<std::size_t>(cfg.num_landmarks));
    for (int i = 0; i < cfg.num_landmarks; ++i) {
        const Vec3 p = cfg.geometry == SceneGeometry::EllipsoidShell
                           ? ellipsoid_sample(cfg.extents, rng)
                           : box_surface_sample(cfg.extents, rng);
        out.push_back({i, cfg.center + p});
    }
    return out;
}

ReconResult run_reconnaissance(const std::vector<Landmark>& scene, const OrbitParams& orbit,
                               const RelativeState& s0, const Intrinsics& k,
                               const Vec3& recon_target, Rng& rng, const ReconOptions& opts) {
    ReconResult result;
    result.scene = scene;
    result.intrinsics = std::make_shared<Intrinsics>(k);

    result.true_states = cw_propagate_noisy(s0, orbit, opts.steps, rng);

    // Ground-truth attitudes: pointing law on the true state plus tracking
    // noise as a small z-y-x rotation.
    result.true_poses.reserve(result.true_states.size());
    for (const RelativeState& s : result.true_states) {
        Pose p;
        p.rotation = pointing_rotation(s.r, s.v, recon_target);
        Vec3 noise;
        noise.x() = opts.attitude_noise_sigma * rng.normal();
        noise.y() = opts.attitude_noise_sigma * rng.normal();
        noise.z() = opts.attitude_noise_sigma * rng.normal();
        p.rotation = p.rotation * rotation_from_ypr(noise);
        p.translation = s.r;
        result.true_poses.push_back(p);
    }

    // Nominal states and poses from the undisturbed solution; these seed the
    // graph since the estimator has no access to the disturbed truth.
    std::vector<Pose> nominal_poses;
    nominal_poses.reserve(result.true_states.size());
    for (int i = 0; i <= opts.steps; ++i) {
        const RelativeState s = cw_closed_form(s0, orbit.nu, i * orbit.dt);
        Pose p;
        p.rotation = pointing_rotation(s.r, s.v, recon_target);
        p.translation = s.r;
        nominal_poses.push_back(p);
        if (i == opts.steps) {
            result.final_state = s;
        }
    }

    Intrinsics draw_cam = k;
    draw_cam.sigma_v *= opts.measurement_noise_scale * opts.measurement_noise_scale;
    std::vector<std::vector<PixelMeasurement>> measurements;
    measurements.reserve(nominal_poses.size());
    for (int i = 0; i <= opts.steps; ++i) {
        measurements.push_back(observe_scene(result.true_poses[static_cast<std::size_t>(i)],
                                             scene, draw_cam, rng, i));
    }

    for (const Pose& p : nominal_poses) {
        result.graph.add_pose_variable(p);
    }
    for (int i = 0; i < 2; ++i) {
        PriorFactor prior;
        prior.key = pose_key(i);
        prior.prior_pose = nominal_poses[static_cast<std::size_t>(i)];
        prior.sigma_p = opts.sigma_p;
        result.graph.add_prior(std::move(prior));
    }

    // First pass: one landmark variable per distinct landmark, back-projected
    // from its first sighting with a valid nominal-frame depth.
    for (int i = 0; i <= opts.steps; ++i) {
        const Pose& nominal = nominal_poses[static_cast<std::size_t>(i)];
        for (const PixelMeasurement& m : measurements[static_cast<std::size_t>(i)]) {
            if (result.id_to_landmark_index.count(m.landmark_id) > 0) {
                continue;
            }
            const Vec3& truth = scene[static_cast<std::size_t>(m.landmark_id)].position;
            const double depth = world_to_camera(nominal, truth).z();
            if (depth <= kMinDepth) {
                continue;  // nominal pose too far off; try a later sighting
            }
            const Vec3 init = back_project(m.uv, depth, nominal, k);
            const VariableKey key = result.graph.add_landmark_variable(init);
            result.id_to_landmark_index[m.landmark_id] = key.index;
            result.landmark_ids.push_back(m.landmark_id);
        }
    }

    if (static_cast<int>(result.landmark_ids.size()) < opts.min_landmarks) {
        throw DegenerateSceneError("run_reconnaissance: only " +
                                   std::to_string(result.landmark_ids.size()) +
                                   " landmarks observed");
    }

    // Second pass: projection factors in step order.
    for (int i = 0; i <= opts.steps; ++i) {
        for (const PixelMeasurement& m : measurements[static_cast<std::size_t>(i)]) {
            auto it = result.id_to_landmark_index.find(m.landmark_id);
            if (it == result.id_to_landmark_index.end()) {
                continue;
            }
            ProjectionFactor f;
            f.pose_key = pose_key(i);
            f.landmark_key = landmark_key(it->second);
            f.z = m.uv;
            f.sigma_v = k.sigma_v;
            f.intrinsics = result.intrinsics;
            result.graph.add_projection(std::move(f));
        }
    }

    result.estimate = result.graph.initial_estimate();
    return result;
}

} // namespace satslam

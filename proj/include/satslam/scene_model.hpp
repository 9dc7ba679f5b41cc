#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "satslam/factor_graph.hpp"

namespace satslam {

enum class SceneGeometry { EllipsoidShell, BoxSurface };

struct SceneConfig {
    int num_landmarks = 200;
    SceneGeometry geometry = SceneGeometry::EllipsoidShell;
    Vec3 extents = Vec3(1.5, 1.5, 3.0);  ///< semi-axes / half-sides [m]
    Vec3 center = Vec3(0.0, 0.0, 1.5);
    std::uint64_t seed = 0;
};

/// Area-uniform samples on the configured surface, ids 0..N-1.
std::vector<Landmark> generate_scene(const SceneConfig& cfg, Rng& rng);

struct ReconOptions {
    int steps = 60;
    double attitude_noise_sigma = 0.1 * M_PI / 180.0;  ///< per ypr axis [rad]
    Mat6 sigma_p = 1e-6 * Mat6::Identity();            ///< pose prior covariance
    int min_landmarks = 8;
    /// Scales the drawn pixel noise; the factor noise model keeps sigma_v.
    double measurement_noise_scale = 1.0;
};

/// Initial belief built from one reconnaissance orbit.
struct ReconResult {
    FactorGraph graph;
    Estimate estimate;          ///< graph initials (no optimization is run)
    RelativeState final_state;  ///< noise-free nominal state at the last step

    // Ground truth kept for the harness.
    std::vector<RelativeState> true_states;  ///< steps+1 entries
    std::vector<Pose> true_poses;
    std::vector<Landmark> scene;

    std::vector<int> landmark_ids;            ///< landmark variable index -> scene id
    std::map<int, int> id_to_landmark_index;  ///< scene id -> landmark variable index

    std::shared_ptr<const Intrinsics> intrinsics;
};

/// Simulates one relative orbit: ground truth via noisy propagation and
/// noisy pointing attitudes, measurements of the scene, and the initial graph
/// with pose initials from the noise-free solution and landmark initials
/// back-projected from each landmark's first sighting. No optimization is
/// performed. Throws DegenerateSceneError when fewer than opts.min_landmarks
/// distinct landmarks are observed.
ReconResult run_reconnaissance(const std::vector<Landmark>& scene, const OrbitParams& orbit,
                               const RelativeState& s0, const Intrinsics& k,
                               const Vec3& recon_target, Rng& rng,
                               const ReconOptions& opts = ReconOptions{});

} // namespace satslam

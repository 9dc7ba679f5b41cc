#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satslam/belief_planner.hpp"
#include "satslam/scene_model.hpp"

namespace satslam {

enum class Strategy { Tau1, Tau2, Active };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

/// How the configured disturbance covariance value is interpreted when
/// building OrbitParams: as the covariance of the per-step velocity increment
/// (w dt), or directly as the acceleration covariance.
enum class ProcessNoiseModel { VelocityIncrement, Acceleration };

struct ExperimentConfig {
    double altitude = 550e3;            ///< [m]
    double mu = 3.986004418e14;         ///< [m^3/s^2]
    double body_radius = 6378.137e3;    ///< [m]
    double sigma_w_diag = 1e-10;        ///< disturbance covariance diagonal
    ProcessNoiseModel process_noise_model = ProcessNoiseModel::VelocityIncrement;
    int steps_per_orbit = 60;

    RelativeState initial_state;  ///< chaser state at the reconnaissance start
    Intrinsics camera;
    SceneConfig scene;
    PlannerConfig planner;  ///< horizon is overridden per run

    Vec3 recon_target = Vec3(0.0, 0.0, 1.5);
    int recon_min_landmarks = 8;
    double attitude_noise_sigma = 0.1 * M_PI / 180.0;  ///< [rad] per ypr axis
    double measurement_noise_scale = 1.0;  ///< scales drawn pixel noise only
    Mat6 sigma_p = 1e-6 * Mat6::Identity();
    SolverConfig solver;

    std::vector<int> horizons = {12, 23};
    std::vector<Strategy> strategies = {Strategy::Tau1, Strategy::Tau2, Strategy::Active};
    int num_plans = 10;
    int num_runs_per_plan = 10;
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";

    ExperimentConfig();

    double mean_motion_value() const;
    double orbit_period() const;
    OrbitParams orbit_params() const;
};

/// Fixed passive observation goals.
inline Vec3 tau1_target() { return Vec3(0.0, 0.0, 2.0); }
inline Vec3 tau2_target() { return Vec3(0.0, 0.0, 0.0); }

struct RunRecord {
    int plan_id = 0;
    int run_id = 0;
    Strategy strategy = Strategy::Tau1;
    int horizon = 0;
    bool failed = false;
    std::string failure_cause;
    Vec3 target = Vec3::Zero();

    // Per-step series over the execution window (length = horizon).
    std::vector<Vec3> gt_positions, est_positions;
    std::vector<Vec3> gt_ypr, est_ypr;
    std::vector<double> u_r, u_phi;  ///< marginal covariance traces
    std::vector<double> e_r, e_phi;  ///< estimation errors
    std::vector<double> coverage;

    double u_m = 0.0;  ///< mean landmark marginal trace
    double e_m = 0.0;  ///< mean landmark position error

    std::vector<double> rewards;  ///< planner reward set (active strategy only)
    int solver_iterations = 0;
    double final_cost = 0.0;
};

struct AggregateTable {
    Strategy strategy = Strategy::Tau1;
    int horizon = 0;
    // Means over all included episodes, per step.
    std::vector<double> u_r, e_r, u_phi, e_phi, coverage;
    // Means over each plan's included episodes.
    std::vector<double> u_m_per_plan, e_m_per_plan;
    int included = 0;
    int excluded = 0;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<AggregateTable> aggregates;
    int failed_episodes = 0;
};

/// Cumulative distinct-landmark fraction per step.
std::vector<double> metric_coverage(const std::vector<std::vector<int>>& observed_ids_by_step,
                                    int recon_map_size);

/// Runs one SLAM episode over the execution window: simulates ground truth,
/// acquires noisy observations of the mapped landmarks, extends the
/// reconnaissance graph, optimizes, and fills the metric series. For the
/// active strategy a precomputed plan may be supplied; otherwise plan_active
/// runs internally. Solver failures mark the record failed instead of
/// throwing.
RunRecord run_episode(const ExperimentConfig& cfg, const ReconResult& recon, Strategy strategy,
                      int horizon, Rng& rng, const PlanResult* active_plan = nullptr);

AggregateTable aggregate_records(const std::vector<RunRecord>& records, Strategy strategy,
                                 int horizon, int num_plans);

/// Full Monte-Carlo protocol: per plan a fresh reconnaissance and one
/// planning call per horizon, then num_runs_per_plan episodes per strategy
/// sharing that reconnaissance. Persists per-episode records and per
/// strategy/horizon aggregate CSVs when cfg.output_dir is nonempty.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// 17-significant-digit float formatting used in all CSV output.
std::string format_float(double v);

void write_record_files(const std::string& dir, const std::vector<RunRecord>& records);
void write_aggregate_csv(const std::string& dir, const AggregateTable& table);
std::vector<RunRecord> load_record_files(const std::string& dir);

/// Re-derives aggregates from persisted records (the `metrics` subcommand).
std::vector<AggregateTable> recompute_aggregates(const std::vector<RunRecord>& records);

/// Per-figure CSVs: pose series, per-plan map metrics, and coverage, one file
/// per horizon with one column group per strategy.
void write_figure_csvs(const std::string& dir, const std::vector<AggregateTable>& aggregates);

} // namespace satslam

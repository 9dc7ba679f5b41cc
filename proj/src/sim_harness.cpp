#include "satslam/sim_harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "satslam/json_io.hpp"

namespace satslam {

namespace fs = std::filesystem;

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Tau1: return "tau1";
        case Strategy::Tau2: return "tau2";
        case Strategy::Active: return "active";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "tau1") return Strategy::Tau1;
    if (name == "tau2") return Strategy::Tau2;
    if (name == "active") return Strategy::Active;
    throw DomainError("unknown strategy '" + name + "'");
}

namespace {

int strategy_index(Strategy s) { return static_cast<int>(s); }

// Seed stream tags; appending new tags never perturbs existing streams.
constexpr std::uint64_t kStreamRecon = 1;
constexpr std::uint64_t kStreamPlan = 2;
constexpr std::uint64_t kStreamEpisode = 3;

} // namespace

ExperimentConfig::ExperimentConfig() {
    initial_state.r = Vec3(1.0, 6.0, 5.0);
    initial_state.v = Vec3(0.0131, -0.0022, 0.0);

    camera.fx = 256.0;
    camera.fy = 256.0;
    camera.cx = 256.0;
    camera.cy = 256.0;
    camera.width = 512.0;
    camera.height = 512.0;
    camera.sigma_v = 4.0 * Mat2::Identity();
}

double ExperimentConfig::mean_motion_value() const {
    return mean_motion(altitude, mu, body_radius);
}

double ExperimentConfig::orbit_period() const {
    return 2.0 * M_PI / mean_motion_value();
}

OrbitParams ExperimentConfig::orbit_params() const {
    OrbitParams p;
    p.nu = mean_motion_value();
    p.dt = orbit_period() / steps_per_orbit;
    if (process_noise_model == ProcessNoiseModel::VelocityIncrement) {
        p.sigma_w = (sigma_w_diag / (p.dt * p.dt)) * Mat3::Identity();
    } else {
        p.sigma_w = sigma_w_diag * Mat3::Identity();
    }
    return p;
}

std::vector<double> metric_coverage(const std::vector<std::vector<int>>& observed_ids_by_step,
                                    int recon_map_size) {
    if (recon_map_size <= 0) {
        throw DomainError("metric_coverage: reconnaissance map is empty");
    }
    std::vector<double> out;
    out.reserve(observed_ids_by_step.size());
    std::set<int> seen;
    for (const auto& step_ids : observed_ids_by_step) {
        seen.insert(step_ids.begin(), step_ids.end());
        out.push_back(static_cast<double>(seen.size()) / recon_map_size);
    }
    return out;
}

namespace {

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

Vec3 wrap_ypr_difference(const Vec3& a, const Vec3& b) {
    Vec3 d = a - b;
    d.x() = wrap_angle(d.x());
    d.y() = wrap_angle(d.y());
    d.z() = wrap_angle(d.z());
    return d;
}

Vec3 strategy_target(const ExperimentConfig& cfg, const ReconResult& recon, Strategy strategy,
                     int horizon, Rng& rng, const PlanResult* active_plan,
                     std::vector<double>* rewards_out) {
    switch (strategy) {
        case Strategy::Tau1: return tau1_target();
        case Strategy::Tau2: return tau2_target();
        case Strategy::Active: break;
    }
    if (active_plan != nullptr) {
        *rewards_out = active_plan->rewards;
        return active_plan->target;
    }
    const OrbitParams orbit = cfg.orbit_params();
    PlannerConfig pcfg = cfg.planner;
    pcfg.horizon = horizon;
    const PlanResult plan = plan_active(recon.graph, recon.estimate, recon.final_state, orbit.nu,
                                        orbit.dt, pcfg, recon.intrinsics, rng);
    *rewards_out = plan.rewards;
    return plan.target;
}

} // namespace

RunRecord run_episode(const ExperimentConfig& cfg, const ReconResult& recon, Strategy strategy,
                      int horizon, Rng& rng, const PlanResult* active_plan) {
    RunRecord record;
    record.strategy = strategy;
    record.horizon = horizon;

    const OrbitParams orbit = cfg.orbit_params();
    const Intrinsics& cam = *recon.intrinsics;

    try {
        record.target =
            strategy_target(cfg, recon, strategy, horizon, rng, active_plan, &record.rewards);
    } catch (const std::exception& e) {
        record.failed = true;
        record.failure_cause = e.what();
        return record;
    }

    // Ground truth continues from the true reconnaissance end state; the
    // estimator's pose initials come from the undisturbed prediction.
    const std::vector<RelativeState> true_states =
        cw_propagate_noisy(recon.true_states.back(), orbit, horizon, rng);

    std::vector<Pose> true_poses;
    true_poses.reserve(static_cast<std::size_t>(horizon));
    try {
        for (int i = 1; i <= horizon; ++i) {
            const RelativeState& s = true_states[static_cast<std::size_t>(i)];
            Pose p;
            p.rotation = pointing_rotation(s.r, s.v, record.target);
            Vec3 noise;
            noise.x() = cfg.attitude_noise_sigma * rng.normal();
            noise.y() = cfg.attitude_noise_sigma * rng.normal();
            noise.z() = cfg.attitude_noise_sigma * rng.normal();
            p.rotation = p.rotation * rotation_from_ypr(noise);
            p.translation = s.r;
            true_poses.push_back(p);
        }
    } catch (const DegenerateGeometryError& e) {
        record.failed = true;
        record.failure_cause = e.what();
        return record;
    }

    std::vector<Pose> predicted;
    try {
        predicted = predict_plan(recon.final_state, orbit.nu, orbit.dt, horizon, record.target);
    } catch (const DegenerateGeometryError& e) {
        record.failed = true;
        record.failure_cause = e.what();
        return record;
    }

    // Ground-truth positions of the mapped landmarks, listed in landmark
    // variable order with ids equal to the variable index (perfect
    // association).
    std::vector<Landmark> mapped_scene;
    mapped_scene.reserve(recon.landmark_ids.size());
    for (std::size_t v = 0; v < recon.landmark_ids.size(); ++v) {
        const int scene_id = recon.landmark_ids[v];
        mapped_scene.push_back(
            {static_cast<int>(v), recon.scene[static_cast<std::size_t>(scene_id)].position});
    }

    FactorGraph graph = recon.graph;
    std::vector<VariableKey> new_pose_keys;
    new_pose_keys.reserve(static_cast<std::size_t>(horizon));
    for (const Pose& p : predicted) {
        new_pose_keys.push_back(graph.add_pose_variable(p));
    }

    Intrinsics draw_cam = cam;
    draw_cam.sigma_v *= cfg.measurement_noise_scale * cfg.measurement_noise_scale;
    std::vector<std::vector<int>> observed_ids_by_step(static_cast<std::size_t>(horizon));
    for (int i = 0; i < horizon; ++i) {
        const std::vector<PixelMeasurement> meas =
            observe_scene(true_poses[static_cast<std::size_t>(i)], mapped_scene, draw_cam, rng, i);
        for (const PixelMeasurement& m : meas) {
            observed_ids_by_step[static_cast<std::size_t>(i)].push_back(m.landmark_id);
            ProjectionFactor f;
            f.pose_key = new_pose_keys[static_cast<std::size_t>(i)];
            f.landmark_key = landmark_key(m.landmark_id);
            f.z = m.uv;
            f.sigma_v = cam.sigma_v;
            f.intrinsics = recon.intrinsics;
            graph.add_projection(std::move(f));
        }
    }
    record.coverage = metric_coverage(observed_ids_by_step,
                                      static_cast<int>(recon.landmark_ids.size()));

    SolveResult solved;
    try {
        solved = optimize_map(graph, graph.initial_estimate(), cfg.solver);
    } catch (const std::exception& e) {
        record.failed = true;
        record.failure_cause = e.what();
        return record;
    }
    record.solver_iterations = solved.iterations;
    record.final_cost = solved.final_cost;

    std::vector<VariableKey> marginal_keys = new_pose_keys;
    for (std::size_t v = 0; v < recon.landmark_ids.size(); ++v) {
        marginal_keys.push_back(landmark_key(static_cast<int>(v)));
    }
    std::vector<Eigen::MatrixXd> marginals;
    try {
        marginals = marginal_covariances(graph, solved.estimate, marginal_keys);
    } catch (const std::exception& e) {
        record.failed = true;
        record.failure_cause = e.what();
        return record;
    }

    for (int i = 0; i < horizon; ++i) {
        const Pose& gt = true_poses[static_cast<std::size_t>(i)];
        const Pose& est = solved.estimate.pose(new_pose_keys[static_cast<std::size_t>(i)]);
        const Vec3 gt_ypr = yaw_pitch_roll(gt.rotation);
        const Vec3 est_ypr = yaw_pitch_roll(est.rotation);

        record.gt_positions.push_back(gt.translation);
        record.est_positions.push_back(est.translation);
        record.gt_ypr.push_back(gt_ypr);
        record.est_ypr.push_back(est_ypr);
        record.e_r.push_back((gt.translation - est.translation).norm());
        record.e_phi.push_back(wrap_ypr_difference(gt_ypr, est_ypr).norm());

        const Eigen::MatrixXd& m = marginals[static_cast<std::size_t>(i)];
        record.u_phi.push_back(m.topLeftCorner<3, 3>().trace());
        record.u_r.push_back(m.bottomRightCorner<3, 3>().trace());
    }

    double u_m_sum = 0.0;
    double e_m_sum = 0.0;
    for (std::size_t v = 0; v < recon.landmark_ids.size(); ++v) {
        u_m_sum += marginals[static_cast<std::size_t>(horizon) + v].trace();
        const Vec3& truth =
            recon.scene[static_cast<std::size_t>(recon.landmark_ids[v])].position;
        e_m_sum += (truth - solved.estimate.landmarks[v]).norm();
    }
    record.u_m = u_m_sum / static_cast<double>(recon.landmark_ids.size());
    record.e_m = e_m_sum / static_cast<double>(recon.landmark_ids.size());
    return record;
}

AggregateTable aggregate_records(const std::vector<RunRecord>& records, Strategy strategy,
                                 int horizon, int num_plans) {
    AggregateTable table;
    table.strategy = strategy;
    table.horizon = horizon;
    table.u_r.assign(static_cast<std::size_t>(horizon), 0.0);
    table.e_r.assign(static_cast<std::size_t>(horizon), 0.0);
    table.u_phi.assign(static_cast<std::size_t>(horizon), 0.0);
    table.e_phi.assign(static_cast<std::size_t>(horizon), 0.0);
    table.coverage.assign(static_cast<std::size_t>(horizon), 0.0);
    table.u_m_per_plan.assign(static_cast<std::size_t>(num_plans), 0.0);
    table.e_m_per_plan.assign(static_cast<std::size_t>(num_plans), 0.0);
    std::vector<int> per_plan_count(static_cast<std::size_t>(num_plans), 0);

    for (const RunRecord& r : records) {
        if (r.strategy != strategy || r.horizon != horizon) {
            continue;
        }
        if (r.failed) {
            ++table.excluded;
            continue;
        }
        ++table.included;
        for (int i = 0; i < horizon; ++i) {
            const auto s = static_cast<std::size_t>(i);
            table.u_r[s] += r.u_r[s];
            table.e_r[s] += r.e_r[s];
            table.u_phi[s] += r.u_phi[s];
            table.e_phi[s] += r.e_phi[s];
            table.coverage[s] += r.coverage[s];
        }
        const auto p = static_cast<std::size_t>(r.plan_id - 1);
        if (p < per_plan_count.size()) {
            table.u_m_per_plan[p] += r.u_m;
            table.e_m_per_plan[p] += r.e_m;
            ++per_plan_count[p];
        }
    }

    if (table.included > 0) {
        for (int i = 0; i < horizon; ++i) {
            const auto s = static_cast<std::size_t>(i);
            table.u_r[s] /= table.included;
            table.e_r[s] /= table.included;
            table.u_phi[s] /= table.included;
            table.e_phi[s] /= table.included;
            table.coverage[s] /= table.included;
        }
    }
    for (std::size_t p = 0; p < per_plan_count.size(); ++p) {
        if (per_plan_count[p] > 0) {
            table.u_m_per_plan[p] /= per_plan_count[p];
            table.e_m_per_plan[p] /= per_plan_count[p];
        }
    }
    return table;
}

std::vector<AggregateTable> recompute_aggregates(const std::vector<RunRecord>& records) {
    std::vector<std::pair<Strategy, int>> groups;
    int max_plan = 0;
    for (const RunRecord& r : records) {
        const std::pair<Strategy, int> g{r.strategy, r.horizon};
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) {
            groups.push_back(g);
        }
        max_plan = std::max(max_plan, r.plan_id);
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second
                                    : strategy_index(a.first) < strategy_index(b.first);
    });
    std::vector<AggregateTable> out;
    out.reserve(groups.size());
    for (const auto& [strategy, horizon] : groups) {
        out.push_back(aggregate_records(records, strategy, horizon, max_plan));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    const OrbitParams orbit = cfg.orbit_params();

    Rng scene_rng(cfg.scene.seed);
    const std::vector<Landmark> scene = generate_scene(cfg.scene, scene_rng);

    ReconOptions recon_opts;
    recon_opts.steps = cfg.steps_per_orbit;
    recon_opts.attitude_noise_sigma = cfg.attitude_noise_sigma;
    recon_opts.sigma_p = cfg.sigma_p;
    recon_opts.min_landmarks = cfg.recon_min_landmarks;
    recon_opts.measurement_noise_scale = cfg.measurement_noise_scale;

    for (int plan_id = 1; plan_id <= cfg.num_plans; ++plan_id) {
        Rng recon_rng(derive_seed(cfg.master_seed, {kStreamRecon, static_cast<std::uint64_t>(plan_id)}));
        const ReconResult recon = run_reconnaissance(scene, orbit, cfg.initial_state, cfg.camera,
                                                     cfg.recon_target, recon_rng, recon_opts);

        for (int horizon : cfg.horizons) {
            std::optional<PlanResult> plan;
            std::string plan_failure;
            const bool wants_active =
                std::find(cfg.strategies.begin(), cfg.strategies.end(), Strategy::Active) !=
                cfg.strategies.end();
            if (wants_active) {
                Rng plan_rng(derive_seed(cfg.master_seed,
                                         {kStreamPlan, static_cast<std::uint64_t>(plan_id),
                                          static_cast<std::uint64_t>(horizon)}));
                PlannerConfig pcfg = cfg.planner;
                pcfg.horizon = horizon;
                try {
                    plan = plan_active(recon.graph, recon.estimate, recon.final_state, orbit.nu,
                                       orbit.dt, pcfg, recon.intrinsics, plan_rng);
                } catch (const std::exception& e) {
                    plan_failure = e.what();
                }
            }

            for (Strategy strategy : cfg.strategies) {
                for (int run_id = 1; run_id <= cfg.num_runs_per_plan; ++run_id) {
                    Rng ep_rng(derive_seed(
                        cfg.master_seed,
                        {kStreamEpisode, static_cast<std::uint64_t>(plan_id),
                         static_cast<std::uint64_t>(horizon),
                         static_cast<std::uint64_t>(strategy_index(strategy)),
                         static_cast<std::uint64_t>(run_id)}));

                    RunRecord record;
                    if (strategy == Strategy::Active && !plan.has_value()) {
                        record.strategy = strategy;
                        record.horizon = horizon;
                        record.failed = true;
                        record.failure_cause = "planning failed: " + plan_failure;
                    } else {
                        record = run_episode(cfg, recon, strategy, horizon, ep_rng,
                                             plan.has_value() ? &plan.value() : nullptr);
                    }
                    record.plan_id = plan_id;
                    record.run_id = run_id;
                    if (record.failed) {
                        ++result.failed_episodes;
                    }
                    result.records.push_back(std::move(record));
                }
            }
        }
    }

    for (int horizon : cfg.horizons) {
        for (Strategy strategy : cfg.strategies) {
            result.aggregates.push_back(
                aggregate_records(result.records, strategy, horizon, cfg.num_plans));
        }
    }

    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        write_record_files(cfg.output_dir, result.records);
        for (const AggregateTable& table : result.aggregates) {
            write_aggregate_csv(cfg.output_dir, table);
        }
        nlohmann::json meta = config_to_json(cfg);
        meta["failed_episodes"] = result.failed_episodes;
        meta["reconnaissance_per_plan"] = true;
        std::ofstream out(fs::path(cfg.output_dir) / "run_metadata.json");
        out << meta.dump(2) << "\n";
    }
    return result;
}

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_record_files(const std::string& dir, const std::vector<RunRecord>& records) {
    const fs::path records_dir = fs::path(dir) / "records";
    fs::create_directories(records_dir);
    for (const RunRecord& r : records) {
        char name[128];
        std::snprintf(name, sizeof(name), "%s_L%02d_plan%02d_run%02d.json",
                      strategy_name(r.strategy), r.horizon, r.plan_id, r.run_id);
        std::ofstream out(records_dir / name);
        out << record_to_json(r).dump(2) << "\n";
    }
}

std::vector<RunRecord> load_record_files(const std::string& dir) {
    const fs::path records_dir = fs::path(dir) / "records";
    if (!fs::is_directory(records_dir)) {
        throw DomainError("no records directory under " + dir);
    }
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.path().extension() == ".json") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RunRecord> out;
    out.reserve(paths.size());
    for (const fs::path& p : paths) {
        std::ifstream in(p);
        nlohmann::json j;
        in >> j;
        out.push_back(record_from_json(j));
    }
    return out;
}

void write_aggregate_csv(const std::string& dir, const AggregateTable& table) {
    char name[128];
    std::snprintf(name, sizeof(name), "aggregate_%s_L%02d.csv", strategy_name(table.strategy),
                  table.horizon);
    std::ofstream out(fs::path(dir) / name);
    out << "step,U_r,e_r,U_phi,e_phi,c\n";
    for (std::size_t i = 0; i < table.u_r.size(); ++i) {
        out << (i + 1) << ',' << format_float(table.u_r[i]) << ',' << format_float(table.e_r[i])
            << ',' << format_float(table.u_phi[i]) << ',' << format_float(table.e_phi[i]) << ','
            << format_float(table.coverage[i]) << '\n';
    }

    std::snprintf(name, sizeof(name), "aggregate_map_%s_L%02d.csv", strategy_name(table.strategy),
                  table.horizon);
    std::ofstream map_out(fs::path(dir) / name);
    map_out << "plan,U_M,e_M\n";
    for (std::size_t p = 0; p < table.u_m_per_plan.size(); ++p) {
        map_out << (p + 1) << ',' << format_float(table.u_m_per_plan[p]) << ','
                << format_float(table.e_m_per_plan[p]) << '\n';
    }
}

void write_figure_csvs(const std::string& dir, const std::vector<AggregateTable>& aggregates) {
    fs::create_directories(dir);
    std::set<int> horizons;
    for (const AggregateTable& t : aggregates) {
        horizons.insert(t.horizon);
    }
    for (int horizon : horizons) {
        std::vector<const AggregateTable*> tables;
        for (const AggregateTable& t : aggregates) {
            if (t.horizon == horizon) {
                tables.push_back(&t);
            }
        }
        std::sort(tables.begin(), tables.end(), [](const AggregateTable* a, const AggregateTable* b) {
            return strategy_index(a->strategy) < strategy_index(b->strategy);
        });

        char name[128];
        std::snprintf(name, sizeof(name), "fig_pose_L%02d.csv", horizon);
        std::ofstream pose_out(fs::path(dir) / name);
        pose_out << "step";
        for (const AggregateTable* t : tables) {
            const std::string s = strategy_name(t->strategy);
            pose_out << ",U_r_" << s << ",e_r_" << s << ",U_phi_" << s << ",e_phi_" << s;
        }
        pose_out << '\n';
        for (int i = 0; i < horizon; ++i) {
            const auto s = static_cast<std::size_t>(i);
            pose_out << (i + 1);
            for (const AggregateTable* t : tables) {
                pose_out << ',' << format_float(t->u_r[s]) << ',' << format_float(t->e_r[s]) << ','
                         << format_float(t->u_phi[s]) << ',' << format_float(t->e_phi[s]);
            }
            pose_out << '\n';
        }

        std::snprintf(name, sizeof(name), "fig_map_L%02d.csv", horizon);
        std::ofstream map_out(fs::path(dir) / name);
        map_out << "plan";
        for (const AggregateTable* t : tables) {
            const std::string s = strategy_name(t->strategy);
            map_out << ",U_M_" << s << ",e_M_" << s;
        }
        map_out << '\n';
        if (!tables.empty()) {
            for (std::size_t p = 0; p < tables.front()->u_m_per_plan.size(); ++p) {
                map_out << (p + 1);
                for (const AggregateTable* t : tables) {
                    map_out << ',' << format_float(t->u_m_per_plan[p]) << ','
                            << format_float(t->e_m_per_plan[p]);
                }
                map_out << '\n';
            }
        }

        std::snprintf(name, sizeof(name), "fig_coverage_L%02d.csv", horizon);
        std::ofstream cov_out(fs::path(dir) / name);
        cov_out << "step";
        for (const AggregateTable* t : tables) {
            cov_out << ",c_" << strategy_name(t->strategy);
        }
        cov_out << '\n';
        for (int i = 0; i < horizon; ++i) {
            const auto s = static_cast<std::size_t>(i);
            cov_out << (i + 1);
            for (const AggregateTable* t : tables) {
                cov_out << ',' << format_float(t->coverage[s]);
            }
            cov_out << '\n';
        }
    }
}

} // namespace satslam

#include "satslam/json_io.hpp"

#include <fstream>

namespace satslam {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

json mat_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(row);
    }
    return out;
}

Vec3 vec3_from_json(const json& j) {
    return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

Vec2 vec2_from_json(const json& j) {
    return Vec2(j.at(0).get<double>(), j.at(1).get<double>());
}

template <typename Mat>
Mat mat_from_json(const json& j) {
    Mat m;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

json intrinsics_to_json(const Intrinsics& k) {
    return json{{"fx", k.fx},       {"fy", k.fy},         {"cx", k.cx},
                {"cy", k.cy},       {"width", k.width},   {"height", k.height},
                {"sigma_v", mat_to_json(k.sigma_v)}};
}

Intrinsics intrinsics_from_json(const json& j) {
    Intrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<double>();
    k.height = j.at("height").get<double>();
    k.sigma_v = mat_from_json<Mat2>(j.at("sigma_v"));
    return k;
}

} // namespace

json pose_to_json(const Pose& p) {
    return json{{"rotation", mat_to_json(p.rotation)},
                {"translation", vec_to_json(p.translation)}};
}

Pose pose_from_json(const json& j) {
    Pose p;
    p.rotation = mat_from_json<Mat3>(j.at("rotation"));
    p.translation = vec3_from_json(j.at("translation"));
    return p;
}

json graph_to_json(const FactorGraph& g) {
    json variables = json::array();
    for (VariableKey k : g.variable_order()) {
        if (k.kind == VarKind::Pose) {
            variables.push_back(json{{"kind", "pose"},
                                     {"index", k.index},
                                     {"init", pose_to_json(g.pose_init(k.index))}});
        } else {
            variables.push_back(json{{"kind", "landmark"},
                                     {"index", k.index},
                                     {"init", vec_to_json(g.landmark_init(k.index))}});
        }
    }

    json factors = json::array();
    for (const Factor& f : g.factors()) {
        if (const auto* prior = std::get_if<PriorFactor>(&f)) {
            factors.push_back(json{{"type", "prior"},
                                   {"key", prior->key.index},
                                   {"prior_pose", pose_to_json(prior->prior_pose)},
                                   {"sigma_p", mat_to_json(prior->sigma_p)}});
        } else {
            const auto& proj = std::get<ProjectionFactor>(f);
            factors.push_back(json{{"type", "projection"},
                                   {"pose", proj.pose_key.index},
                                   {"landmark", proj.landmark_key.index},
                                   {"z", vec_to_json(proj.z)},
                                   {"sigma_v", mat_to_json(proj.sigma_v)},
                                   {"intrinsics", intrinsics_to_json(*proj.intrinsics)}});
        }
    }
    return json{{"schema", 1}, {"variables", variables}, {"factors", factors}};
}

FactorGraph graph_from_json(const json& j) {
    if (j.at("schema").get<int>() != 1) {
        throw StructuralError("graph_from_json: unsupported schema");
    }
    FactorGraph g;
    for (const json& v : j.at("variables")) {
        if (v.at("kind").get<std::string>() == "pose") {
            g.add_pose_variable(pose_from_json(v.at("init")));
        } else {
            g.add_landmark_variable(vec3_from_json(v.at("init")));
        }
    }
    for (const json& f : j.at("factors")) {
        if (f.at("type").get<std::string>() == "prior") {
            PriorFactor prior;
            prior.key = pose_key(f.at("key").get<int>());
            prior.prior_pose = pose_from_json(f.at("prior_pose"));
            prior.sigma_p = mat_from_json<Mat6>(f.at("sigma_p"));
            g.add_prior(std::move(prior));
        } else {
            ProjectionFactor proj;
            proj.pose_key = pose_key(f.at("pose").get<int>());
            proj.landmark_key = landmark_key(f.at("landmark").get<int>());
            proj.z = vec2_from_json(f.at("z"));
            proj.sigma_v = mat_from_json<Mat2>(f.at("sigma_v"));
            proj.intrinsics = std::make_shared<Intrinsics>(intrinsics_from_json(f.at("intrinsics")));
            g.add_projection(std::move(proj));
        }
    }
    return g;
}

json scene_to_json(const std::vector<Landmark>& scene) {
    json landmarks = json::array();
    for (const Landmark& lm : scene) {
        landmarks.push_back(json{{"id", lm.id}, {"xyz", vec_to_json(lm.position)}});
    }
    return json{{"schema", 1}, {"landmarks", landmarks}};
}

std::vector<Landmark> scene_from_json(const json& j) {
    std::vector<Landmark> out;
    for (const json& lm : j.at("landmarks")) {
        out.push_back({lm.at("id").get<int>(), vec3_from_json(lm.at("xyz"))});
    }
    return out;
}

namespace {

json vec3_series_to_json(const std::vector<Vec3>& series) {
    json out = json::array();
    for (const Vec3& v : series) {
        out.push_back(vec_to_json(v));
    }
    return out;
}

std::vector<Vec3> vec3_series_from_json(const json& j) {
    std::vector<Vec3> out;
    for (const json& v : j) {
        out.push_back(vec3_from_json(v));
    }
    return out;
}

} // namespace

json record_to_json(const RunRecord& r) {
    return json{{"schema", 1},
                {"plan_id", r.plan_id},
                {"run_id", r.run_id},
                {"strategy", strategy_name(r.strategy)},
                {"horizon", r.horizon},
                {"failed", r.failed},
                {"failure_cause", r.failure_cause},
                {"target", vec_to_json(r.target)},
                {"gt_positions", vec3_series_to_json(r.gt_positions)},
                {"est_positions", vec3_series_to_json(r.est_positions)},
                {"gt_ypr", vec3_series_to_json(r.gt_ypr)},
                {"est_ypr", vec3_series_to_json(r.est_ypr)},
                {"u_r", r.u_r},
                {"u_phi", r.u_phi},
                {"e_r", r.e_r},
                {"e_phi", r.e_phi},
                {"coverage", r.coverage},
                {"u_m", r.u_m},
                {"e_m", r.e_m},
                {"rewards", r.rewards},
                {"solver_iterations", r.solver_iterations},
                {"final_cost", r.final_cost}};
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.plan_id = j.at("plan_id").get<int>();
    r.run_id = j.at("run_id").get<int>();
    r.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    r.horizon = j.at("horizon").get<int>();
    r.failed = j.at("failed").get<bool>();
    r.failure_cause = j.at("failure_cause").get<std::string>();
    r.target = vec3_from_json(j.at("target"));
    r.gt_positions = vec3_series_from_json(j.at("gt_positions"));
    r.est_positions = vec3_series_from_json(j.at("est_positions"));
    r.gt_ypr = vec3_series_from_json(j.at("gt_ypr"));
    r.est_ypr = vec3_series_from_json(j.at("est_ypr"));
    r.u_r = j.at("u_r").get<std::vector<double>>();
    r.u_phi = j.at("u_phi").get<std::vector<double>>();
    r.e_r = j.at("e_r").get<std::vector<double>>();
    r.e_phi = j.at("e_phi").get<std::vector<double>>();
    r.coverage = j.at("coverage").get<std::vector<double>>();
    r.u_m = j.at("u_m").get<double>();
    r.e_m = j.at("e_m").get<double>();
    r.rewards = j.at("rewards").get<std::vector<double>>();
    r.solver_iterations = j.at("solver_iterations").get<int>();
    r.final_cost = j.at("final_cost").get<double>();
    return r;
}

void apply_config_json(const json& j, ExperimentConfig& cfg) {
    if (j.contains("orbit")) {
        const json& o = j.at("orbit");
        if (o.contains("altitude_m")) cfg.altitude = o.at("altitude_m").get<double>();
        if (o.contains("mu")) cfg.mu = o.at("mu").get<double>();
        if (o.contains("body_radius_m")) cfg.body_radius = o.at("body_radius_m").get<double>();
        if (o.contains("sigma_w_diag")) cfg.sigma_w_diag = o.at("sigma_w_diag").get<double>();
        if (o.contains("steps_per_orbit")) cfg.steps_per_orbit = o.at("steps_per_orbit").get<int>();
        if (o.contains("process_noise_model")) {
            const std::string m = o.at("process_noise_model").get<std::string>();
            if (m == "velocity-increment") {
                cfg.process_noise_model = ProcessNoiseModel::VelocityIncrement;
            } else if (m == "acceleration") {
                cfg.process_noise_model = ProcessNoiseModel::Acceleration;
            } else {
                throw DomainError("config: unknown process_noise_model '" + m + "'");
            }
        }
    }
    if (j.contains("initial_state")) {
        cfg.initial_state.r = vec3_from_json(j.at("initial_state").at("r"));
        cfg.initial_state.v = vec3_from_json(j.at("initial_state").at("v"));
    }
    if (j.contains("camera")) {
        const json& c = j.at("camera");
        if (c.contains("fx")) cfg.camera.fx = c.at("fx").get<double>();
        if (c.contains("fy")) cfg.camera.fy = c.at("fy").get<double>();
        if (c.contains("cx")) cfg.camera.cx = c.at("cx").get<double>();
        if (c.contains("cy")) cfg.camera.cy = c.at("cy").get<double>();
        if (c.contains("width")) cfg.camera.width = c.at("width").get<double>();
        if (c.contains("height")) cfg.camera.height = c.at("height").get<double>();
        if (c.contains("noise_sigma_px")) {
            const double s = c.at("noise_sigma_px").get<double>();
            cfg.camera.sigma_v = s * s * Mat2::Identity();
        }
    }
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        if (s.contains("num_landmarks")) cfg.scene.num_landmarks = s.at("num_landmarks").get<int>();
        if (s.contains("geometry")) {
            const std::string g = s.at("geometry").get<std::string>();
            if (g == "ellipsoid-shell") {
                cfg.scene.geometry = SceneGeometry::EllipsoidShell;
            } else if (g == "box-surface") {
                cfg.scene.geometry = SceneGeometry::BoxSurface;
            } else {
                throw DomainError("config: unknown scene geometry '" + g + "'");
            }
        }
        if (s.contains("extents")) cfg.scene.extents = vec3_from_json(s.at("extents"));
        if (s.contains("center")) cfg.scene.center = vec3_from_json(s.at("center"));
        if (s.contains("seed")) cfg.scene.seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("planner")) {
        const json& p = j.at("planner");
        if (p.contains("m_candidates")) cfg.planner.m_candidates = p.at("m_candidates").get<int>();
        if (p.contains("box_lower")) cfg.planner.box_lower = vec3_from_json(p.at("box_lower"));
        if (p.contains("box_upper")) cfg.planner.box_upper = vec3_from_json(p.at("box_upper"));
        if (p.contains("num_measurement_samples")) {
            cfg.planner.num_measurement_samples = p.at("num_measurement_samples").get<int>();
        }
        if (p.contains("parallel")) cfg.planner.parallel = p.at("parallel").get<bool>();
    }
    if (j.contains("recon_target")) cfg.recon_target = vec3_from_json(j.at("recon_target"));
    if (j.contains("recon_min_landmarks")) {
        cfg.recon_min_landmarks = j.at("recon_min_landmarks").get<int>();
    }
    if (j.contains("attitude_noise_sigma_deg")) {
        cfg.attitude_noise_sigma = j.at("attitude_noise_sigma_deg").get<double>() * M_PI / 180.0;
    }
    if (j.contains("measurement_noise_scale")) {
        cfg.measurement_noise_scale = j.at("measurement_noise_scale").get<double>();
    }
    if (j.contains("horizons")) cfg.horizons = j.at("horizons").get<std::vector<int>>();
    if (j.contains("strategies")) {
        cfg.strategies.clear();
        for (const json& s : j.at("strategies")) {
            cfg.strategies.push_back(strategy_from_name(s.get<std::string>()));
        }
    }
    if (j.contains("num_plans")) cfg.num_plans = j.at("num_plans").get<int>();
    if (j.contains("num_runs_per_plan")) {
        cfg.num_runs_per_plan = j.at("num_runs_per_plan").get<int>();
    }
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
}

json config_to_json(const ExperimentConfig& cfg) {
    json strategies = json::array();
    for (Strategy s : cfg.strategies) {
        strategies.push_back(strategy_name(s));
    }
    return json{
        {"orbit",
         {{"altitude_m", cfg.altitude},
          {"mu", cfg.mu},
          {"body_radius_m", cfg.body_radius},
          {"sigma_w_diag", cfg.sigma_w_diag},
          {"steps_per_orbit", cfg.steps_per_orbit},
          {"process_noise_model", cfg.process_noise_model == ProcessNoiseModel::VelocityIncrement
                                      ? "velocity-increment"
                                      : "acceleration"}}},
        {"initial_state", {{"r", vec_to_json(cfg.initial_state.r)}, {"v", vec_to_json(cfg.initial_state.v)}}},
        {"camera",
         {{"fx", cfg.camera.fx},
          {"fy", cfg.camera.fy},
          {"cx", cfg.camera.cx},
          {"cy", cfg.camera.cy},
          {"width", cfg.camera.width},
          {"height", cfg.camera.height},
          {"noise_sigma_px", std::sqrt(cfg.camera.sigma_v(0, 0))}}},
        {"scene",
         {{"num_landmarks", cfg.scene.num_landmarks},
          {"geometry", cfg.scene.geometry == SceneGeometry::EllipsoidShell ? "ellipsoid-shell"
                                                                           : "box-surface"},
          {"extents", vec_to_json(cfg.scene.extents)},
          {"center", vec_to_json(cfg.scene.center)},
          {"seed", cfg.scene.seed}}},
        {"planner",
         {{"m_candidates", cfg.planner.m_candidates},
          {"box_lower", vec_to_json(cfg.planner.box_lower)},
          {"box_upper", vec_to_json(cfg.planner.box_upper)},
          {"num_measurement_samples", cfg.planner.num_measurement_samples},
          {"parallel", cfg.planner.parallel}}},
        {"recon_target", vec_to_json(cfg.recon_target)},
        {"recon_min_landmarks", cfg.recon_min_landmarks},
        {"attitude_noise_sigma_deg", cfg.attitude_noise_sigma * 180.0 / M_PI},
        {"measurement_noise_scale", cfg.measurement_noise_scale},
        {"horizons", cfg.horizons},
        {"strategies", strategies},
        {"num_plans", cfg.num_plans},
        {"num_runs_per_plan", cfg.num_runs_per_plan},
        {"master_seed", cfg.master_seed},
        {"output_dir", cfg.output_dir}};
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open config file: " + path);
    }
    json j;
    in >> j;
    ExperimentConfig cfg;
    apply_config_json(j, cfg);
    return cfg;
}

} // namespace satslam

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "satslam/json_io.hpp"
#include "satslam/sim_harness.hpp"

namespace {

using namespace satslam;
namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<int> horizon;
    std::optional<std::string> strategy;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON configuration file");
    cmd->add_option("--seed", opts.seed, "override master_seed");
    cmd->add_option("--output-dir", opts.output_dir, "override output_dir");
    cmd->add_option("--horizon", opts.horizon, "restrict to one planning horizon");
    cmd->add_option("--strategy", opts.strategy, "restrict to one strategy (tau1|tau2|active)");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = load_config_file(opts.config_path);
    }
    if (opts.seed) {
        cfg.master_seed = *opts.seed;
    }
    if (opts.output_dir) {
        cfg.output_dir = *opts.output_dir;
    }
    if (opts.horizon) {
        cfg.horizons = {*opts.horizon};
    }
    if (opts.strategy) {
        cfg.strategies = {strategy_from_name(*opts.strategy)};
    }
    return cfg;
}

ReconResult build_recon(const ExperimentConfig& cfg, int plan_id) {
    Rng scene_rng(cfg.scene.seed);
    const std::vector<Landmark> scene = generate_scene(cfg.scene, scene_rng);

    ReconOptions opts;
    opts.steps = cfg.steps_per_orbit;
    opts.attitude_noise_sigma = cfg.attitude_noise_sigma;
    opts.sigma_p = cfg.sigma_p;
    opts.min_landmarks = cfg.recon_min_landmarks;
    opts.measurement_noise_scale = cfg.measurement_noise_scale;

    Rng recon_rng(derive_seed(cfg.master_seed, {1, static_cast<std::uint64_t>(plan_id)}));
    return run_reconnaissance(scene, cfg.orbit_params(), cfg.initial_state, cfg.camera,
                              cfg.recon_target, recon_rng, opts);
}

int cmd_recon(const CommonOpts& opts, int plan_id) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ReconResult recon = build_recon(cfg, plan_id);

    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(fs::path(cfg.output_dir) / "recon_graph.json");
        out << graph_to_json(recon.graph).dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "scene.json");
        out << scene_to_json(recon.scene).dump(2) << "\n";
    }
    std::cout << "reconnaissance: " << recon.graph.num_poses() << " poses, "
              << recon.graph.num_landmarks() << " landmarks, " << recon.graph.num_factors()
              << " factors -> " << (fs::path(cfg.output_dir) / "recon_graph.json").string()
              << "\n";
    return 0;
}

int cmd_plan(const CommonOpts& opts, int plan_id) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ReconResult recon = build_recon(cfg, plan_id);
    const OrbitParams orbit = cfg.orbit_params();

    const int horizon = cfg.horizons.empty() ? 12 : cfg.horizons.front();
    PlannerConfig pcfg = cfg.planner;
    pcfg.horizon = horizon;
    Rng plan_rng(derive_seed(cfg.master_seed, {2, static_cast<std::uint64_t>(plan_id),
                                               static_cast<std::uint64_t>(horizon)}));
    const PlanResult plan = plan_active(recon.graph, recon.estimate, recon.final_state, orbit.nu,
                                        orbit.dt, pcfg, recon.intrinsics, plan_rng);

    nlohmann::json j;
    j["horizon"] = horizon;
    j["target"] = {plan.target.x(), plan.target.y(), plan.target.z()};
    j["chosen_index"] = plan.chosen_index;
    j["rewards"] = plan.rewards;
    j["prior_logdet"] = plan.prior.logdet_lambda;
    nlohmann::json diag = nlohmann::json::array();
    for (const CandidateDiagnostics& d : plan.diagnostics) {
        diag.push_back({{"predicted_count", d.predicted_count},
                        {"skipped_factors", d.skipped_factors},
                        {"feasible", d.feasible}});
    }
    j["diagnostics"] = diag;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ExperimentResult result = run_experiment(cfg);
    std::cout << "episodes: " << result.records.size() << " (" << result.failed_episodes
              << " failed), output: " << cfg.output_dir << "\n";
    return 0;
}

int cmd_metrics(const CommonOpts& opts, const std::string& records_dir) {
    const std::string dir = records_dir.empty()
                                ? (opts.output_dir ? *opts.output_dir : std::string("out"))
                                : records_dir;
    const std::vector<RunRecord> records = load_record_files(dir);
    const std::vector<AggregateTable> aggregates = recompute_aggregates(records);
    for (const AggregateTable& t : aggregates) {
        write_aggregate_csv(dir, t);
    }
    std::cout << "recomputed " << aggregates.size() << " aggregates from " << records.size()
              << " records in " << dir << "\n";
    return 0;
}

int cmd_export_plot(const CommonOpts& opts, const std::string& records_dir) {
    const std::string dir = records_dir.empty()
                                ? (opts.output_dir ? *opts.output_dir : std::string("out"))
                                : records_dir;
    const std::vector<RunRecord> records = load_record_files(dir);
    write_figure_csvs(dir, recompute_aggregates(records));
    std::cout << "figure CSVs written to " << dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active satellite SLAM simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    int plan_id = 1;
    std::string records_dir;

    CLI::App* recon = app.add_subcommand("recon", "build and serialize the reconnaissance graph");
    add_common(recon, opts);
    recon->add_option("--plan-id", plan_id, "reconnaissance seed stream index");

    CLI::App* plan = app.add_subcommand("plan", "print the reward set and chosen target as JSON");
    add_common(plan, opts);
    plan->add_option("--plan-id", plan_id, "reconnaissance seed stream index");

    CLI::App* run = app.add_subcommand("run", "run the full Monte-Carlo experiment");
    add_common(run, opts);

    CLI::App* metrics = app.add_subcommand("metrics", "recompute aggregates from stored records");
    add_common(metrics, opts);
    metrics->add_option("--records-dir", records_dir, "directory containing records/");

    CLI::App* export_plot = app.add_subcommand("export-plot", "emit per-figure CSV files");
    add_common(export_plot, opts);
    export_plot->add_option("--records-dir", records_dir, "directory containing records/");

    CLI11_PARSE(app, argc, argv);

    try {
        if (recon->parsed()) return cmd_recon(opts, plan_id);
        if (plan->parsed()) return cmd_plan(opts, plan_id);
        if (run->parsed()) return cmd_run(opts);
        if (metrics->parsed()) return cmd_metrics(opts, records_dir);
        if (export_plot->parsed()) return cmd_export_plot(opts, records_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "sqfit/experiment.hpp"
#include "sqfit/gradcheck.hpp"

namespace {

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out) {
    sqfit::SceneConfig scene_cfg;
    if (!config_path.empty()) scene_cfg = sqfit::load_experiment_config(config_path).scene;
    const sqfit::Scene scene = sqfit::generate_scene(scene_cfg, seed);
    sqfit::save_scene(scene, out);
    std::cout << "scene written to " << out << "\n";
    return 0;
}

int cmd_fit(const std::string& scene_path, const std::string& pipeline, const std::string& out) {
    const sqfit::FitReport report = sqfit::fit_scene(scene_path, pipeline, out);
    std::cout << "report written to " << out << "/report.json ("
              << report.stages.size() << " stages";
    if (!report.all_stages_ok()) std::cout << ", with stage errors";
    std::cout << ")\n";
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out,
                   std::uint64_t* seed, int* trials, const std::string& pipelines,
                   int* workers, int* mc_samples) {
    sqfit::ExperimentConfig cfg = sqfit::load_experiment_config(config_path);
    if (seed) cfg.base_seed = *seed;
    if (trials) cfg.trials = *trials;
    if (workers) cfg.workers = *workers;
    if (mc_samples) cfg.mc_samples = *mc_samples;
    if (!pipelines.empty()) {
        cfg.pipelines.clear();
        std::string token;
        for (char c : pipelines + ";") {
            if (c == ';') {
                if (!token.empty()) cfg.pipelines.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
    }

    const sqfit::ExperimentResult result = sqfit::run_experiment_to_dir(cfg, out);
    std::cout << result.csv;
    std::cout << "artifacts written to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superquadric fitting from multi-view mask observations"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", scene_path, pipeline = "1,2,3D,3A";
    std::string pipelines;
    std::uint64_t seed = 1;
    int trials = 0, workers = 0, mc_samples = 0, grad_configs = 100;
    bool seed_set = false, trials_set = false, workers_set = false, mc_set = false;

    auto* simulate = app.add_subcommand("simulate", "generate a random scene JSON");
    simulate->add_option("--config", config_path, "experiment config providing the scene block");
    simulate->add_option("--seed", seed, "scene seed");
    simulate->add_option("--out", out_dir, "output scene file")->required();

    auto* fit = app.add_subcommand("fit", "fit one scene with one pipeline");
    fit->add_option("--scene", scene_path, "scene JSON")->required();
    fit->add_option("--pipeline", pipeline, "stage list, e.g. 1,2,3D,3A");
    fit->add_option("--out", out_dir, "output directory");

    auto* experiment = app.add_subcommand("experiment", "run a permutation experiment");
    experiment->add_option("--config", config_path, "experiment config JSON")->required();
    experiment->add_option("--out", out_dir, "output directory");
    experiment->add_option("--seed", seed, "base seed override")->each([&](const std::string&) { seed_set = true; });
    experiment->add_option("--trials", trials, "trial count override")->each([&](const std::string&) { trials_set = true; });
    experiment->add_option("--pipelines", pipelines, "semicolon-separated pipeline overrides");
    experiment->add_option("--workers", workers, "worker thread override")->each([&](const std::string&) { workers_set = true; });
    experiment->add_option("--mc-samples", mc_samples, "Monte-Carlo sample override")->each([&](const std::string&) { mc_set = true; });

    auto* gradcheck = app.add_subcommand("gradcheck", "validate analytic gradients");
    gradcheck->add_option("--configs", grad_configs, "number of random configurations");
    gradcheck->add_option("--seed", seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, seed, out_dir);
        if (fit->parsed()) return cmd_fit(scene_path, pipeline, out_dir);
        if (experiment->parsed())
            return cmd_experiment(config_path, out_dir, seed_set ? &seed : nullptr,
                                  trials_set ? &trials : nullptr, pipelines,
                                  workers_set ? &workers : nullptr, mc_set ? &mc_samples : nullptr);
        if (gradcheck->parsed())
            return sqfit::gradient_check(grad_configs, seed, std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

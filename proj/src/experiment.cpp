#include "sqfit/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "sqfit/rng.hpp"

namespace sqfit {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

nlohmann::json params_to_json(const SuperquadricParams& q) {
    return {{"a", {q.size(0), q.size(1), q.size(2)}},
            {"eps", {q.shape(0), q.shape(1)}},
            {"p", {q.position(0), q.position(1), q.position(2)}},
            {"r", {q.orientation(0), q.orientation(1), q.orientation(2)}}};
}

void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw std::runtime_error("config: unknown key '" + item.key() + "' in " + where);
    }
}

Eigen::Vector2d range_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

std::vector<StageSpec> parse_pipeline(const std::string& spec) {
    std::vector<StageSpec> stages;
    std::string token;
    const auto flush = [&]() {
        if (token.empty()) return;
        std::string upper = token;
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (upper == "1") stages.push_back({StageId::s1, std::nullopt});
        else if (upper == "2") stages.push_back({StageId::s2, std::nullopt});
        else if (upper == "3A") stages.push_back({StageId::s3a, std::nullopt});
        else if (upper == "3B") stages.push_back({StageId::s3b, std::nullopt});
        else if (upper == "3C") stages.push_back({StageId::s3c, std::nullopt});
        else if (upper == "3D") stages.push_back({StageId::s3d, std::nullopt});
        else if (upper == "3E") stages.push_back({StageId::s3e, std::nullopt});
        else if (upper == "3F") stages.push_back({StageId::s3f, std::nullopt});
        else throw UnknownStage("unknown stage '" + token + "'");
        token.clear();
    };
    for (char c : spec) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == ',') flush();
        else token.push_back(c);
    }
    flush();
    return stages;
}

std::string pipeline_to_string(const std::vector<StageSpec>& stages) {
    std::string out;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (i) out += ",";
        out += to_string(stages[i].id);
    }
    return out;
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    require_keys(j, {"scene", "pipelines", "trials", "base_seed", "mc_samples", "workers",
                     "record_timing"},
                 "top level");

    ExperimentConfig cfg;
    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        require_keys(s,
                     {"camera_count", "circle_radius", "elevation", "focal", "principal_point",
                      "resolution", "size_range", "position_range", "orientation_range",
                      "shape_range", "extreme_shapes", "samples_per_observation",
                      "silhouette_grid"},
                     "scene");
        if (s.contains("camera_count")) cfg.scene.camera_count = s.at("camera_count");
        if (s.contains("circle_radius")) cfg.scene.circle_radius = s.at("circle_radius");
        if (s.contains("elevation")) cfg.scene.elevation = s.at("elevation");
        if (s.contains("focal")) cfg.scene.intrinsics.focal = range_from_json(s.at("focal"));
        if (s.contains("principal_point"))
            cfg.scene.intrinsics.principal_point = range_from_json(s.at("principal_point"));
        if (s.contains("resolution"))
            cfg.scene.intrinsics.resolution = Eigen::Vector2i(
                s.at("resolution").at(0).get<int>(), s.at("resolution").at(1).get<int>());
        if (s.contains("size_range")) cfg.scene.size_range = range_from_json(s.at("size_range"));
        if (s.contains("position_range"))
            cfg.scene.position_range = range_from_json(s.at("position_range"));
        if (s.contains("orientation_range"))
            cfg.scene.orientation_range = range_from_json(s.at("orientation_range"));
        if (s.contains("shape_range")) cfg.scene.shape_range = range_from_json(s.at("shape_range"));
        if (s.contains("extreme_shapes")) cfg.scene.extreme_shapes = s.at("extreme_shapes");
        if (s.contains("samples_per_observation"))
            cfg.scene.samples_per_observation = s.at("samples_per_observation");
        if (s.contains("silhouette_grid")) cfg.scene.silhouette_grid = s.at("silhouette_grid");
    }
    if (j.contains("pipelines")) {
        for (const auto& p : j.at("pipelines")) cfg.pipelines.push_back(p.get<std::string>());
    }
    if (cfg.pipelines.empty()) throw std::runtime_error("config: at least one pipeline required");
    if (j.contains("trials")) cfg.trials = j.at("trials");
    if (cfg.trials < 1) throw std::runtime_error("config: trials must be >= 1");
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("mc_samples")) cfg.mc_samples = j.at("mc_samples");
    if (j.contains("workers")) cfg.workers = j.at("workers");
    if (j.contains("record_timing")) cfg.record_timing = j.at("record_timing");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return experiment_config_from_json(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config parse error in ") + path + ": " + e.what());
    }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    std::vector<std::vector<StageSpec>> parsed;
    parsed.reserve(config.pipelines.size());
    std::vector<std::string> names;
    for (const auto& p : config.pipelines) {
        parsed.push_back(parse_pipeline(p));
        names.push_back(pipeline_to_string(parsed.back()));
    }

    ExperimentResult result;
    result.pipeline_names = names;
    result.trials.resize(config.trials);

    const int workers = config.workers > 0 ? config.workers : omp_get_max_threads();

    const auto run_trial = [&](int i) {
        TrialRecord rec;
        rec.trial = i;
        rec.seed = config.base_seed + static_cast<std::uint64_t>(i);
        try {
            const Scene scene = generate_scene(config.scene, rec.seed);
            rec.scene_ok = true;
            rec.gt = scene.gt;
            const std::uint64_t mc_seed = derive_seed(rec.seed, 999);

            for (std::size_t k = 0; k < parsed.size(); ++k) {
                PipelineOutcome out;
                out.pipeline = names[k];
                try {
                    const FitReport report =
                        run_pipeline(parsed[k], scene.observations, config.fit);
                    out.final_params = report.final_params;
                    for (const auto& s : report.stages) {
                        out.stage_times_s.push_back(s.wall_time_s);
                        if (!s.error.empty())
                            out.stage_errors.push_back(to_string(s.id) + ": " + s.error);
                    }
                    out.metrics.iou3d =
                        iou3d(report.final_params, scene.gt, config.mc_samples, mc_seed);
                    out.metrics.r_iou = r_iou(report.final_params, scene.gt, scene.views,
                                              config.scene.silhouette_grid);
                    out.metrics.r_iou_m = r_iou_m(report.final_params, scene.observations,
                                                  config.scene.silhouette_grid);
                    out.metrics.success = out.metrics.iou3d > 0.0;
                    for (double t : out.stage_times_s) out.metrics.time_s += t;
                } catch (const std::exception& e) {
                    out.stage_errors.push_back(std::string("pipeline: ") + e.what());
                    out.metrics = TrialMetrics{};  // unsuccessful
                }
                if (!config.record_timing) {
                    out.metrics.time_s = 0.0;
                    std::fill(out.stage_times_s.begin(), out.stage_times_s.end(), 0.0);
                }
                rec.outcomes.push_back(std::move(out));
            }
        } catch (const std::exception& e) {
            rec.scene_error = e.what();
            for (const auto& name : names) {
                PipelineOutcome out;
                out.pipeline = name;
                rec.outcomes.push_back(std::move(out));
            }
        }
        result.trials[i] = std::move(rec);
    };

#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < config.trials; ++i) run_trial(i);

    for (std::size_t k = 0; k < parsed.size(); ++k) {
        std::vector<TrialMetrics> metrics;
        metrics.reserve(result.trials.size());
        for (const auto& t : result.trials) metrics.push_back(t.outcomes[k].metrics);
        result.aggregates.push_back(aggregate(metrics));
    }

    result.csv = experiment_csv(names, result.aggregates);
    return result;
}

std::string experiment_csv(const std::vector<std::string>& pipeline_names,
                           const std::vector<AggregateRow>& aggregates) {
    std::string csv =
        "pipeline,IOU_median,IOU_avg,IOU_std,RIOU_median,RIOU_avg,RIOU_std,"
        "RIOUM_median,RIOUM_avg,RIOUM_std,time_median_s,time_avg_s,time_std_s,sigma\n";
    for (std::size_t k = 0; k < pipeline_names.size(); ++k) {
        const AggregateRow& a = aggregates[k];
        csv += pipeline_names[k];
        for (const Stats* s : {&a.iou3d, &a.r_iou, &a.r_iou_m, &a.time_s})
            csv += "," + fmt6(s->median) + "," + fmt6(s->average) + "," + fmt6(s->std_dev);
        csv += "," + fmt6(a.success_rate) + "\n";
    }
    return csv;
}

ExperimentResult run_experiment_to_dir(const ExperimentConfig& config,
                                       const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentResult result = run_experiment(config);

    write_file(out_dir + "/summary.csv", result.csv);

    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : result.trials) {
        nlohmann::json jt;
        jt["trial"] = t.trial;
        jt["seed"] = t.seed;
        jt["scene_ok"] = t.scene_ok;
        if (!t.scene_error.empty()) jt["scene_error"] = t.scene_error;
        if (t.scene_ok) jt["gt"] = params_to_json(t.gt);
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : t.outcomes) {
            nlohmann::json jo;
            jo["pipeline"] = o.pipeline;
            jo["iou3d"] = o.metrics.iou3d;
            jo["r_iou"] = o.metrics.r_iou;
            jo["r_iou_m"] = o.metrics.r_iou_m;
            jo["success"] = o.metrics.success;
            jo["time_s"] = o.metrics.time_s;
            jo["stage_times_s"] = o.stage_times_s;
            jo["final"] = params_to_json(o.final_params);
            jo["stage_errors"] = o.stage_errors;
            outs.push_back(std::move(jo));
        }
        jt["results"] = std::move(outs);
        trials.push_back(std::move(jt));
    }
    write_file(out_dir + "/trials.json", trials.dump(2) + "\n");
    return result;
}

FitReport fit_scene(const std::string& scene_path, const std::string& pipeline_spec,
                    const std::string& out_dir, const FitOptions& opts) {
    const Scene scene = load_scene(scene_path);
    const std::vector<StageSpec> stages = parse_pipeline(pipeline_spec);

    const FitReport report = run_pipeline(stages, scene.observations, opts);

    std::filesystem::create_directories(out_dir);

    nlohmann::json j;
    j["pipeline"] = pipeline_to_string(stages);
    nlohmann::json view_ids = nlohmann::json::array();
    for (const auto& o : scene.observations.observations) view_ids.push_back(o.view_id);
    j["views"] = view_ids;

    nlohmann::json jstages = nlohmann::json::array();
    for (std::size_t k = 0; k < report.stages.size(); ++k) {
        const auto& s = report.stages[k];
        nlohmann::json js;
        js["id"] = to_string(s.id);
        js["params"] = params_to_json(s.params);
        js["depth_mode"] = s.depths.mode == DepthMode::combined ? "combined" : "separate";
        js["depths"] = std::vector<double>(s.depths.values.data(),
                                           s.depths.values.data() + s.depths.values.size());
        js["wall_time_s"] = s.wall_time_s;
        js["termination"] = s.termination;
        js["error"] = s.error;
        jstages.push_back(std::move(js));

        // Plot-ready dumps: silhouette polygon per view and the surface grid.
        const std::string prefix =
            out_dir + "/stage" + std::to_string(k) + "_" + to_string(s.id);
        for (std::size_t v = 0; v < scene.views.size(); ++v) {
            const CameraView& view = scene.views[v];
            std::string csv = "x,y\n";
            try {
                const ConvexPolygon sil =
                    silhouette(s.params, view.pose, view.intrinsics, 64, 64);
                for (const auto& p : sil.vertices)
                    csv += fmt6(p.x()) + "," + fmt6(p.y()) + "\n";
            } catch (const std::exception&) {
                // view without a silhouette: empty table
            }
            write_file(prefix + "_view" + std::to_string(v) + "_silhouette.csv", csv);
        }
        std::string surface = "x,y,z\n";
        for (const auto& w : sample_surface_grid(s.params, 32, 32))
            surface += fmt6(w.x()) + "," + fmt6(w.y()) + "," + fmt6(w.z()) + "\n";
        write_file(prefix + "_surface.csv", surface);
    }
    j["stages"] = std::move(jstages);
    j["final"] = params_to_json(report.final_params);

    write_file(out_dir + "/report.json", j.dump(2) + "\n");
    return report;
}

}  // namespace sqfit

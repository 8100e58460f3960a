#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "panomesh/metrics.hpp"
#include "panomesh/pipeline.hpp"
#include "panomesh/synth.hpp"

namespace fs = std::filesystem;
using namespace panomesh;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NoConsensus& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const NonFiniteEnergy& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DegenerateQuad& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const AtInfinity& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

RigSpec load_rig_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* allowed[] = {"scene_seed",   "scene_size",
                                        "frame_size",   "n_frames",
                                        "jitter_sigma", "articulation_amplitude",
                                        "articulation_period", "overlap_fraction",
                                        "match_grid_step"};
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in rig spec");
    }
    RigSpec spec;
    if (j.contains("scene_seed")) spec.scene_seed = j["scene_seed"].get<std::uint64_t>();
    if (j.contains("scene_size")) {
        spec.scene_w = j["scene_size"][0].get<int>();
        spec.scene_h = j["scene_size"][1].get<int>();
    }
    if (j.contains("frame_size")) {
        spec.frame_w = j["frame_size"][0].get<int>();
        spec.frame_h = j["frame_size"][1].get<int>();
    }
    if (j.contains("n_frames")) spec.n_frames = j["n_frames"].get<int>();
    if (j.contains("jitter_sigma")) spec.jitter_sigma = j["jitter_sigma"].get<double>();
    if (j.contains("articulation_amplitude"))
        spec.articulation_amplitude = j["articulation_amplitude"].get<double>();
    if (j.contains("articulation_period"))
        spec.articulation_period = j["articulation_period"].get<double>();
    if (j.contains("overlap_fraction")) spec.overlap_fraction = j["overlap_fraction"].get<double>();
    if (j.contains("match_grid_step")) spec.match_grid_step = j["match_grid_step"].get<int>();
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mesh-based joint video stabilization and stitching"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    bool verbose = false;

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        auto* opt = cmd->add_option("--config", config_path, "JSON config file");
        if (need_config) opt->required();
        cmd->add_option("--threads", threads, "worker thread count");
        cmd->add_flag("--verbose", verbose, "log progress to stderr");
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
    };

    CLI::App* cmd_pipeline = app.add_subcommand("pipeline", "two-camera stabilize + stitch");
    add_common(cmd_pipeline, true);
    CLI::App* cmd_stabilize = app.add_subcommand("stabilize", "single-stream stabilization");
    add_common(cmd_stabilize, true);

    CLI::App* cmd_metrics = app.add_subcommand("metrics", "compare two frame sequences");
    std::string metrics_input, metrics_processed;
    cmd_metrics->add_option("input", metrics_input, "original frame directory")->required();
    cmd_metrics->add_option("processed", metrics_processed, "processed frame directory")
        ->required();
    add_common(cmd_metrics, false);

    CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic two-camera rig");
    add_common(cmd_synth, true);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(cmd_pipeline) || app.got_subcommand(cmd_stabilize)) {
        const bool stab = app.got_subcommand(cmd_stabilize);
        return guarded([&]() {
            PipelineConfig cfg = load_pipeline_config(config_path);
            if (!out_dir.empty()) cfg.output = out_dir;
            if (stab)
                run_stabilize(cfg, threads, verbose);
            else
                run_pipeline(cfg, threads, verbose);
        });
    }

    if (app.got_subcommand(cmd_metrics)) {
        return guarded([&]() {
            const std::vector<ImageU8> input = load_sequence(metrics_input);
            const std::vector<ImageU8> processed = load_sequence(metrics_processed);
            if (input.size() != processed.size())
                throw SizeMismatch("sequences have different frame counts");
            MatcherConfig mcfg;
            RobustConfig rcfg;
            StabilizationReport rep;
            const auto fits = fit_frame_homographies(input, processed, mcfg, rcfg);
            rep.cropping = cropping_ratio(input, processed, fits, &rep.per_frame_cropping);
            rep.distortion = distortion(fits, &rep.per_frame_distortion);
            const std::string dir = out_dir.empty() ? "." : out_dir;
            fs::create_directories(dir);
            write_metrics_json((fs::path(dir) / "metrics.json").string(), rep, nullptr);
            if (verbose)
                std::cerr << "cropping " << rep.cropping << ", distortion " << rep.distortion
                          << "\n";
        });
    }

    // synth
    return guarded([&]() {
        const RigSpec spec = load_rig_spec(config_path);
        const std::string dir = out_dir.empty() ? "rig" : out_dir;
        const RigSequence rig = generate_rig_sequence(spec);
        write_rig(dir, rig, spec);
        if (verbose) std::cerr << "wrote " << spec.n_frames << " frames to " << dir << "\n";
    });
}

#include "panomesh/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>

#include <nlohmann/json.hpp>

#include "panomesh/parallel.hpp"
#include "panomesh/profiles.hpp"
#include "panomesh/synth.hpp"

namespace fs = std::filesystem;

namespace panomesh {

namespace {

void check_keys(const nlohmann::json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(std::string("unknown key \"") + it.key() + "\" in " + where);
    }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

Vec2 read_vec2(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(std::string(what) + " must be a [x, y] array");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::string frame_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", i);
    return buf;
}

MotionField zero_field(const MeshGrid& grid, FieldKind kind, int frame) {
    return MotionField(grid, kind, frame);
}

RobustConfig seeded(const RobustConfig& base, std::uint64_t seed, int camera, int frame) {
    RobustConfig cfg = base;
    cfg.seed = seed * 1000003ULL + static_cast<std::uint64_t>(camera) * 97561ULL +
               static_cast<std::uint64_t>(frame);
    return cfg;
}

// One intra/inter match set -> assembled vertex motion field.
MotionField field_from_matches(const MatchSet& ms, const MeshGrid& grid, FieldKind kind,
                               bool per_cell, const PropagationConfig& prop,
                               const RobustConfig& rcfg) {
    auto [inliers, gh] = reject_outliers(ms, rcfg);
    MotionField global;
    std::vector<FeatureResidual> res;
    if (per_cell) {
        const std::vector<Homography> cells = per_cell_homographies(inliers, grid, gh, prop);
        global = global_vertex_motion(grid, cells, kind, ms.frame_index);
        res = residual_motions(inliers, cells, grid);
    } else {
        global = global_vertex_motion(grid, gh, kind, ms.frame_index);
        res = residual_motions(inliers, gh);
    }
    const std::vector<Vec2> refined = propagate_and_refine(res, grid, prop);
    return assemble_field(refined, global);
}

ImageU8 canvas_to_image(const Canvas& c) { return c.pixels; }

ImageU8 crop_image(const ImageU8& img, int x0, int y0, int w, int h) {
    ImageU8 out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int sx = std::clamp(x0 + x, 0, img.width - 1);
            const int sy = std::clamp(y0 + y, 0, img.height - 1);
            const std::uint8_t* s = img.px(sx, sy);
            std::uint8_t* d = out.px(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    }
    return out;
}

ImageU8 apply_static(const ImageU8& frame, const Homography& h) {
    if (h.is_identity()) return frame;
    const Homography hinv = h.inverse();
    ImageU8 out(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const Vec2 s = apply_homography(hinv, Vec2(x, y));
            if (s.x < 0 || s.y < 0 || s.x > frame.width - 1 || s.y > frame.height - 1) continue;
            double rgb[3];
            sample_bilinear_rgb(frame, s.x, s.y, rgb);
            std::uint8_t* o = out.px(x, y);
            for (int c = 0; c < 3; ++c)
                o[c] = static_cast<std::uint8_t>(std::lround(std::clamp(rgb[c], 0.0, 255.0)));
        }
    }
    return out;
}

struct IntraResult {
    std::vector<MotionField> fields;
    int failures = 0;
};

IntraResult compute_intra_fields(const std::vector<ImageF>& grays, const MeshGrid& grid,
                                 const PipelineConfig& cfg, int camera,
                                 const std::vector<MatchSet>* external, int threads,
                                 bool verbose) {
    const int n = static_cast<int>(grays.size());
    std::vector<std::optional<MotionField>> computed(n);

    parallel_for(n - 1, threads, [&](int idx) {
        const int i = idx + 1;
        try {
            MatchSet ms;
            if (external) {
                auto it = std::find_if(external->begin(), external->end(),
                                       [&](const MatchSet& s) {
                                           return s.frame_index == i && s.camera == camera;
                                       });
                if (it == external->end()) return;
                ms = *it;
            } else {
                ms = detect_and_match(grays[i], grays[i - 1], std::nullopt, cfg.matcher);
            }
            ms.frame_index = i;
            ms.camera = camera;
            computed[i] = field_from_matches(ms, grid, FieldKind::Intra, true, cfg.propagation,
                                             seeded(cfg.robust, cfg.seed, camera, i));
        } catch (const NoConsensus&) {
        } catch (const TooFewPairs&) {
        } catch (const EmptyFrame&) {
        } catch (const DegenerateInput&) {
        }
    });

    IntraResult out;
    out.fields.push_back(zero_field(grid, FieldKind::Intra, 0));
    for (int i = 1; i < n; ++i) {
        if (computed[i]) {
            out.fields.push_back(std::move(*computed[i]));
        } else {
            ++out.failures;
            if (verbose)
                std::cerr << "intra matching failed for camera " << camera << " frame " << i
                          << "; reusing previous field\n";
            MotionField prev = out.fields.back();
            prev.frame_index = i;
            out.fields.push_back(std::move(prev));
        }
    }
    return out;
}

void write_trajectories(const std::string& path, const std::vector<const VertexProfileSet*>& sets) {
    export_profiles_csv(path, sets);
}

}  // namespace

std::vector<ImageU8> load_sequence(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("input directory not found: " + dir);
    static const std::regex pat(R"(\d{6}\.png)");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, pat)) names.push_back(entry.path().string());
    }
    if (names.empty()) throw DataError("no numbered frames in " + dir);
    std::sort(names.begin(), names.end());
    std::vector<ImageU8> frames;
    frames.reserve(names.size());
    for (const std::string& p : names) frames.push_back(read_image(p));
    for (const ImageU8& f : frames) {
        if (f.width != frames.front().width || f.height != frames.front().height)
            throw SizeMismatch("frames in " + dir + " have differing sizes");
    }
    return frames;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    check_keys(j, "config root",
               {"inputs", "output", "seed", "statics", "mesh", "matcher", "propagation",
                "optimizer", "robust", "blend", "canvas", "overlap_fraction", "nominal_b_to_a",
                "match_files"});

    PipelineConfig cfg;
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (base / p).string();
    };

    if (!j.contains("inputs") || !j.at("inputs").is_array() || j.at("inputs").empty())
        throw ConfigError("config requires a non-empty \"inputs\" array");
    for (const auto& s : j.at("inputs")) {
        const std::string dir = resolve(s.get<std::string>());
        if (!fs::is_directory(dir)) throw ConfigError("input path does not exist: " + dir);
        cfg.inputs.push_back(dir);
    }
    read_field(j, "output", cfg.output);
    read_field(j, "seed", cfg.seed);
    read_field(j, "overlap_fraction", cfg.overlap_fraction);
    if (cfg.overlap_fraction <= 0 || cfg.overlap_fraction >= 1)
        throw ConfigError("overlap_fraction must be in (0,1)");

    if (j.contains("statics")) {
        for (const auto& row : j.at("statics")) {
            if (!row.is_array() || row.size() != 9)
                throw ConfigError("each static homography must be a 9-element array");
            Homography h;
            for (int k = 0; k < 9; ++k) h.h[k] = row[k].get<double>();
            cfg.statics.push_back(h);
        }
        if (cfg.statics.size() != cfg.inputs.size())
            throw ConfigError("statics count must match inputs count");
    }

    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        check_keys(m, "mesh", {"rows", "cols"});
        read_field(m, "rows", cfg.mesh_rows);
        read_field(m, "cols", cfg.mesh_cols);
        if (cfg.mesh_rows < 1 || cfg.mesh_cols < 1) throw ConfigError("mesh must be at least 1x1");
    }
    if (j.contains("matcher")) {
        const auto& m = j.at("matcher");
        check_keys(m, "matcher",
                   {"detect_rows", "detect_cols", "corners_per_cell", "block_radius",
                    "search_radius", "min_zncc"});
        read_field(m, "detect_rows", cfg.matcher.detect_rows);
        read_field(m, "detect_cols", cfg.matcher.detect_cols);
        read_field(m, "corners_per_cell", cfg.matcher.corners_per_cell);
        read_field(m, "block_radius", cfg.matcher.block_radius);
        read_field(m, "search_radius", cfg.matcher.search_radius);
        read_field(m, "min_zncc", cfg.matcher.min_zncc);
    }
    if (j.contains("propagation")) {
        const auto& p = j.at("propagation");
        check_keys(p, "propagation",
                   {"ellipse_rx", "ellipse_ry", "min_pairs_per_cell", "spatial_median_window"});
        read_field(p, "ellipse_rx", cfg.propagation.ellipse_rx);
        read_field(p, "ellipse_ry", cfg.propagation.ellipse_ry);
        read_field(p, "min_pairs_per_cell", cfg.propagation.min_pairs_per_cell);
        read_field(p, "spatial_median_window", cfg.propagation.spatial_median_window);
        if (cfg.propagation.ellipse_rx <= 0 || cfg.propagation.ellipse_ry <= 0)
            throw ConfigError("ellipse semi-axes must be positive");
        const int w = cfg.propagation.spatial_median_window;
        if (w != 1 && w != 3 && w != 5) throw ConfigError("spatial_median_window must be 1, 3 or 5");
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        check_keys(o, "optimizer",
                   {"sigma", "lambda_t", "beta", "jacobi_iters", "outer_iters", "tol"});
        read_field(o, "sigma", cfg.optimizer.sigma);
        read_field(o, "lambda_t", cfg.optimizer.lambda_t);
        read_field(o, "beta", cfg.optimizer.beta);
        read_field(o, "jacobi_iters", cfg.optimizer.jacobi_iters);
        read_field(o, "outer_iters", cfg.optimizer.outer_iters);
        read_field(o, "tol", cfg.optimizer.tol);
        if (cfg.optimizer.sigma < 1 || cfg.optimizer.lambda_t < 0 || cfg.optimizer.beta < 0 ||
            cfg.optimizer.tol <= 0)
            throw ConfigError("optimizer config violates sigma>=1, lambda_t>=0, beta>=0, tol>0");
    }
    if (j.contains("robust")) {
        const auto& r = j.at("robust");
        check_keys(r, "robust",
                   {"max_iterations", "inlier_threshold", "confidence", "irls_rounds"});
        read_field(r, "max_iterations", cfg.robust.max_iterations);
        read_field(r, "inlier_threshold", cfg.robust.inlier_threshold);
        read_field(r, "confidence", cfg.robust.confidence);
        read_field(r, "irls_rounds", cfg.robust.irls_rounds);
    }
    if (j.contains("blend")) {
        const auto& b = j.at("blend");
        check_keys(b, "blend", {"mode", "levels"});
        std::string mode = "feather";
        read_field(b, "mode", mode);
        if (mode == "feather")
            cfg.blend_mode = BlendMode::Feather;
        else if (mode == "multiband")
            cfg.blend_mode = BlendMode::Multiband;
        else
            throw ConfigError("blend mode must be feather or multiband");
        read_field(b, "levels", cfg.blend_levels);
    }
    if (j.contains("canvas")) {
        const auto& c = j.at("canvas");
        check_keys(c, "canvas", {"width", "height", "offsets"});
        read_field(c, "width", cfg.canvas_w);
        read_field(c, "height", cfg.canvas_h);
        if (c.contains("offsets"))
            for (const auto& o : c.at("offsets")) cfg.offsets.push_back(read_vec2(o, "offset"));
    }
    if (j.contains("nominal_b_to_a"))
        cfg.nominal_b_to_a = read_vec2(j.at("nominal_b_to_a"), "nominal_b_to_a");
    if (j.contains("match_files")) {
        const auto& m = j.at("match_files");
        check_keys(m, "match_files", {"intra_a", "intra_b", "inter"});
        std::string a, b, x;
        read_field(m, "intra_a", a);
        read_field(m, "intra_b", b);
        read_field(m, "inter", x);
        if (!a.empty()) cfg.match_intra_a = resolve(a);
        if (!b.empty()) cfg.match_intra_b = resolve(b);
        if (!x.empty()) cfg.match_inter = resolve(x);
        for (const std::string& p : {cfg.match_intra_a, cfg.match_intra_b, cfg.match_inter})
            if (!p.empty() && !fs::is_regular_file(p))
                throw ConfigError("match file does not exist: " + p);
    }
    return cfg;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, int threads, bool verbose) {
    if (cfg.inputs.size() != 2)
        throw ConfigError("pipeline requires exactly two input streams");
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<ImageU8> frames_a = load_sequence(cfg.inputs[0]);
    std::vector<ImageU8> frames_b = load_sequence(cfg.inputs[1]);
    if (frames_a.size() != frames_b.size())
        throw SizeMismatch("camera streams have different frame counts");
    const int n = static_cast<int>(frames_a.size());
    if (n < 2) throw TooShort("pipeline needs at least 2 frames per stream");
    const int fw = frames_a.front().width, fh = frames_a.front().height;

    if (!cfg.statics.empty()) {
        for (int i = 0; i < n; ++i) {
            frames_a[i] = apply_static(frames_a[i], cfg.statics[0]);
            frames_b[i] = apply_static(frames_b[i], cfg.statics[1]);
        }
    }

    std::vector<ImageF> gray_a(n), gray_b(n);
    parallel_for(n, threads, [&](int i) {
        gray_a[i] = to_grayscale(frames_a[i]);
        gray_b[i] = to_grayscale(frames_b[i]);
    });

    const MeshGrid grid(fw, fh, cfg.mesh_rows, cfg.mesh_cols);
    const Vec2 t_nom = cfg.nominal_b_to_a.value_or(Vec2(fw * (1.0 - cfg.overlap_fraction), 0.0));

    // externally supplied matches, if any
    std::vector<MatchSet> ext_intra_a, ext_intra_b, ext_inter;
    if (!cfg.match_intra_a.empty()) ext_intra_a = load_matches(cfg.match_intra_a, MatchKind::Intra);
    if (!cfg.match_intra_b.empty()) ext_intra_b = load_matches(cfg.match_intra_b, MatchKind::Intra);
    if (!cfg.match_inter.empty()) ext_inter = load_matches(cfg.match_inter, MatchKind::Inter);

    // stage 2-3: intra motion fields
    IntraResult intra_a = compute_intra_fields(gray_a, grid, cfg, 0,
                                               ext_intra_a.empty() ? nullptr : &ext_intra_a,
                                               threads, verbose);
    IntraResult intra_b = compute_intra_fields(gray_b, grid, cfg, 1,
                                               ext_intra_b.empty() ? nullptr : &ext_intra_b,
                                               threads, verbose);

    // trajectories are needed now: the relative drift between the cameras
    // predicts where the inter search window must be centered per frame
    const VertexProfileSet traj_a = accumulate_trajectories(intra_a.fields, 0);
    const VertexProfileSet traj_b = accumulate_trajectories(intra_b.fields, 1);
    std::vector<Vec2> inter_drift(n);
    for (int i = 0; i < n; ++i) {
        Vec2 s{0, 0};
        for (int g = 0; g < grid.vertex_count(); ++g) s += traj_a.at(i, g) - traj_b.at(i, g);
        inter_drift[i] = s * (1.0 / grid.vertex_count());
    }

    // stage 3: inter motion fields, matched in camera A coordinates
    std::vector<std::optional<MotionField>> inter_raw(n);
    std::vector<MatchSet> score_matches(n);  // src in A coords, dst in B coords
    {
        Rect roi;
        roi.w = std::max(1, static_cast<int>(std::lround(fw * cfg.overlap_fraction)));
        roi.x = fw - roi.w;
        roi.y = 0;
        roi.h = fh;

        parallel_for(n, threads, [&](int i) {
            try {
                MatchSet raw;
                if (!ext_inter.empty()) {
                    auto it = std::find_if(ext_inter.begin(), ext_inter.end(),
                                           [&](const MatchSet& s) { return s.frame_index == i; });
                    if (it == ext_inter.end()) return;
                    raw = *it;
                } else {
                    MatcherConfig inter_cfg = cfg.matcher;
                    inter_cfg.search_center_offset = Vec2(0, 0) - t_nom - inter_drift[i];
                    raw = detect_and_match(gray_a[i], gray_b[i], roi, inter_cfg);
                    raw.kind = MatchKind::Inter;
                    raw.frame_index = i;
                    raw.partner = 1;
                }
                // map dst into A coordinates via the nominal transform; the
                // remaining motion is the misalignment field
                MatchSet mapped = raw;
                for (std::size_t k = 0; k < mapped.pairs.size(); ++k) {
                    mapped.pairs[k].dst += t_nom;
                    mapped.motions[k] = mapped.pairs[k].src - mapped.pairs[k].dst;
                }
                auto [inliers, gh] = reject_outliers(mapped, seeded(cfg.robust, cfg.seed, 2, i));
                MotionField global = global_vertex_motion(grid, gh, FieldKind::Inter, i);
                const std::vector<FeatureResidual> res = residual_motions(inliers, gh);
                const std::vector<Vec2> refined = propagate_and_refine(res, grid, cfg.propagation);
                inter_raw[i] = assemble_field(refined, global);

                MatchSet score = inliers;
                for (auto& pp : score.pairs) pp.dst -= t_nom;  // back to B coordinates
                score_matches[i] = std::move(score);
            } catch (const NoConsensus&) {
            } catch (const TooFewPairs&) {
            } catch (const EmptyFrame&) {
            } catch (const DegenerateInput&) {
            }
        });
    }

    int failures = intra_a.failures + intra_b.failures;
    std::vector<MotionField> inter_a_fields, inter_b_fields;
    for (int i = 0; i < n; ++i) {
        MotionField raw;
        if (inter_raw[i]) {
            raw = std::move(*inter_raw[i]);
        } else {
            ++failures;
            if (verbose) std::cerr << "inter matching failed for frame " << i << "\n";
            raw = inter_a_fields.empty() ? zero_field(grid, FieldKind::Inter, i)
                                         : inter_a_fields.back();
            for (auto& v : raw.vectors) v = v * -2.0;  // undo the A-side scaling below
            raw.frame_index = i;
        }
        // split the misalignment between the two cameras: A moves by -1/2,
        // B by +1/2, so the warped pair closes the full gap
        MotionField fa = raw, fb = raw;
        for (auto& v : fa.vectors) v = v * -0.5;
        for (auto& v : fb.vectors) v = v * 0.5;
        inter_a_fields.push_back(std::move(fa));
        inter_b_fields.push_back(std::move(fb));
    }

    const int total_sets = 2 * (n - 1) + n;
    if (failures * 10 > total_sets)
        throw NoConsensus("matching failed on more than 10% of frames (" +
                          std::to_string(failures) + "/" + std::to_string(total_sets) + ")");

    // stage 4: profiles and joint optimization
    const VertexProfileSet stitch_a = collect_stitch_profiles(inter_a_fields, 0);
    const VertexProfileSet stitch_b = collect_stitch_profiles(inter_b_fields, 1);
    const JointSolution sol = unified_optimize(traj_a, traj_b, stitch_a, stitch_b, cfg.optimizer);

    // stage 5: warp and composite
    const std::vector<WarpMap> warps_a = build_warp_maps(sol.stitch_a, sol.smoothed_a, traj_a);
    const std::vector<WarpMap> warps_b = build_warp_maps(sol.stitch_b, sol.smoothed_b, traj_b);

    Vec2 off_a(0, 0), off_b = t_nom;
    if (cfg.offsets.size() == 2) {
        off_a = cfg.offsets[0];
        off_b = cfg.offsets[1];
    }
    int cw = cfg.canvas_w, chh = cfg.canvas_h;
    if (cw <= 0 || chh <= 0) {
        cw = static_cast<int>(std::ceil(std::max(off_a.x, off_b.x) + fw));
        chh = static_cast<int>(std::ceil(std::max(off_a.y, off_b.y) + fh));
    }

    fs::create_directories(fs::path(cfg.output) / "frames");
    std::vector<ImageU8> cropped_a(n);
    parallel_for(n, threads, [&](int i) {
        const Canvas ca = warp_frame(frames_a[i], warps_a[i], cw, chh, off_a);
        const Canvas cb = warp_frame(frames_b[i], warps_b[i], cw, chh, off_b);
        const Canvas pano = blend({ca, cb}, cfg.blend_mode, cfg.blend_levels);
        write_image((fs::path(cfg.output) / "frames" / frame_name(i)).string(),
                    canvas_to_image(pano));
        cropped_a[i] = crop_image(canvas_to_image(ca), static_cast<int>(std::lround(off_a.x)),
                                  static_cast<int>(std::lround(off_a.y)), fw, fh);
    });

    // metrics and reports
    PipelineResult result;
    result.frames = n;
    result.stability_input = 0.5 * (stability(traj_a) + stability(traj_b));
    result.report.stability = 0.5 * (stability(sol.smoothed_a) + stability(sol.smoothed_b));

    MatcherConfig metric_matcher;  // defaults; independent of pipeline matcher tuning
    // seed the block search with the mean warp displacement so large
    // stabilization shifts stay inside the search radius
    std::vector<Vec2> centers(n, Vec2{0, 0});
    for (int i = 0; i < n; ++i) {
        Vec2 mean{0, 0};
        for (const Vec2& d : warps_a[i].displacement) mean += d;
        centers[i] = mean * (1.0 / static_cast<double>(warps_a[i].displacement.size()));
    }
    const auto fits = fit_frame_homographies(frames_a, cropped_a, metric_matcher,
                                             seeded(cfg.robust, cfg.seed, 3, 0), &centers);
    result.report.cropping =
        cropping_ratio(frames_a, cropped_a, fits, &result.report.per_frame_cropping);
    result.report.distortion = distortion(fits, &result.report.per_frame_distortion);

    std::vector<MatchSet> score_sets;
    for (int i = 0; i < n; ++i)
        if (!score_matches[i].pairs.empty()) score_sets.push_back(score_matches[i]);
    result.stitch = stitching_score(warps_a, warps_b, score_sets, off_a, off_b);
    result.warps_a = warps_a;
    result.warps_b = warps_b;
    result.offset_a = off_a;
    result.offset_b = off_b;

    write_metrics_json((fs::path(cfg.output) / "metrics.json").string(), result.report,
                       &result.stitch, result.stability_input);
    write_trajectories((fs::path(cfg.output) / "trajectories.csv").string(),
                       {&traj_a, &traj_b, &stitch_a, &stitch_b, &sol.smoothed_a, &sol.smoothed_b,
                        &sol.stitch_a, &sol.stitch_b});
    export_energy_csv((fs::path(cfg.output) / "energy.csv").string(), sol.energy_trace);

    const auto t_end = std::chrono::steady_clock::now();
    result.seconds_per_frame =
        std::chrono::duration<double>(t_end - t_start).count() / static_cast<double>(n);
    if (verbose)
        std::cerr << "pipeline: " << n << " frames, " << result.seconds_per_frame
                  << " s/frame, stability " << result.report.stability << "\n";
    return result;
}

PipelineResult run_stabilize(const PipelineConfig& cfg, int threads, bool verbose) {
    if (cfg.inputs.size() != 1)
        throw ConfigError("stabilize requires exactly one input stream");
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<ImageU8> frames = load_sequence(cfg.inputs[0]);
    const int n = static_cast<int>(frames.size());
    if (n < 2) throw TooShort("stabilize needs at least 2 frames");
    const int fw = frames.front().width, fh = frames.front().height;

    if (!cfg.statics.empty())
        for (int i = 0; i < n; ++i) frames[i] = apply_static(frames[i], cfg.statics[0]);

    std::vector<ImageF> gray(n);
    parallel_for(n, threads, [&](int i) { gray[i] = to_grayscale(frames[i]); });

    const MeshGrid grid(fw, fh, cfg.mesh_rows, cfg.mesh_cols);
    std::vector<MatchSet> ext_intra;
    if (!cfg.match_intra_a.empty()) ext_intra = load_matches(cfg.match_intra_a, MatchKind::Intra);

    IntraResult intra = compute_intra_fields(gray, grid, cfg, 0,
                                             ext_intra.empty() ? nullptr : &ext_intra, threads,
                                             verbose);
    if (intra.failures * 10 > n - 1)
        throw NoConsensus("matching failed on more than 10% of frames");

    const VertexProfileSet traj = accumulate_trajectories(intra.fields, 0);
    const VertexProfileSet smoothed = smooth_trajectories(traj, cfg.optimizer);
    const std::vector<WarpMap> warps = build_warp_maps(smoothed, traj);

    fs::create_directories(fs::path(cfg.output) / "frames");
    std::vector<ImageU8> outputs(n);
    parallel_for(n, threads, [&](int i) {
        const Canvas c = warp_frame(frames[i], warps[i], fw, fh, Vec2(0, 0));
        outputs[i] = canvas_to_image(c);
        write_image((fs::path(cfg.output) / "frames" / frame_name(i)).string(), outputs[i]);
    });

    PipelineResult result;
    result.frames = n;
    result.stability_input = stability(traj);
    result.report.stability = stability(smoothed);
    result.warps_a = warps;

    MatcherConfig metric_matcher;
    std::vector<Vec2> centers(n, Vec2{0, 0});
    for (int i = 0; i < n; ++i) {
        Vec2 mean{0, 0};
        for (const Vec2& d : warps[i].displacement) mean += d;
        centers[i] = mean * (1.0 / static_cast<double>(warps[i].displacement.size()));
    }
    const auto fits = fit_frame_homographies(frames, outputs, metric_matcher,
                                             seeded(cfg.robust, cfg.seed, 3, 0), &centers);
    result.report.cropping =
        cropping_ratio(frames, outputs, fits, &result.report.per_frame_cropping);
    result.report.distortion = distortion(fits, &result.report.per_frame_distortion);

    write_metrics_json((fs::path(cfg.output) / "metrics.json").string(), result.report, nullptr,
                       result.stability_input);
    write_trajectories((fs::path(cfg.output) / "trajectories.csv").string(), {&traj, &smoothed});
    export_energy_csv((fs::path(cfg.output) / "energy.csv").string(),
                      {stabilization_energy(smoothed, traj, cfg.optimizer)});

    const auto t_end = std::chrono::steady_clock::now();
    result.seconds_per_frame =
        std::chrono::duration<double>(t_end - t_start).count() / static_cast<double>(n);
    if (verbose)
        std::cerr << "stabilize: " << n << " frames, stability " << result.stability_input
                  << " -> " << result.report.stability << "\n";
    return result;
}

}  // namespace panomesh

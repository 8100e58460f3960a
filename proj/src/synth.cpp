#include "panomesh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace panomesh {

namespace {

// Bilinearly interpolated random lattice, one layer of the value noise.
struct NoiseOctave {
    int cell;
    int nx, ny;
    std::vector<float> lattice;

    NoiseOctave(std::mt19937_64& rng, int w, int h, int cell_size) : cell(cell_size) {
        nx = w / cell + 2;
        ny = h / cell + 2;
        lattice.resize(static_cast<std::size_t>(nx) * ny);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (auto& v : lattice) v = u(rng);
    }
    float at(int x, int y) const {
        const float fx = static_cast<float>(x) / cell;
        const float fy = static_cast<float>(y) / cell;
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const float ux = fx - x0, uy = fy - y0;
        const float* row0 = lattice.data() + static_cast<std::size_t>(y0) * nx + x0;
        const float* row1 = row0 + nx;
        const float top = row0[0] * (1 - ux) + row0[1] * ux;
        const float bot = row1[0] * (1 - ux) + row1[1] * ux;
        return top * (1 - uy) + bot * uy;
    }
};

std::string frame_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", i);
    return buf;
}

}  // namespace

ImageU8 generate_scene(std::uint64_t seed, int w, int h) {
    if (w < 256 || h < 256) throw TooSmall("scene must be at least 256x256");
    std::mt19937_64 rng(seed);

    static const int cells[4] = {64, 32, 16, 8};
    static const float amps[4] = {0.35f, 0.25f, 0.25f, 0.15f};
    std::vector<NoiseOctave> oct[3];
    for (int c = 0; c < 3; ++c)
        for (int o = 0; o < 4; ++o) oct[c].emplace_back(rng, w, h, cells[o]);

    ImageU8 img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t* p = img.px(x, y);
            for (int c = 0; c < 3; ++c) {
                float v = 0;
                for (int o = 0; o < 4; ++o) v += amps[o] * oct[c][o].at(x, y);
                p[c] = static_cast<std::uint8_t>(std::clamp(v * 255.0f, 0.0f, 255.0f));
            }
        }
    }

    // high-contrast blobs keep every tile textured even where noise is flat
    const int n_blobs = (w * h) / 4096;
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), ur(4, 16), uc(0, 1);
    for (int b = 0; b < n_blobs; ++b) {
        const int cx = ux(rng), cy = uy(rng), r = ur(rng);
        std::uint8_t color[3];
        for (int c = 0; c < 3; ++c) color[c] = uc(rng) ? 230 + c * 5 : 20 + c * 3;
        for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y) {
            for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
                const int dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy > r * r) continue;
                std::uint8_t* p = img.px(x, y);
                for (int c = 0; c < 3; ++c)
                    p[c] = static_cast<std::uint8_t>((p[c] + 2 * color[c]) / 3);
            }
        }
    }
    return img;
}

RigSequence generate_rig_sequence(const RigSpec& spec) {
    if (spec.overlap_fraction <= 0 || spec.overlap_fraction >= 1)
        throw ConfigError("overlap_fraction must be in (0,1)");
    if (spec.n_frames < 1) throw ConfigError("n_frames must be >= 1");

    const ImageU8 scene = generate_scene(spec.scene_seed, spec.scene_w, spec.scene_h);
    const double span = spec.frame_w * (2.0 - spec.overlap_fraction);
    const double ax0 = (spec.scene_w - span) / 2.0;
    const double ay0 = (spec.scene_h - spec.frame_h) / 2.0;
    const double bx0 = ax0 + spec.frame_w * (1.0 - spec.overlap_fraction);
    const double period =
        spec.articulation_period > 0 ? spec.articulation_period : spec.n_frames / 2.0;

    std::mt19937_64 rng(spec.scene_seed + 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> step(0.0, 1.0);

    RigSequence rig;
    std::vector<Vec2> pos_a(spec.n_frames), pos_b(spec.n_frames);
    Vec2 ja{0, 0}, jb{0, 0};
    for (int i = 0; i < spec.n_frames; ++i) {
        if (i > 0 && spec.jitter_sigma > 0) {
            ja += {spec.jitter_sigma * step(rng), spec.jitter_sigma * step(rng)};
            jb += {spec.jitter_sigma * step(rng), spec.jitter_sigma * step(rng)};
        }
        const double artic =
            spec.articulation_amplitude * std::sin(2.0 * M_PI * i / period);
        pos_a[i] = Vec2(ax0, ay0) + ja;
        pos_b[i] = Vec2(bx0, ay0) + jb + Vec2(artic, 0);
        rig.gt.jitter_a.push_back(ja);
        rig.gt.jitter_b.push_back(jb + Vec2(artic, 0));
        rig.gt.inter_b_to_a.push_back(pos_b[i] - pos_a[i]);

        for (const Vec2& p : {pos_a[i], pos_b[i]}) {
            if (p.x < 0 || p.y < 0 || p.x + spec.frame_w > spec.scene_w ||
                p.y + spec.frame_h > spec.scene_h)
                throw WindowOutOfScene("camera window leaves the scene at frame " +
                                       std::to_string(i));
        }
    }

    auto render = [&](const Vec2& pos) {
        ImageU8 f(spec.frame_w, spec.frame_h);
        for (int y = 0; y < spec.frame_h; ++y) {
            for (int x = 0; x < spec.frame_w; ++x) {
                double rgb[3];
                sample_bilinear_rgb(scene, pos.x + x, pos.y + y, rgb);
                std::uint8_t* p = f.px(x, y);
                for (int c = 0; c < 3; ++c)
                    p[c] = static_cast<std::uint8_t>(std::lround(std::clamp(rgb[c], 0.0, 255.0)));
            }
        }
        return f;
    };
    for (int i = 0; i < spec.n_frames; ++i) {
        rig.frames_a.push_back(render(pos_a[i]));
        rig.frames_b.push_back(render(pos_b[i]));
    }

    // exact intra matches: src in frame i, dst the same scene point in i-1
    const int margin = 16;
    auto make_intra = [&](const std::vector<Vec2>& pos, int camera) {
        std::vector<MatchSet> sets;
        for (int i = 1; i < spec.n_frames; ++i) {
            MatchSet ms;
            ms.kind = MatchKind::Intra;
            ms.frame_index = i;
            ms.camera = camera;
            const Vec2 delta = pos[i] - pos[i - 1];
            for (int y = margin; y <= spec.frame_h - margin; y += spec.match_grid_step) {
                for (int x = margin; x <= spec.frame_w - margin; x += spec.match_grid_step) {
                    const Vec2 src(x, y);
                    const Vec2 dst = src + delta;
                    if (dst.x < 0 || dst.y < 0 || dst.x > spec.frame_w - 1 ||
                        dst.y > spec.frame_h - 1)
                        continue;
                    ms.pairs.push_back({src, dst});
                    ms.motions.push_back(src - dst);
                }
            }
            sets.push_back(std::move(ms));
        }
        return sets;
    };
    rig.gt.intra_a = make_intra(pos_a, 0);
    rig.gt.intra_b = make_intra(pos_b, 1);

    // exact inter matches: src in A, dst the same scene point in B
    for (int i = 0; i < spec.n_frames; ++i) {
        MatchSet ms;
        ms.kind = MatchKind::Inter;
        ms.frame_index = i;
        ms.camera = 0;
        ms.partner = 1;
        const Vec2 t = rig.gt.inter_b_to_a[i];  // p_a = p_b + t
        for (int y = margin; y <= spec.frame_h - margin; y += spec.match_grid_step) {
            for (int x = margin; x <= spec.frame_w - margin; x += spec.match_grid_step) {
                const Vec2 src(x, y);
                const Vec2 dst = src - t;
                if (dst.x < margin || dst.y < margin || dst.x > spec.frame_w - margin ||
                    dst.y > spec.frame_h - margin)
                    continue;
                ms.pairs.push_back({src, dst});
                ms.motions.push_back(src - dst);
            }
        }
        rig.gt.inter.push_back(std::move(ms));
    }
    return rig;
}

void write_matches_json(const std::string& path, const std::vector<MatchSet>& sets,
                        MatchKind kind, int frame_w, int frame_h) {
    nlohmann::json doc;
    doc["frame_size"] = {frame_w, frame_h};
    doc["kind"] = kind == MatchKind::Intra ? "intra" : "inter";
    doc["records"] = nlohmann::json::array();
    for (const MatchSet& ms : sets) {
        nlohmann::json rec;
        rec["frame"] = ms.frame_index;
        rec["camera"] = ms.camera;
        if (ms.partner >= 0) rec["partner"] = ms.partner;
        nlohmann::json pairs = nlohmann::json::array();
        for (const PointPair& pp : ms.pairs)
            pairs.push_back({pp.src.x, pp.src.y, pp.dst.x, pp.dst.y});
        rec["pairs"] = std::move(pairs);
        doc["records"].push_back(std::move(rec));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

void write_rig(const std::string& out_dir, const RigSequence& rig, const RigSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "cam_a");
    fs::create_directories(fs::path(out_dir) / "cam_b");
    for (std::size_t i = 0; i < rig.frames_a.size(); ++i) {
        write_image((fs::path(out_dir) / "cam_a" / frame_name(static_cast<int>(i))).string(),
                    rig.frames_a[i]);
        write_image((fs::path(out_dir) / "cam_b" / frame_name(static_cast<int>(i))).string(),
                    rig.frames_b[i]);
    }
    write_matches_json((fs::path(out_dir) / "matches_intra_a.json").string(), rig.gt.intra_a,
                       MatchKind::Intra, spec.frame_w, spec.frame_h);
    write_matches_json((fs::path(out_dir) / "matches_intra_b.json").string(), rig.gt.intra_b,
                       MatchKind::Intra, spec.frame_w, spec.frame_h);
    write_matches_json((fs::path(out_dir) / "matches_inter.json").string(), rig.gt.inter,
                       MatchKind::Inter, spec.frame_w, spec.frame_h);

    nlohmann::json j;
    j["n_frames"] = spec.n_frames;
    j["frame_size"] = {spec.frame_w, spec.frame_h};
    auto vecs = [](const std::vector<Vec2>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const Vec2& p : v) a.push_back({p.x, p.y});
        return a;
    };
    j["jitter_a"] = vecs(rig.gt.jitter_a);
    j["jitter_b"] = vecs(rig.gt.jitter_b);
    j["inter_b_to_a"] = vecs(rig.gt.inter_b_to_a);
    j["match_files"] = {{"intra_a", "matches_intra_a.json"},
                        {"intra_b", "matches_intra_b.json"},
                        {"inter", "matches_inter.json"}};
    std::ofstream out((fs::path(out_dir) / "ground_truth.json").string());
    if (!out) throw DataError("cannot write ground_truth.json");
    out << j.dump(2) << '\n';
}

}  // namespace panomesh

#include "panomesh/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include <nlohmann/json.hpp>

namespace panomesh {

namespace {

// Affine 2x2 block of a homography, normalized so the projective scale is 1.
Eigen::Matrix2d affine_block(const Homography& h) {
    double s = h.h[8];
    if (std::abs(s) < 1e-12) s = 1.0;
    Eigen::Matrix2d m;
    m << h.h[0] / s, h.h[1] / s, h.h[3] / s, h.h[4] / s;
    return m;
}

double valid_area_fraction(const ImageU8& img) {
    std::size_t valid = 0;
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        if (img.data[i] || img.data[i + 1] || img.data[i + 2]) ++valid;
    }
    return static_cast<double>(valid) / (static_cast<double>(img.width) * img.height);
}

}  // namespace

std::vector<std::optional<Homography>> fit_frame_homographies(
    const std::vector<ImageU8>& input, const std::vector<ImageU8>& output,
    const MatcherConfig& mcfg, const RobustConfig& rcfg,
    const std::vector<Vec2>* search_centers) {
    if (input.size() != output.size())
        throw SizeMismatch("input and output sequences have different lengths");
    if (search_centers && search_centers->size() != input.size())
        throw SizeMismatch("one search center per frame is required");
    std::vector<std::optional<Homography>> fits(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        try {
            const ImageF ga = to_grayscale(input[i]);
            const ImageF gb = to_grayscale(output[i]);
            MatcherConfig frame_cfg = mcfg;
            if (search_centers) frame_cfg.search_center_offset = (*search_centers)[i];
            const MatchSet ms = detect_and_match(ga, gb, std::nullopt, frame_cfg);
            if (ms.pairs.size() < 8) continue;
            fits[i] = robust_homography(ms.pairs, rcfg).model;
        } catch (const Error&) {
            // leave as nullopt; callers fall back per frame
        }
    }
    return fits;
}

double cropping_ratio(const std::vector<ImageU8>& input, const std::vector<ImageU8>& output,
                      const std::vector<std::optional<Homography>>& fits,
                      std::vector<double>* per_frame) {
    if (input.size() != output.size() || fits.size() != input.size())
        throw SizeMismatch("sequence lengths differ");
    if (input.empty()) throw EmptyInput("no frames");
    double sum = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        double r;
        if (fits[i]) {
            const Eigen::Matrix2d m = affine_block(*fits[i]);
            r = std::min(1.0, std::sqrt(std::abs(m.determinant())));
        } else {
            r = valid_area_fraction(output[i]);
        }
        if (per_frame) per_frame->push_back(r);
        sum += r;
    }
    return sum / static_cast<double>(fits.size());
}

double distortion(const std::vector<std::optional<Homography>>& fits,
                  std::vector<double>* per_frame) {
    if (fits.empty()) throw EmptyInput("no frames");
    double min_d = 1.0;
    for (const auto& fit : fits) {
        double d = 1.0;
        if (fit) {
            const Eigen::Matrix2d m = affine_block(*fit);
            const Eigen::EigenSolver<Eigen::Matrix2d> es(m);
            const double a = std::abs(es.eigenvalues()[0]);
            const double b = std::abs(es.eigenvalues()[1]);
            const double big = std::max(a, b);
            d = big < 1e-12 ? 0.0 : std::min(a, b) / big;
        }
        if (per_frame) per_frame->push_back(d);
        min_d = std::min(min_d, d);
    }
    return min_d;
}

double stability(const VertexProfileSet& trajectories) {
    const int n = trajectories.frames;
    if (n < 8) throw TooShort("stability needs at least 8 frames");
    const int len = n - 1;          // differenced length
    const int top = len / 2;        // highest evaluated bin
    const int lo_hi = std::min(6, top);

    double sum = 0.0;
    int count = 0;
    std::vector<double> diff(len);
    for (int g = 0; g < trajectories.grid.vertex_count(); ++g) {
        for (int comp = 0; comp < 2; ++comp) {
            for (int i = 0; i < len; ++i) {
                const double* a = trajectories.frame_data(i) + 2 * g;
                const double* b = trajectories.frame_data(i + 1) + 2 * g;
                diff[i] = b[comp] - a[comp];
            }
            double low = 0.0, total = 0.0;
            for (int k = 2; k <= top; ++k) {
                double re = 0.0, im = 0.0;
                for (int i = 0; i < len; ++i) {
                    const double ang = -2.0 * M_PI * k * i / len;
                    re += diff[i] * std::cos(ang);
                    im += diff[i] * std::sin(ang);
                }
                const double e = re * re + im * im;
                total += e;
                if (k <= lo_hi) low += e;
            }
            sum += total < 1e-12 ? 1.0 : low / total;
            ++count;
        }
    }
    return sum / count;
}

Vec2 interpolate_displacement(const WarpMap& wm, const Vec2& p) {
    const MeshGrid& g = wm.grid;
    const int c = g.cell_col(p.x);
    const int r = g.cell_row(p.y);
    const double u = std::clamp(p.x / g.cell_width() - c, 0.0, 1.0);
    const double v = std::clamp(p.y / g.cell_height() - r, 0.0, 1.0);
    const Vec2 d00 = wm.displacement[g.vertex_index(r, c)];
    const Vec2 d10 = wm.displacement[g.vertex_index(r, c + 1)];
    const Vec2 d01 = wm.displacement[g.vertex_index(r + 1, c)];
    const Vec2 d11 = wm.displacement[g.vertex_index(r + 1, c + 1)];
    return (1 - u) * (1 - v) * d00 + u * (1 - v) * d10 + (1 - u) * v * d01 + u * v * d11;
}

StitchReport stitching_score(const std::vector<WarpMap>& warps_a,
                             const std::vector<WarpMap>& warps_b,
                             const std::vector<MatchSet>& inter_matches, const Vec2& offset_a,
                             const Vec2& offset_b) {
    StitchReport rep;
    for (const MatchSet& ms : inter_matches) {
        if (ms.pairs.empty()) continue;  // NoMatches: frame skipped
        const int i = ms.frame_index;
        if (i < 0 || i >= static_cast<int>(warps_a.size()) ||
            i >= static_cast<int>(warps_b.size()))
            throw FrameMismatch("match frame index outside warp sequence");
        double err = 0.0;
        for (const PointPair& pp : ms.pairs) {
            const Vec2 pa = pp.src + interpolate_displacement(warps_a[i], pp.src) + offset_a;
            const Vec2 pb = pp.dst + interpolate_displacement(warps_b[i], pp.dst) + offset_b;
            err += (pa - pb).norm();
        }
        rep.frames.push_back(i);
        rep.per_frame_error.push_back(err / static_cast<double>(ms.pairs.size()));
    }
    rep.score = rep.per_frame_error.empty()
                    ? 0.0
                    : *std::max_element(rep.per_frame_error.begin(), rep.per_frame_error.end());
    return rep;
}

void write_metrics_json(const std::string& path, const StabilizationReport& stab,
                        const StitchReport* stitch, double stability_input) {
    nlohmann::json j;
    j["cropping"] = stab.cropping;
    j["distortion"] = stab.distortion;
    j["stability"] = stab.stability;
    if (stability_input >= 0) j["stability_input"] = stability_input;
    j["per_frame"]["cropping"] = stab.per_frame_cropping;
    j["per_frame"]["distortion"] = stab.per_frame_distortion;
    if (stitch) {
        j["stitching_score"] = stitch->score;
        j["per_frame"]["stitching_frames"] = stitch->frames;
        j["per_frame"]["stitching_error"] = stitch->per_frame_error;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace panomesh

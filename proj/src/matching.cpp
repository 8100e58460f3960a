#include "panomesh/matching.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "panomesh/kernels.hpp"

namespace panomesh {

namespace {

struct Corner {
    int x, y;
    float response;
};

// Min-eigenvalue corner response over a 5x5 structure-tensor window.
ImageF corner_response(const ImageF& img) {
    const int w = img.width, h = img.height;
    ImageF gx(w, h), gy(w, h);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            gx.at(x, y) = (img.at(x + 1, y - 1) - img.at(x - 1, y - 1)) +
                          2 * (img.at(x + 1, y) - img.at(x - 1, y)) +
                          (img.at(x + 1, y + 1) - img.at(x - 1, y + 1));
            gy.at(x, y) = (img.at(x - 1, y + 1) - img.at(x - 1, y - 1)) +
                          2 * (img.at(x, y + 1) - img.at(x, y - 1)) +
                          (img.at(x + 1, y + 1) - img.at(x + 1, y - 1));
        }
    }
    ImageF resp(w, h);
    const int r = 2;
    for (int y = r + 1; y < h - r - 1; ++y) {
        for (int x = r + 1; x < w - r - 1; ++x) {
            double axx = 0, axy = 0, ayy = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const double ix = gx.at(x + dx, y + dy);
                    const double iy = gy.at(x + dx, y + dy);
                    axx += ix * ix;
                    axy += ix * iy;
                    ayy += iy * iy;
                }
            }
            const double tr = axx + ayy;
            const double d = std::sqrt(std::max(0.0, (axx - ayy) * (axx - ayy) + 4 * axy * axy));
            resp.at(x, y) = static_cast<float>(0.5 * (tr - d));
        }
    }
    return resp;
}

// Parabolic peak refinement from three samples; returns offset in [-0.5, 0.5].
double subpixel_offset(double lo, double mid, double hi) {
    const double denom = lo - 2 * mid + hi;
    if (std::abs(denom) < 1e-12) return 0.0;
    const double d = 0.5 * (lo - hi) / denom;
    return std::clamp(d, -0.5, 0.5);
}

}  // namespace

MatchSet detect_and_match(const ImageF& frame_a, const ImageF& frame_b,
                          const std::optional<Rect>& roi, const MatcherConfig& cfg) {
    if (frame_a.width != frame_b.width || frame_a.height != frame_b.height)
        throw SizeMismatch("frame dimensions differ");
    if (cfg.search_radius < 1 || cfg.corners_per_cell < 1)
        throw DegenerateInput("invalid matcher config");

    const int w = frame_a.width, h = frame_a.height;
    Rect region{0, 0, w, h};
    if (roi) {
        if (roi->x < 0 || roi->y < 0 || roi->x + roi->w > w || roi->y + roi->h > h)
            throw SizeMismatch("roi outside frame");
        region = *roi;
    }

    {
        float mn = frame_a.data[0], mx = frame_a.data[0];
        for (float v : frame_a.data) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (mx - mn < 1e-3f) throw EmptyFrame("frame_a has no texture");
    }

    const ImageF resp = corner_response(frame_a);

    const int br = cfg.block_radius;
    const int margin = br + 2;

    // One pool of candidate corners per detection cell, best-first.
    std::vector<Corner> corners;
    const double cell_w = static_cast<double>(region.w) / cfg.detect_cols;
    const double cell_h = static_cast<double>(region.h) / cfg.detect_rows;
    for (int cr = 0; cr < cfg.detect_rows; ++cr) {
        for (int cc = 0; cc < cfg.detect_cols; ++cc) {
            const int x0 = region.x + static_cast<int>(cc * cell_w);
            const int y0 = region.y + static_cast<int>(cr * cell_h);
            const int x1 = region.x + static_cast<int>((cc + 1) * cell_w);
            const int y1 = region.y + static_cast<int>((cr + 1) * cell_h);
            std::vector<Corner> local;
            for (int y = std::max(y0, margin); y < std::min(y1, h - margin); ++y) {
                for (int x = std::max(x0, margin); x < std::min(x1, w - margin); ++x) {
                    const float v = resp.at(x, y);
                    if (v <= 0) continue;
                    // 3x3 local maximum, ties broken toward smaller index
                    bool is_max = true;
                    for (int dy = -1; dy <= 1 && is_max; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dx == 0 && dy == 0) continue;
                            const float o = resp.at(x + dx, y + dy);
                            if (o > v || (o == v && (dy < 0 || (dy == 0 && dx < 0)))) {
                                is_max = false;
                                break;
                            }
                        }
                    if (is_max) local.push_back({x, y, v});
                }
            }
            std::sort(local.begin(), local.end(), [](const Corner& a, const Corner& b) {
                if (a.response != b.response) return a.response > b.response;
                return std::tie(a.y, a.x) < std::tie(b.y, b.x);
            });
            // greedy spacing inside the cell so corners do not clump
            std::vector<Corner> kept;
            const double min_dist2 = std::max(4.0, cell_w * cell_h /
                                                        (4.0 * cfg.corners_per_cell));
            for (const auto& c : local) {
                bool ok = true;
                for (const auto& k : kept) {
                    const double dx = c.x - k.x, dy = c.y - k.y;
                    if (dx * dx + dy * dy < min_dist2) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    kept.push_back(c);
                    if (static_cast<int>(kept.size()) >= cfg.corners_per_cell) break;
                }
            }
            corners.insert(corners.end(), kept.begin(), kept.end());
        }
    }

    MatchSet out;
    out.kind = roi ? MatchKind::Inter : out.kind;

    const int sr = cfg.search_radius;
    const int side = 2 * br + 1;
    std::vector<float> tmpl(static_cast<std::size_t>(side) * side);

    for (const auto& c : corners) {
        // centered template
        double tsum = 0;
        for (int dy = -br; dy <= br; ++dy)
            for (int dx = -br; dx <= br; ++dx) tsum += frame_a.at(c.x + dx, c.y + dy);
        const double tmean = tsum / (side * side);
        double tnorm2 = 0;
        for (int dy = -br, k = 0; dy <= br; ++dy)
            for (int dx = -br; dx <= br; ++dx, ++k) {
                const double v = frame_a.at(c.x + dx, c.y + dy) - tmean;
                tmpl[k] = static_cast<float>(v);
                tnorm2 += v * v;
            }
        if (tnorm2 < 1e-6) continue;  // flat template
        const double tnorm = std::sqrt(tnorm2);

        const int bx = c.x + static_cast<int>(std::lround(cfg.search_center_offset.x));
        const int by = c.y + static_cast<int>(std::lround(cfg.search_center_offset.y));
        // if even the predicted (zero-offset) candidate window clips the
        // frame, any peak found nearby is a false lock onto other texture
        if (bx - br < 0 || bx + br >= w || by - br < 0 || by + br >= h) continue;

        // zncc over the search window, evaluated lazily and cached:
        // -4 = not computed, -2 = computed but invalid (clipped or flat)
        std::vector<double> score(static_cast<std::size_t>(2 * sr + 1) * (2 * sr + 1), -4.0);
        auto eval = [&](int u, int v) -> double {
            double& cell = score[(v + sr) * (2 * sr + 1) + (u + sr)];
            if (cell > -3.0) return cell;
            const int cy = by + v;
            const int cx = bx + u;
            if (cy - br < 0 || cy + br >= h || cx - br < 0 || cx + br >= w) return cell = -2.0;
            kernels::CorrStats st;
            for (int dy = -br; dy <= br; ++dy) {
                kernels::corr_stats_f(st, tmpl.data() + (dy + br) * side,
                                      frame_b.row(cy + dy) + cx - br, side);
            }
            const double n = side * side;
            const double var = st.sumsq - st.sum * st.sum / n;
            if (var < 1e-6) return cell = -2.0;
            return cell = st.dot / (tnorm * std::sqrt(var));
        };

        // coarse-to-fine: stride-2 sweep, then exhaustive refinement around
        // the coarse peak (correlation peaks are wider than one pixel)
        double best = -4.0;
        int best_u = 0, best_v = 0;
        for (int v = -sr; v <= sr; v += 2) {
            for (int u = -sr; u <= sr; u += 2) {
                const double s = eval(u, v);
                if (s > best) {
                    best = s;
                    best_u = u;
                    best_v = v;
                }
            }
        }
        for (int v = std::max(-sr, best_v - 2); v <= std::min(sr, best_v + 2); ++v) {
            for (int u = std::max(-sr, best_u - 2); u <= std::min(sr, best_u + 2); ++u) {
                const double s = eval(u, v);
                if (s > best) {
                    best = s;
                    best_u = u;
                    best_v = v;
                }
            }
        }
        if (best < cfg.min_zncc) continue;
        // make sure the sub-pixel neighborhood is populated
        if (best_u > -sr) eval(best_u - 1, best_v);
        if (best_u < sr) eval(best_u + 1, best_v);
        if (best_v > -sr) eval(best_u, best_v - 1);
        if (best_v < sr) eval(best_u, best_v + 1);

        double du = 0, dv = 0;
        auto sc = [&](int u, int v) { return score[(v + sr) * (2 * sr + 1) + (u + sr)]; };
        // a perfect correlation peak is already exact; parabolic refinement
        // would only add asymmetric-neighbor noise to it. The score alone is
        // too noisy for low-contrast patches, so confirm with an exact
        // pixel comparison of the two patches.
        bool perfect = false;
        if (best > 0.99) {
            perfect = true;
            for (int dy = -br; dy <= br && perfect; ++dy) {
                const float* ra = frame_a.row(c.y + dy) + c.x - br;
                const float* rb = frame_b.row(by + best_v + dy) + bx + best_u - br;
                for (int i = 0; i < side; ++i) {
                    if (ra[i] != rb[i]) {
                        perfect = false;
                        break;
                    }
                }
            }
        }
        if (!perfect && best_u > -sr && best_u < sr) {
            const double l = sc(best_u - 1, best_v), r = sc(best_u + 1, best_v);
            if (l > -2 && r > -2) du = subpixel_offset(l, best, r);
        }
        if (!perfect && best_v > -sr && best_v < sr) {
            const double t = sc(best_u, best_v - 1), b = sc(best_u, best_v + 1);
            if (t > -2 && b > -2) dv = subpixel_offset(t, best, b);
        }

        PointPair pair;
        pair.src = {static_cast<double>(c.x), static_cast<double>(c.y)};
        pair.dst = {bx + best_u + du, by + best_v + dv};
        out.pairs.push_back(pair);
        out.motions.push_back(pair.src - pair.dst);
    }
    return out;
}

std::vector<MatchSet> load_matches(const std::string& path, MatchKind kind) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open match file: " + path);

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line number for the error message
        std::ifstream again(path);
        std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
        throw ParseError("match file parse error at line " + std::to_string(line) + ": " +
                         e.what());
    }

    auto require = [&](const nlohmann::json& j, const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
        return j.at(key);
    };

    const auto& fs = require(doc, "frame_size");
    if (!fs.is_array() || fs.size() != 2) throw SchemaError("frame_size must be [w, h]");
    const double fw = fs[0].get<double>();
    const double fh = fs[1].get<double>();

    const std::string kind_str = require(doc, "kind").get<std::string>();
    const MatchKind file_kind = kind_str == "intra"   ? MatchKind::Intra
                                : kind_str == "inter" ? MatchKind::Inter
                                                      : throw SchemaError("kind must be intra|inter");
    if (file_kind != kind) throw SchemaError("match file kind does not match request");

    std::vector<MatchSet> out;
    for (const auto& rec : require(doc, "records")) {
        MatchSet ms;
        ms.kind = kind;
        ms.frame_index = require(rec, "frame").get<int>();
        if (ms.frame_index < 0) throw SchemaError("negative frame index");
        ms.camera = require(rec, "camera").get<int>();
        if (rec.contains("partner")) ms.partner = rec.at("partner").get<int>();
        for (const auto& p : require(rec, "pairs")) {
            if (!p.is_array() || p.size() != 4) throw SchemaError("pair must be [sx, sy, dx, dy]");
            PointPair pp;
            pp.src = {p[0].get<double>(), p[1].get<double>()};
            pp.dst = {p[2].get<double>(), p[3].get<double>()};
            if (!pp.src.finite() || !pp.dst.finite()) throw SchemaError("non-finite coordinates");
            if (pp.src.x < 0 || pp.src.y < 0 || pp.src.x > fw || pp.src.y > fh)
                throw SchemaError("src coordinate outside declared frame size");
            ms.pairs.push_back(pp);
            ms.motions.push_back(pp.src - pp.dst);
        }
        out.push_back(std::move(ms));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const MatchSet& a, const MatchSet& b) { return a.frame_index < b.frame_index; });
    return out;
}

std::pair<MatchSet, Homography> reject_outliers(const MatchSet& ms, const RobustConfig& cfg) {
    if (ms.size() < 4) throw TooFewPairs("outlier rejection needs at least 4 pairs");

    // Fit with src/dst swapped so the model satisfies H(dst) = src and
    // H(p) - p approximates the stored motion at the src positions.
    std::vector<PointPair> swapped(ms.pairs.size());
    for (std::size_t i = 0; i < ms.pairs.size(); ++i) {
        swapped[i].src = ms.pairs[i].dst;
        swapped[i].dst = ms.pairs[i].src;
    }
    const RobustResult rr = robust_homography(swapped, cfg);

    MatchSet inliers;
    inliers.kind = ms.kind;
    inliers.frame_index = ms.frame_index;
    inliers.camera = ms.camera;
    inliers.partner = ms.partner;
    for (std::size_t i = 0; i < ms.pairs.size(); ++i) {
        if (rr.inlier_mask[i]) {
            inliers.pairs.push_back(ms.pairs[i]);
            inliers.motions.push_back(ms.motions[i]);
        }
    }
    return {std::move(inliers), rr.model};
}

}  // namespace panomesh

#include "panomesh/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace panomesh {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

constexpr double kUvEps = 1e-9;

// Inverse of the bilinear map (u,v) -> P00 + u*E + v*F + u*v*G for the point
// offset h = p - P00. Returns false if p lies outside the quad.
bool inverse_bilinear(const Vec2& h, const Vec2& e, const Vec2& f, const Vec2& g, double& u,
                      double& v) {
    const double a = cross2(f, g);
    const double b = cross2(f, e) - cross2(h, g);
    const double c = -cross2(h, e);

    double roots[2];
    int n_roots = 0;
    const double scale = std::abs(b) + std::abs(c) + 1.0;
    if (std::abs(a) < 1e-12 * scale) {
        if (std::abs(b) < 1e-14 * scale) return false;
        roots[n_roots++] = -c / b;
    } else {
        const double disc = b * b - 4 * a * c;
        if (disc < 0) return false;
        const double sq = std::sqrt(disc);
        // numerically stable pair of roots
        const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
        roots[n_roots++] = q / a;
        if (std::abs(q) > 0) roots[n_roots++] = c / q;
    }

    for (int i = 0; i < n_roots; ++i) {
        const double vv = roots[i];
        if (vv < -kUvEps || vv > 1 + kUvEps) continue;
        const Vec2 den = e + vv * g;
        double uu;
        if (std::abs(den.x) >= std::abs(den.y)) {
            if (std::abs(den.x) < 1e-14) continue;
            uu = (h.x - vv * f.x) / den.x;
        } else {
            uu = (h.y - vv * f.y) / den.y;
        }
        if (uu < -kUvEps || uu > 1 + kUvEps) continue;
        u = std::clamp(uu, 0.0, 1.0);
        v = std::clamp(vv, 0.0, 1.0);
        return true;
    }
    return false;
}

std::vector<WarpMap> maps_from_profiles(const VertexProfileSet& primary,
                                        const VertexProfileSet& that,
                                        const VertexProfileSet& t, bool with_stitch) {
    if (!that.same_shape(t) || (with_stitch && !primary.same_shape(t)))
        throw ShapeMismatch("profile shapes differ in build_warp_maps");
    std::vector<WarpMap> maps;
    maps.reserve(t.frames);
    for (int i = 0; i < t.frames; ++i) {
        WarpMap wm(t.grid, i);
        for (int g = 0; g < t.grid.vertex_count(); ++g) {
            Vec2 d = that.at(i, g) - t.at(i, g);
            if (with_stitch) d += primary.at(i, g);
            if (!d.finite()) throw ShapeMismatch("non-finite warp displacement");
            wm.displacement[g] = d;
        }
        maps.push_back(std::move(wm));
    }
    return maps;
}

// City-block distance to the nearest invalid pixel (or canvas border); used
// as the feather weight. Valid pixels get weight >= 1.
std::vector<float> feather_weights(const Canvas& c) {
    const int w = c.width, h = c.height;
    const float cap = static_cast<float>(w + h);
    std::vector<float> d(static_cast<std::size_t>(w) * h, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!c.mask[i]) continue;
            float best = cap;
            best = std::min(best, (y > 0 ? d[i - w] : 0.0f) + 1.0f);
            best = std::min(best, (x > 0 ? d[i - 1] : 0.0f) + 1.0f);
            d[i] = best;
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!c.mask[i]) continue;
            float best = d[i];
            best = std::min(best, (y < h - 1 ? d[i + w] : 0.0f) + 1.0f);
            best = std::min(best, (x < w - 1 ? d[i + 1] : 0.0f) + 1.0f);
            d[i] = best;
        }
    }
    return d;
}

struct ImageF3 {
    int width = 0, height = 0;
    std::vector<float> data;  // 3 channels interleaved
    ImageF3() = default;
    ImageF3(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0f) {}
    float* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const float* px(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

float sample_clamped(const std::vector<float>& img, int w, int h, int x, int y, int c, int nc) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img[(static_cast<std::size_t>(y) * w + x) * nc + c];
}

// 5-tap Gaussian downsample by two, per channel.
void downsample(const std::vector<float>& src, int w, int h, int nc, std::vector<float>& dst,
                int& dw, int& dh) {
    static const float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
    dw = std::max(1, (w + 1) / 2);
    dh = std::max(1, (h + 1) / 2);
    std::vector<float> tmp(static_cast<std::size_t>(dw) * h * nc, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < dw; ++x) {
            for (int c = 0; c < nc; ++c) {
                float s = 0;
                for (int t = -2; t <= 2; ++t) s += k[t + 2] * sample_clamped(src, w, h, 2 * x + t, y, c, nc);
                tmp[(static_cast<std::size_t>(y) * dw + x) * nc + c] = s;
            }
        }
    }
    dst.assign(static_cast<std::size_t>(dw) * dh * nc, 0.0f);
    for (int y = 0; y < dh; ++y) {
        for (int x = 0; x < dw; ++x) {
            for (int c = 0; c < nc; ++c) {
                float s = 0;
                for (int t = -2; t <= 2; ++t) s += k[t + 2] * sample_clamped(tmp, dw, h, x, 2 * y + t, c, nc);
                dst[(static_cast<std::size_t>(y) * dw + x) * nc + c] = s;
            }
        }
    }
}

// Bilinear upsample to an exact target size.
void upsample(const std::vector<float>& src, int w, int h, int nc, int tw, int th,
              std::vector<float>& dst) {
    dst.assign(static_cast<std::size_t>(tw) * th * nc, 0.0f);
    const double sx = tw > 1 ? static_cast<double>(w - 1) / (tw - 1) : 0.0;
    const double sy = th > 1 ? static_cast<double>(h - 1) / (th - 1) : 0.0;
    for (int y = 0; y < th; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < tw; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < nc; ++c) {
                const double top = src[(static_cast<std::size_t>(y0) * w + x0) * nc + c] * (1 - wx) +
                                   src[(static_cast<std::size_t>(y0) * w + x1) * nc + c] * wx;
                const double bot = src[(static_cast<std::size_t>(y1) * w + x0) * nc + c] * (1 - wx) +
                                   src[(static_cast<std::size_t>(y1) * w + x1) * nc + c] * wx;
                dst[(static_cast<std::size_t>(y) * tw + x) * nc + c] =
                    static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    }
}

// Fill invalid pixels with the nearest valid color (two-pass chamfer carry)
// so pyramid smoothing does not bleed background black across seams.
ImageF3 filled_color(const Canvas& c) {
    const int w = c.width, h = c.height;
    ImageF3 out(w, h);
    std::vector<float> dist(static_cast<std::size_t>(w) * h, 1e30f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            float* o = out.px(x, y);
            if (c.mask[i]) {
                const std::uint8_t* p = c.pixels.px(x, y);
                o[0] = p[0];
                o[1] = p[1];
                o[2] = p[2];
                dist[i] = 0;
            }
        }
    }
    auto relax = [&](std::size_t i, int x, int y, int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (dist[j] + 1 < dist[i]) {
            dist[i] = dist[j] + 1;
            const float* s = out.px(nx, ny);
            float* o = out.px(x, y);
            o[0] = s[0];
            o[1] = s[1];
            o[2] = s[2];
        }
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            relax(i, x, y, x - 1, y);
            relax(i, x, y, x, y - 1);
        }
    for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            relax(i, x, y, x + 1, y);
            relax(i, x, y, x, y + 1);
        }
    return out;
}

Canvas blend_feather(const std::vector<Canvas>& canvases) {
    const int w = canvases.front().width, h = canvases.front().height;
    Canvas out(w, h);
    std::vector<std::vector<float>> weights;
    weights.reserve(canvases.size());
    for (const Canvas& c : canvases) weights.push_back(feather_weights(c));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            double wsum = 0, acc[3] = {0, 0, 0};
            for (std::size_t k = 0; k < canvases.size(); ++k) {
                const double wk = weights[k][i];
                if (wk <= 0) continue;
                const std::uint8_t* p = canvases[k].pixels.px(x, y);
                acc[0] += wk * p[0];
                acc[1] += wk * p[1];
                acc[2] += wk * p[2];
                wsum += wk;
            }
            if (wsum > 0) {
                std::uint8_t* o = out.pixels.px(x, y);
                for (int c = 0; c < 3; ++c)
                    o[c] = static_cast<std::uint8_t>(std::lround(std::clamp(acc[c] / wsum, 0.0, 255.0)));
                out.mask[i] = 1;
            }
        }
    }
    return out;
}

struct Pyramid {
    std::vector<std::vector<float>> level;
    std::vector<int> lw, lh;
};

Pyramid gaussian_pyramid(std::vector<float> base, int w, int h, int nc, int levels) {
    Pyramid p;
    p.level.push_back(std::move(base));
    p.lw.push_back(w);
    p.lh.push_back(h);
    for (int l = 1; l < levels; ++l) {
        std::vector<float> next;
        int nw, nh;
        downsample(p.level.back(), p.lw.back(), p.lh.back(), nc, next, nw, nh);
        p.level.push_back(std::move(next));
        p.lw.push_back(nw);
        p.lh.push_back(nh);
    }
    return p;
}

Canvas blend_multiband(const std::vector<Canvas>& canvases, int levels) {
    const int w = canvases.front().width, h = canvases.front().height;
    levels = std::max(1, levels);

    // normalized feather weights
    std::vector<std::vector<float>> nw(canvases.size());
    {
        std::vector<std::vector<float>> raw;
        raw.reserve(canvases.size());
        for (const Canvas& c : canvases) raw.push_back(feather_weights(c));
        for (std::size_t k = 0; k < canvases.size(); ++k)
            nw[k].assign(static_cast<std::size_t>(w) * h, 0.0f);
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
            float s = 0;
            for (const auto& r : raw) s += r[i];
            if (s > 0)
                for (std::size_t k = 0; k < canvases.size(); ++k) nw[k][i] = raw[k][i] / s;
        }
    }

    std::vector<std::vector<float>> blended;  // blended laplacian per level
    std::vector<std::vector<float>> wsum;     // accumulated weight per level
    std::vector<int> lw, lh;
    for (std::size_t k = 0; k < canvases.size(); ++k) {
        const ImageF3 color = filled_color(canvases[k]);
        Pyramid g = gaussian_pyramid(color.data, w, h, 3, levels);
        Pyramid wp = gaussian_pyramid(nw[k], w, h, 1, levels);
        if (k == 0) {
            lw = g.lw;
            lh = g.lh;
            blended.resize(levels);
            wsum.resize(levels);
            for (int l = 0; l < levels; ++l) {
                blended[l].assign(static_cast<std::size_t>(lw[l]) * lh[l] * 3, 0.0f);
                wsum[l].assign(static_cast<std::size_t>(lw[l]) * lh[l], 0.0f);
            }
        }
        for (int l = 0; l < levels; ++l) {
            // laplacian = gaussian level minus upsampled coarser level
            std::vector<float> lap = g.level[l];
            if (l + 1 < levels) {
                std::vector<float> up;
                upsample(g.level[l + 1], g.lw[l + 1], g.lh[l + 1], 3, g.lw[l], g.lh[l], up);
                for (std::size_t i = 0; i < lap.size(); ++i) lap[i] -= up[i];
            }
            for (std::size_t i = 0; i < static_cast<std::size_t>(lw[l]) * lh[l]; ++i) {
                const float wk = wp.level[l][i];
                blended[l][i * 3 + 0] += wk * lap[i * 3 + 0];
                blended[l][i * 3 + 1] += wk * lap[i * 3 + 1];
                blended[l][i * 3 + 2] += wk * lap[i * 3 + 2];
                wsum[l][i] += wk;
            }
        }
    }

    // downsampled weights no longer sum to 1 near validity boundaries;
    // renormalize each band so identical inputs reconstruct exactly
    for (int l = 0; l < levels; ++l) {
        for (std::size_t i = 0; i < wsum[l].size(); ++i) {
            const float s = wsum[l][i];
            if (s > 0) {
                blended[l][i * 3 + 0] /= s;
                blended[l][i * 3 + 1] /= s;
                blended[l][i * 3 + 2] /= s;
            }
        }
    }

    // collapse: start at the coarsest level and add finer bands
    std::vector<float> acc = blended[levels - 1];
    for (int l = levels - 2; l >= 0; --l) {
        std::vector<float> up;
        upsample(acc, lw[l + 1], lh[l + 1], 3, lw[l], lh[l], up);
        acc = std::move(up);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += blended[l][i];
    }

    Canvas out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            bool any = false;
            for (const Canvas& c : canvases) any = any || c.mask[i];
            if (!any) continue;
            out.mask[i] = 1;
            std::uint8_t* o = out.pixels.px(x, y);
            for (int c = 0; c < 3; ++c)
                o[c] = static_cast<std::uint8_t>(
                    std::lround(std::clamp<double>(acc[i * 3 + c], 0.0, 255.0)));
        }
    }
    return out;
}

}  // namespace

std::vector<WarpMap> build_warp_maps(const VertexProfileSet& vhat, const VertexProfileSet& that,
                                     const VertexProfileSet& t) {
    return maps_from_profiles(vhat, that, t, true);
}

std::vector<WarpMap> build_warp_maps(const VertexProfileSet& that, const VertexProfileSet& t) {
    return maps_from_profiles(that, that, t, false);
}

Canvas warp_frame(const ImageU8& frame, const WarpMap& wm, int canvas_w, int canvas_h,
                  const Vec2& offset) {
    if (static_cast<int>(wm.grid.width) != frame.width ||
        static_cast<int>(wm.grid.height) != frame.height)
        throw GridMismatch("warp map grid does not match frame size");

    const MeshGrid& grid = wm.grid;
    std::vector<Vec2> warped(grid.vertex_count());
    for (int g = 0; g < grid.vertex_count(); ++g) {
        const int r = g / grid.vertex_cols();
        const int c = g % grid.vertex_cols();
        warped[g] = grid.vertex(r, c) + wm.displacement[g] + offset;
    }

    Canvas out(canvas_w, canvas_h);
    const double cw = grid.cell_width(), ch = grid.cell_height();
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const Vec2 p00 = warped[grid.vertex_index(r, c)];
            const Vec2 p10 = warped[grid.vertex_index(r, c + 1)];
            const Vec2 p01 = warped[grid.vertex_index(r + 1, c)];
            const Vec2 p11 = warped[grid.vertex_index(r + 1, c + 1)];

            // orientation check around the quad ring; a flipped sign means
            // the warped cell folded over
            const Vec2 ring[4] = {p00, p10, p11, p01};
            for (int k = 0; k < 4; ++k) {
                const Vec2 e1 = ring[(k + 1) % 4] - ring[k];
                const Vec2 e2 = ring[(k + 2) % 4] - ring[(k + 1) % 4];
                if (cross2(e1, e2) <= 0)
                    throw DegenerateQuad("warped cell fold-over at cell (" + std::to_string(r) +
                                         "," + std::to_string(c) + ")");
            }

            const Vec2 e = p10 - p00;
            const Vec2 f = p01 - p00;
            const Vec2 g2 = p11 - p10 - p01 + p00;

            double minx = p00.x, maxx = p00.x, miny = p00.y, maxy = p00.y;
            for (const Vec2& q : {p10, p01, p11}) {
                minx = std::min(minx, q.x);
                maxx = std::max(maxx, q.x);
                miny = std::min(miny, q.y);
                maxy = std::max(maxy, q.y);
            }
            // half-open coverage: a pixel exactly on a shared cell edge is
            // rendered by the next cell, and the outer right/bottom frame
            // edge is excluded so identity warps keep an exact mask
            const int xs = std::max(0, static_cast<int>(std::ceil(minx - 1e-9)));
            const int xe = std::min(canvas_w - 1, static_cast<int>(std::ceil(maxx - 1e-9)) - 1);
            const int ys = std::max(0, static_cast<int>(std::ceil(miny - 1e-9)));
            const int ye = std::min(canvas_h - 1, static_cast<int>(std::ceil(maxy - 1e-9)) - 1);

            for (int y = ys; y <= ye; ++y) {
                for (int x = xs; x <= xe; ++x) {
                    const Vec2 hv = Vec2(x, y) - p00;
                    double u, v;
                    if (!inverse_bilinear(hv, e, f, g2, u, v)) continue;
                    const double sx = c * cw + u * cw;
                    const double sy = r * ch + v * ch;
                    double rgb[3];
                    sample_bilinear_rgb(frame, sx, sy, rgb);
                    std::uint8_t* o = out.pixels.px(x, y);
                    for (int ch3 = 0; ch3 < 3; ++ch3)
                        o[ch3] = static_cast<std::uint8_t>(
                            std::lround(std::clamp(rgb[ch3], 0.0, 255.0)));
                    out.mask[static_cast<std::size_t>(y) * canvas_w + x] = 1;
                }
            }
        }
    }
    return out;
}

Canvas compose_precalibrated(const std::vector<ImageU8>& frames,
                             const std::vector<Homography>& statics, int canvas_w, int canvas_h) {
    if (frames.empty()) throw EmptyInput("no frames to compose");
    if (frames.size() != statics.size())
        throw SizeMismatch("one homography per frame is required");
    std::vector<Canvas> parts;
    parts.reserve(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const Homography hinv = statics[k].inverse();
        Canvas c(canvas_w, canvas_h);
        for (int y = 0; y < canvas_h; ++y) {
            for (int x = 0; x < canvas_w; ++x) {
                const Vec2 s = apply_homography(hinv, Vec2(x, y));
                if (s.x < 0 || s.y < 0 || s.x > frames[k].width - 1 || s.y > frames[k].height - 1)
                    continue;
                double rgb[3];
                sample_bilinear_rgb(frames[k], s.x, s.y, rgb);
                std::uint8_t* o = c.pixels.px(x, y);
                for (int ch3 = 0; ch3 < 3; ++ch3)
                    o[ch3] = static_cast<std::uint8_t>(std::lround(std::clamp(rgb[ch3], 0.0, 255.0)));
                c.mask[static_cast<std::size_t>(y) * canvas_w + x] = 1;
            }
        }
        parts.push_back(std::move(c));
    }
    return blend(parts, BlendMode::Feather);
}

Canvas blend(const std::vector<Canvas>& canvases, BlendMode mode, int levels) {
    if (canvases.empty()) throw EmptyInput("no canvases to blend");
    for (const Canvas& c : canvases) {
        if (c.width != canvases.front().width || c.height != canvases.front().height)
            throw SizeMismatch("canvas sizes differ");
    }
    if (canvases.size() == 1) return canvases.front();
    if (mode == BlendMode::Feather) return blend_feather(canvases);
    return blend_multiband(canvases, levels);
}

}  // namespace panomesh

#include "panomesh/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace panomesh {

namespace {

Eigen::Matrix3d to_eigen(const Homography& H) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = H.h[r * 3 + c];
    return m;
}

Homography from_eigen(const Eigen::Matrix3d& m) {
    Homography H;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) H.h[r * 3 + c] = m(r, c);
    H.normalize();
    return H;
}

// Centroid + RMS-distance conditioning transform for a point set.
Eigen::Matrix3d hartley_transform(const std::vector<PointPair>& pairs, bool use_src) {
    double cx = 0, cy = 0;
    for (const auto& p : pairs) {
        const Vec2& q = use_src ? p.src : p.dst;
        cx += q.x;
        cy += q.y;
    }
    const double n = static_cast<double>(pairs.size());
    cx /= n;
    cy /= n;
    double rms = 0;
    for (const auto& p : pairs) {
        const Vec2& q = use_src ? p.src : p.dst;
        rms += (q.x - cx) * (q.x - cx) + (q.y - cy) * (q.y - cy);
    }
    rms = std::sqrt(rms / n);
    const double s = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;
    Eigen::Matrix3d T;
    T << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return T;
}

bool three_collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(cross) < 1e-9;
}

bool degenerate_sample(const std::vector<PointPair>& pairs, const std::array<int, 4>& idx) {
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (three_collinear(pairs[idx[i]].src, pairs[idx[j]].src, pairs[idx[k]].src))
                    return true;
    return false;
}

}  // namespace

double Homography::det() const {
    return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
           h[2] * (h[3] * h[7] - h[4] * h[6]);
}

void Homography::normalize() {
    double s = h[8];
    if (std::abs(s) < 1e-12) {
        double norm = 0;
        for (double v : h) norm += v * v;
        s = std::sqrt(norm);
        if (s < 1e-300) return;
    }
    for (double& v : h) v /= s;
}

Homography Homography::inverse() const {
    Eigen::Matrix3d m = to_eigen(*this);
    if (std::abs(m.determinant()) < 1e-15) throw DegenerateInput("homography is singular");
    return from_eigen(Eigen::Matrix3d(m.inverse()));
}

Homography Homography::compose(const Homography& rhs) const {
    return from_eigen(Eigen::Matrix3d(to_eigen(*this) * to_eigen(rhs)));
}

bool Homography::is_identity(double tol) const {
    static const std::array<double, 9> id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i)
        if (std::abs(h[i] - id[i]) > tol) return false;
    return true;
}

Vec2 apply_homography(const Homography& H, const Vec2& p) {
    const double w = H.h[6] * p.x + H.h[7] * p.y + H.h[8];
    if (std::abs(w) < 1e-12) throw AtInfinity("point maps to infinity");
    const double x = H.h[0] * p.x + H.h[1] * p.y + H.h[2];
    const double y = H.h[3] * p.x + H.h[4] * p.y + H.h[5];
    return {x / w, y / w};
}

double reprojection_error(const Homography& H, const PointPair& pair) {
    return (apply_homography(H, pair.src) - pair.dst).norm();
}

Homography estimate_homography_dlt(const std::vector<PointPair>& pairs) {
    return estimate_homography_dlt(pairs, {});
}

Homography estimate_homography_dlt(const std::vector<PointPair>& pairs,
                                   const std::vector<double>& weights) {
    if (pairs.size() < 4) throw DegenerateInput("DLT needs at least 4 pairs");
    for (const auto& p : pairs)
        if (!p.src.finite() || !p.dst.finite())
            throw DegenerateInput("non-finite coordinates");

    const Eigen::Matrix3d Ts = hartley_transform(pairs, true);
    const Eigen::Matrix3d Td = hartley_transform(pairs, false);

    const auto n = pairs.size();
    Eigen::MatrixXd A(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const double sx = Ts(0, 0) * pairs[i].src.x + Ts(0, 2);
        const double sy = Ts(1, 1) * pairs[i].src.y + Ts(1, 2);
        const double dx = Td(0, 0) * pairs[i].dst.x + Td(0, 2);
        const double dy = Td(1, 1) * pairs[i].dst.y + Td(1, 2);
        const double w = weights.empty() ? 1.0 : std::sqrt(weights[i]);
        A.row(2 * i) << 0, 0, 0, -sx, -sy, -1, dy * sx, dy * sy, dy;
        A.row(2 * i + 1) << sx, sy, 1, 0, 0, 0, -dx * sx, -dx * sy, -dx;
        A.row(2 * i) *= w;
        A.row(2 * i + 1) *= w;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    if (svd.rank() < 8 && n == 4) {
        // minimal sample with collinear points
        throw DegenerateInput("rank-deficient design matrix");
    }
    Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d Hn;
    Hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    Eigen::Matrix3d H = Td.inverse() * Hn * Ts;
    if (std::abs(H.determinant()) < 1e-12) throw DegenerateInput("estimated homography singular");
    return from_eigen(H);
}

RobustResult robust_homography(const std::vector<PointPair>& pairs, const RobustConfig& cfg) {
    if (pairs.size() < 4) throw DegenerateInput("robust fit needs at least 4 pairs");
    if (cfg.inlier_threshold <= 0) throw DegenerateInput("inlier_threshold must be positive");
    if (cfg.confidence <= 0 || cfg.confidence >= 1) throw DegenerateInput("confidence out of range");

    const auto n = pairs.size();

    // Canonical ordering makes the result invariant under input permutation
    // for a fixed seed: samples are drawn against sorted positions.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& pa = pairs[a];
        const auto& pb = pairs[b];
        return std::tie(pa.src.x, pa.src.y, pa.dst.x, pa.dst.y) <
               std::tie(pb.src.x, pb.src.y, pb.dst.x, pb.dst.y);
    });

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);

    const double thr2 = cfg.inlier_threshold * cfg.inlier_threshold;
    double best_score = std::numeric_limits<double>::infinity();
    Homography best_model;
    bool have_model = false;
    int iterations = cfg.max_iterations;

    std::vector<double> errs(n);
    for (int it = 0; it < iterations; ++it) {
        std::array<int, 4> idx;
        for (int k = 0; k < 4;) {
            int cand = order[pick(rng)];
            bool dup = false;
            for (int j = 0; j < k; ++j) dup |= (idx[j] == cand);
            if (!dup) idx[k++] = cand;
        }
        if (degenerate_sample(pairs, idx)) continue;

        Homography H;
        try {
            H = estimate_homography_dlt({pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]});
        } catch (const DegenerateInput&) {
            continue;
        }

        double score = 0;
        int inl = 0;
        bool valid = true;
        for (std::size_t i = 0; i < n; ++i) {
            double e2;
            try {
                const Vec2 d = apply_homography(H, pairs[i].src) - pairs[i].dst;
                e2 = d.x * d.x + d.y * d.y;
            } catch (const AtInfinity&) {
                valid = false;
                break;
            }
            if (e2 <= thr2) {
                score += e2;
                ++inl;
            } else {
                score += thr2;
            }
        }
        if (!valid) continue;
        if (score < best_score) {
            best_score = score;
            best_model = H;
            have_model = true;
            // standard adaptive termination from the current inlier ratio
            const double ratio = static_cast<double>(inl) / static_cast<double>(n);
            const double p_all = std::pow(ratio, 4);
            if (p_all > 1e-12) {
                const double denom = std::log(std::max(1e-12, 1.0 - p_all));
                if (denom < 0) {
                    const int needed =
                        static_cast<int>(std::ceil(std::log(1.0 - cfg.confidence) / denom));
                    iterations = std::min(iterations, std::max(it + 1, needed));
                }
            }
        }
    }

    if (!have_model) throw NoConsensus("no non-degenerate sample produced a model");

    // Huber-IRLS refinement on the consensus set.
    Homography model = best_model;
    for (int round = 0; round < cfg.irls_rounds; ++round) {
        std::vector<PointPair> consensus;
        std::vector<double> weights;
        for (std::size_t i = 0; i < n; ++i) {
            double e;
            try {
                e = reprojection_error(model, pairs[i]);
            } catch (const AtInfinity&) {
                continue;
            }
            // soft acceptance band: 3x the threshold feeds the IRLS, the
            // Huber weight downweights everything past the threshold itself
            if (e <= 3.0 * cfg.inlier_threshold) {
                consensus.push_back(pairs[i]);
                weights.push_back(e <= cfg.inlier_threshold ? 1.0 : cfg.inlier_threshold / e);
            }
        }
        if (consensus.size() < 4) break;
        try {
            model = estimate_homography_dlt(consensus, weights);
        } catch (const DegenerateInput&) {
            break;
        }
    }

    RobustResult res;
    res.model = model;
    res.inlier_mask.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            if (reprojection_error(model, pairs[i]) <= cfg.inlier_threshold) {
                res.inlier_mask[i] = true;
                ++res.inlier_count;
            }
        } catch (const AtInfinity&) {
        }
    }
    if (res.inlier_count < 4) throw NoConsensus("best model supports fewer than 4 inliers");
    return res;
}

}  // namespace panomesh

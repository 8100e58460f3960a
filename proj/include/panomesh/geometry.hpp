#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "panomesh/types.hpp"

namespace panomesh {

/// 3x3 projective transform, row-major, normalized so h[8] == 1 whenever the
/// bottom-right coefficient is away from zero.
struct Homography {
    std::array<double, 9> h = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }
    static Homography translation(double tx, double ty) {
        Homography m;
        m.h = {1, 0, tx, 0, 1, ty, 0, 0, 1};
        return m;
    }

    double det() const;
    Homography inverse() const;
    Homography compose(const Homography& rhs) const;  // this(rhs(x))
    void normalize();
    bool is_identity(double tol = 0.0) const;
};

struct RobustConfig {
    int max_iterations = 2000;
    double inlier_threshold = 2.0;  // px
    double confidence = 0.995;
    int irls_rounds = 10;
    std::uint64_t seed = 0;
};

struct RobustResult {
    Homography model;
    std::vector<bool> inlier_mask;
    int inlier_count = 0;
};

/// Perspective-divided image of p. Throws AtInfinity when the projective
/// depth collapses (|w| < 1e-12).
Vec2 apply_homography(const Homography& H, const Vec2& p);

/// Normalized DLT (Hartley conditioning), least-squares over all pairs.
Homography estimate_homography_dlt(const std::vector<PointPair>& pairs);

/// Weighted variant; weights scale the design-matrix rows.
Homography estimate_homography_dlt(const std::vector<PointPair>& pairs,
                                   const std::vector<double>& weights);

/// MSAC loop plus Huber-IRLS refinement on the consensus set.
RobustResult robust_homography(const std::vector<PointPair>& pairs, const RobustConfig& cfg);

/// Reprojection error |H(src) - dst|.
double reprojection_error(const Homography& H, const PointPair& pair);

}  // namespace panomesh

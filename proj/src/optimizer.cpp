#include "panomesh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "panomesh/kernels.hpp"

namespace panomesh {

double gaussian_weight(int i, int j, double sigma) {
    const double d = j - i;
    const double s = sigma / 3.0;
    return std::exp(-(d * d) / (s * s));
}

namespace {

int window_radius(double sigma) { return std::max(1, static_cast<int>(std::lround(sigma))); }

// Offset weights w(|j-i|) for offsets 1..radius and the per-frame weight sums
// over the clipped window.
struct WeightTable {
    int radius;
    std::vector<double> by_offset;  // index 1..radius
    std::vector<double> sum;        // per frame i

    WeightTable(int n, const OptimizerConfig& cfg) : radius(window_radius(cfg.sigma)) {
        by_offset.assign(radius + 1, 0.0);
        for (int d = 1; d <= radius; ++d) by_offset[d] = gaussian_weight(0, d, cfg.sigma);
        sum.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int d = 1; d <= radius; ++d) {
                if (i - d >= 0) s += by_offset[d];
                if (i + d < n) s += by_offset[d];
            }
            sum[i] = s;
        }
    }
};

void check_shape(const VertexProfileSet& a, const VertexProfileSet& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(what);
}

// One or more Jacobi sweeps on the stacked per-frame value blocks.
// target may be null (beta treated as 0).
void jacobi_solve(VertexProfileSet& out, const VertexProfileSet& traj,
                  const VertexProfileSet* target, double beta, const OptimizerConfig& cfg) {
    const int n = traj.frames;
    const int vpf = traj.values_per_frame();
    const WeightTable wt(n, cfg);
    const double b = target ? beta : 0.0;

    std::vector<double> prev = out.data;
    std::vector<double> next(prev.size());
    std::vector<double> acc(vpf);
    for (int iter = 0; iter < cfg.jacobi_iters; ++iter) {
        double max_upd = 0.0;
        for (int i = 0; i < n; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int d = 1; d <= wt.radius; ++d) {
                const double w = wt.by_offset[d];
                if (i - d >= 0)
                    kernels::axpy_d(acc.data(), w, prev.data() + static_cast<std::size_t>(i - d) * vpf, vpf);
                if (i + d < n)
                    kernels::axpy_d(acc.data(), w, prev.data() + static_cast<std::size_t>(i + d) * vpf, vpf);
            }
            const double inv_denom = 1.0 / (1.0 + b + cfg.lambda_t * wt.sum[i]);
            const double* tgt = target ? target->frame_data(i) : traj.frame_data(i);
            double* dst = next.data() + static_cast<std::size_t>(i) * vpf;
            kernels::jacobi_combine_d(dst, traj.frame_data(i), tgt, acc.data(), b, cfg.lambda_t,
                                      inv_denom, vpf);
            const double* old = prev.data() + static_cast<std::size_t>(i) * vpf;
            for (int k = 0; k < vpf; ++k) max_upd = std::max(max_upd, std::abs(dst[k] - old[k]));
        }
        prev.swap(next);
        if (max_upd < cfg.tol) break;
    }
    out.data = std::move(prev);
}

}  // namespace

double stabilization_energy(const VertexProfileSet& smoothed, const VertexProfileSet& traj,
                            const OptimizerConfig& cfg) {
    check_shape(smoothed, traj, "stabilization_energy shape mismatch");
    const int n = smoothed.frames;
    const int vpf = smoothed.values_per_frame();
    const int radius = window_radius(cfg.sigma);

    double data = 0.0;
    for (std::size_t k = 0; k < smoothed.data.size(); ++k) {
        const double d = smoothed.data[k] - traj.data[k];
        data += d * d;
    }
    double smooth = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int d = 1; d <= radius && i + d < n; ++d) {
            const double w = gaussian_weight(i, i + d, cfg.sigma);
            const double* a = smoothed.frame_data(i);
            const double* b = smoothed.frame_data(i + d);
            double s = 0.0;
            for (int k = 0; k < vpf; ++k) {
                const double diff = a[k] - b[k];
                s += diff * diff;
            }
            smooth += w * s;
        }
    }
    return data + cfg.lambda_t * smooth;
}

double stitching_energy(const VertexProfileSet& vhat, const VertexProfileSet& v,
                        const VertexProfileSet& that, const VertexProfileSet& t) {
    check_shape(vhat, v, "stitching_energy shape mismatch");
    check_shape(that, t, "stitching_energy shape mismatch");
    check_shape(vhat, that, "stitching_energy shape mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < vhat.data.size(); ++k) {
        const double r = vhat.data[k] - v.data[k] + that.data[k] - t.data[k];
        e += r * r;
    }
    return e;
}

VertexProfileSet smooth_trajectories(const VertexProfileSet& traj, const OptimizerConfig& cfg) {
    VertexProfileSet out = traj;
    out.role = ProfileRole::Smoothed;
    jacobi_solve(out, traj, nullptr, 0.0, cfg);
    return out;
}

VertexProfileSet solve_stitch_profiles(const VertexProfileSet& v, const VertexProfileSet& that,
                                       const VertexProfileSet& t) {
    check_shape(v, that, "solve_stitch_profiles shape mismatch");
    check_shape(v, t, "solve_stitch_profiles shape mismatch");
    VertexProfileSet out = v;
    out.role = ProfileRole::OptimizedStitching;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = v.data[k] - (that.data[k] - t.data[k]);
    }
    return out;
}

VertexProfileSet temporary_target(const VertexProfileSet& vhat, const VertexProfileSet& v,
                                  const VertexProfileSet& t) {
    check_shape(vhat, v, "temporary_target shape mismatch");
    check_shape(vhat, t, "temporary_target shape mismatch");
    VertexProfileSet out = t;
    out.role = ProfileRole::Trajectory;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = t.data[k] + v.data[k] - vhat.data[k];
    }
    return out;
}

VertexProfileSet update_smoothed(const VertexProfileSet& traj, const VertexProfileSet& target,
                                 const OptimizerConfig& cfg, const VertexProfileSet* init) {
    check_shape(traj, target, "update_smoothed shape mismatch");
    VertexProfileSet out = init ? *init : traj;
    out.role = ProfileRole::Smoothed;
    jacobi_solve(out, traj, &target, cfg.beta, cfg);
    return out;
}

JointSolution unified_optimize(const VertexProfileSet& traj_a, const VertexProfileSet& traj_b,
                               const VertexProfileSet& stitch_a, const VertexProfileSet& stitch_b,
                               const OptimizerConfig& cfg) {
    check_shape(traj_a, stitch_a, "camera A profile shapes differ");
    check_shape(traj_b, stitch_b, "camera B profile shapes differ");
    if (traj_a.frames != traj_b.frames) throw ShapeMismatch("cameras have different frame counts");

    JointSolution sol;
    sol.smoothed_a = smooth_trajectories(traj_a, cfg);
    sol.smoothed_b = smooth_trajectories(traj_b, cfg);
    sol.stitch_a = solve_stitch_profiles(stitch_a, sol.smoothed_a, traj_a);
    sol.stitch_b = solve_stitch_profiles(stitch_b, sol.smoothed_b, traj_b);

    auto unified_energy = [&]() {
        const double e = stabilization_energy(sol.smoothed_a, traj_a, cfg) +
                         stabilization_energy(sol.smoothed_b, traj_b, cfg) +
                         cfg.beta * (stitching_energy(sol.stitch_a, stitch_a, sol.smoothed_a, traj_a) +
                                     stitching_energy(sol.stitch_b, stitch_b, sol.smoothed_b, traj_b));
        if (!std::isfinite(e)) throw NonFiniteEnergy("unified energy is not finite");
        return e;
    };
    sol.energy_trace.push_back(unified_energy());

    for (int round = 0; round < cfg.outer_iters; ++round) {
        VertexProfileSet target_a = temporary_target(sol.stitch_a, stitch_a, traj_a);
        sol.smoothed_a = update_smoothed(traj_a, target_a, cfg, &sol.smoothed_a);
        VertexProfileSet target_b = temporary_target(sol.stitch_b, stitch_b, traj_b);
        sol.smoothed_b = update_smoothed(traj_b, target_b, cfg, &sol.smoothed_b);
        sol.stitch_a = solve_stitch_profiles(stitch_a, sol.smoothed_a, traj_a);
        sol.stitch_b = solve_stitch_profiles(stitch_b, sol.smoothed_b, traj_b);

        const double e = unified_energy();
        const double prev = sol.energy_trace.back();
        sol.energy_trace.push_back(e);
        if (std::abs(prev - e) < cfg.tol) break;
    }
    return sol;
}

void export_energy_csv(const std::string& path, const std::vector<double>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "outer_iter,energy\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace panomesh

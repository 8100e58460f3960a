#pragma once

#include <string>
#include <vector>

#include "panomesh/profiles.hpp"

namespace panomesh {

struct OptimizerConfig {
    double sigma = 8.0;     // temporal smoothing radius, frames
    double lambda_t = 50.0; // trajectory-vs-smoothness weight
    double beta = 10.0;     // stitching weight
    int jacobi_iters = 500;
    int outer_iters = 20;
    double tol = 1e-4;  // px
};

struct JointSolution {
    VertexProfileSet smoothed_a, smoothed_b;        // T-hat
    VertexProfileSet stitch_a, stitch_b;            // V-hat
    std::vector<double> energy_trace;               // unified energy per outer round
};

/// exp(-(j-i)^2 / (sigma/3)^2); the j=i term is excluded by callers.
double gaussian_weight(int i, int j, double sigma);

/// Data term plus lambda-weighted smoothness over the clipped window
/// j in [i-sigma, i+sigma], j != i; each unordered pair counted once.
double stabilization_energy(const VertexProfileSet& smoothed, const VertexProfileSet& traj,
                            const OptimizerConfig& cfg);

/// Sum of squared stitching residuals ||Vhat - V + That - T||^2.
double stitching_energy(const VertexProfileSet& vhat, const VertexProfileSet& v,
                        const VertexProfileSet& that, const VertexProfileSet& t);

/// Independent per-camera smoothing (Jacobi iteration on the quadratic).
VertexProfileSet smooth_trajectories(const VertexProfileSet& traj, const OptimizerConfig& cfg);

/// Closed form: Vhat(i) = V(i) - (That(i) - T(i)).
VertexProfileSet solve_stitch_profiles(const VertexProfileSet& v, const VertexProfileSet& that,
                                       const VertexProfileSet& t);

/// Tstar(i) = T(i) + V(i) - Vhat(i).
VertexProfileSet temporary_target(const VertexProfileSet& vhat, const VertexProfileSet& v,
                                  const VertexProfileSet& t);

/// Minimizer of L_stable(That) + beta * ||That - Tstar||^2 via Jacobi,
/// optionally warm-started from `init` (defaults to T).
VertexProfileSet update_smoothed(const VertexProfileSet& traj, const VertexProfileSet& target,
                                 const OptimizerConfig& cfg,
                                 const VertexProfileSet* init = nullptr);

/// Alternating joint solve over both cameras; records the unified energy
/// before alternation and after each outer round.
JointSolution unified_optimize(const VertexProfileSet& traj_a, const VertexProfileSet& traj_b,
                               const VertexProfileSet& stitch_a, const VertexProfileSet& stitch_b,
                               const OptimizerConfig& cfg);

/// CSV export, header: outer_iter,energy
void export_energy_csv(const std::string& path, const std::vector<double>& trace);

}  // namespace panomesh

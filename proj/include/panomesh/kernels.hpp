#pragma once

#include <cstddef>

// Data-parallel inner loops used by the optimizer, matcher and field code.
// Scalar reference implementations always exist; an AVX2 variant is selected
// at runtime when the CPU supports it. Set PANOMESH_FORCE_SCALAR=1 in the
// environment to pin the scalar path (used by the equivalence tests).

namespace panomesh::kernels {

struct CorrStats {
    double dot = 0.0;   // sum(a[i] * b[i])
    double sum = 0.0;   // sum(b[i])
    double sumsq = 0.0; // sum(b[i]^2)
};

struct Dispatch {
    // dst[i] = a[i] + b[i]
    void (*add_d)(double* dst, const double* a, const double* b, std::size_t n);
    // dst[i] += alpha * x[i]
    void (*axpy_d)(double* dst, double alpha, const double* x, std::size_t n);
    // out[i] = (data[i] + beta * target[i] + lambda * acc[i]) * inv_denom
    void (*jacobi_combine_d)(double* out, const double* data, const double* target,
                             const double* acc, double beta, double lambda,
                             double inv_denom, std::size_t n);
    // accumulate dot/sum/sumsq of one template row against one image row
    void (*corr_stats_f)(CorrStats& st, const float* tmpl, const float* img, std::size_t n);
    const char* name;
};

const Dispatch& active();
const Dispatch& scalar();
bool avx2_available();

inline void add_d(double* dst, const double* a, const double* b, std::size_t n) {
    active().add_d(dst, a, b, n);
}
inline void axpy_d(double* dst, double alpha, const double* x, std::size_t n) {
    active().axpy_d(dst, alpha, x, n);
}
inline void jacobi_combine_d(double* out, const double* data, const double* target,
                             const double* acc, double beta, double lambda,
                             double inv_denom, std::size_t n) {
    active().jacobi_combine_d(out, data, target, acc, beta, lambda, inv_denom, n);
}
inline void corr_stats_f(CorrStats& st, const float* tmpl, const float* img, std::size_t n) {
    active().corr_stats_f(st, tmpl, img, n);
}

}  // namespace panomesh::kernels

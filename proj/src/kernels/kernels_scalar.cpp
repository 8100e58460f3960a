#include "panomesh/kernels.hpp"

namespace panomesh::kernels::detail {

void add_d_scalar(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void axpy_d_scalar(double* dst, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += alpha * x[i];
}

void jacobi_combine_d_scalar(double* out, const double* data, const double* target,
                             const double* acc, double beta, double lambda,
                             double inv_denom, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (data[i] + beta * target[i] + lambda * acc[i]) * inv_denom;
    }
}

void corr_stats_f_scalar(CorrStats& st, const float* tmpl, const float* img, std::size_t n) {
    double dot = 0.0, sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = tmpl[i];
        const double v = img[i];
        dot += t * v;
        sum += v;
        sumsq += v * v;
    }
    st.dot += dot;
    st.sum += sum;
    st.sumsq += sumsq;
}

}  // namespace panomesh::kernels::detail

// AVX2 variants of the hot loops. Compiled with -mavx2 -mfma; only reached
// through the runtime dispatch in kernels.cpp, so the rest of the binary
// stays baseline-x86-64.

#include "panomesh/kernels.hpp"

#include <immintrin.h>

namespace panomesh::kernels::detail {

void add_d_avx2(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        _mm256_storeu_pd(dst + i, _mm256_add_pd(va, vb));
    }
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void axpy_d_avx2(double* dst, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vd = _mm256_loadu_pd(dst + i);
        _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(va, vx, vd));
    }
    for (; i < n; ++i) dst[i] += alpha * x[i];
}

void jacobi_combine_d_avx2(double* out, const double* data, const double* target,
                           const double* acc, double beta, double lambda,
                           double inv_denom, std::size_t n) {
    const __m256d vb = _mm256_set1_pd(beta);
    const __m256d vl = _mm256_set1_pd(lambda);
    const __m256d vi = _mm256_set1_pd(inv_denom);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vd = _mm256_loadu_pd(data + i);
        __m256d vt = _mm256_loadu_pd(target + i);
        __m256d va = _mm256_loadu_pd(acc + i);
        __m256d s = _mm256_fmadd_pd(vb, vt, vd);
        s = _mm256_fmadd_pd(vl, va, s);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(s, vi));
    }
    for (; i < n; ++i) {
        out[i] = (data[i] + beta * target[i] + lambda * acc[i]) * inv_denom;
    }
}

void corr_stats_f_avx2(CorrStats& st, const float* tmpl, const float* img, std::size_t n) {
    __m256d dot = _mm256_setzero_pd();
    __m256d sum = _mm256_setzero_pd();
    __m256d sumsq = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_cvtps_pd(_mm_loadu_ps(tmpl + i));
        __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(img + i));
        dot = _mm256_fmadd_pd(t, v, dot);
        sum = _mm256_add_pd(sum, v);
        sumsq = _mm256_fmadd_pd(v, v, sumsq);
    }
    alignas(32) double buf[4];
    auto hsum = [&buf](__m256d v) {
        _mm256_store_pd(buf, v);
        return (buf[0] + buf[1]) + (buf[2] + buf[3]);
    };
    double d = hsum(dot), s = hsum(sum), q = hsum(sumsq);
    for (; i < n; ++i) {
        const double t = tmpl[i];
        const double v = img[i];
        d += t * v;
        s += v;
        q += v * v;
    }
    st.dot += d;
    st.sum += s;
    st.sumsq += q;
}

}  // namespace panomesh::kernels::detail

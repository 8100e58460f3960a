#include "panomesh/kernels.hpp"

#include <cstdlib>

namespace panomesh::kernels {

namespace detail {
void add_d_scalar(double*, const double*, const double*, std::size_t);
void axpy_d_scalar(double*, double, const double*, std::size_t);
void jacobi_combine_d_scalar(double*, const double*, const double*, const double*,
                             double, double, double, std::size_t);
void corr_stats_f_scalar(CorrStats&, const float*, const float*, std::size_t);
void add_d_avx2(double*, const double*, const double*, std::size_t);
void axpy_d_avx2(double*, double, const double*, std::size_t);
void jacobi_combine_d_avx2(double*, const double*, const double*, const double*,
                           double, double, double, std::size_t);
void corr_stats_f_avx2(CorrStats&, const float*, const float*, std::size_t);
}  // namespace detail

static const Dispatch kScalar = {
    detail::add_d_scalar,
    detail::axpy_d_scalar,
    detail::jacobi_combine_d_scalar,
    detail::corr_stats_f_scalar,
    "scalar",
};

static const Dispatch kAvx2 = {
    detail::add_d_avx2,
    detail::axpy_d_avx2,
    detail::jacobi_combine_d_avx2,
    detail::corr_stats_f_avx2,
    "avx2",
};

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Dispatch& scalar() { return kScalar; }

const Dispatch& active() {
    static const Dispatch* chosen = [] {
        const char* force = std::getenv("PANOMESH_FORCE_SCALAR");
        if (force && force[0] == '1') return &kScalar;
        return avx2_available() ? &kAvx2 : &kScalar;
    }();
    return *chosen;
}

}  // namespace panomesh::kernels

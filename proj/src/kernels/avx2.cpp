#include <immintrin.h>

#include <cstdint>

#include "optpac/kernels.hpp"

namespace optpac::kernels::avx2 {

namespace {

// Lane masks for a tail of 0..3 doubles.
alignas(32) const std::int64_t kTailMask[4][4] = {
    {0, 0, 0, 0},
    {-1, 0, 0, 0},
    {-1, -1, 0, 0},
    {-1, -1, -1, 0},
};

inline __m256i tail_mask(std::size_t rem) {
    return _mm256_load_si256(reinterpret_cast<const __m256i*>(kTailMask[rem]));
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    if (i < n) {
        const __m256i m = tail_mask(n - i);
        acc1 = _mm256_fmadd_pd(_mm256_maskload_pd(a + i, m), _mm256_maskload_pd(b + i, m), acc1);
    }
    return hsum(_mm256_add_pd(acc0, acc1));
}

void dot2(const double* p, const double* x, const double* y, std::size_t n, double* px,
          double* py) {
    __m256d ax = _mm256_setzero_pd();
    __m256d ay = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d pv = _mm256_loadu_pd(p + i);
        ax = _mm256_fmadd_pd(pv, _mm256_loadu_pd(x + i), ax);
        ay = _mm256_fmadd_pd(pv, _mm256_loadu_pd(y + i), ay);
    }
    if (i < n) {
        const __m256i m = tail_mask(n - i);
        const __m256d pv = _mm256_maskload_pd(p + i, m);
        ax = _mm256_fmadd_pd(pv, _mm256_maskload_pd(x + i, m), ax);
        ay = _mm256_fmadd_pd(pv, _mm256_maskload_pd(y + i, m), ay);
    }
    *px = hsum(ax);
    *py = hsum(ay);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    if (i < n) {
        const __m256i m = tail_mask(n - i);
        const __m256d yv = _mm256_maskload_pd(y + i, m);
        _mm256_maskstore_pd(y + i, m, _mm256_fmadd_pd(av, _mm256_maskload_pd(x + i, m), yv));
    }
}

}  // namespace optpac::kernels::avx2

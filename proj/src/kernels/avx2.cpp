// Compiled with -mavx2 -ffp-contract=off (see src/CMakeLists.txt). Only reached
// through the dispatch table after a CPUID check.

#include <immintrin.h>

#include "v2i/kernels.hpp"

namespace v2i::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

// axpy form: each output lane accumulates a[i] * b[k - i] in increasing i,
// exactly like the scalar reference, so results are bit-identical.
void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (double& v : out) v = 0.0;
    const std::size_t nb = b.size();
    const std::size_t vec_end = nb & ~std::size_t{3};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const __m256d ai = _mm256_set1_pd(a[i]);
        double* dst = out.data() + i;
        std::size_t j = 0;
        for (; j < vec_end; j += 4) {
            const __m256d prod = _mm256_mul_pd(ai, _mm256_loadu_pd(b.data() + j));
            _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(dst + j), prod));
        }
        for (; j < nb; ++j) dst[j] = dst[j] + a[i] * b[j];
    }
}

double weighted_index_sum(std::span<const double> p, double offset) {
    const std::size_t n = p.size();
    const std::size_t vec_end = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    __m256d idx = _mm256_setr_pd(offset, offset + 1.0, offset + 2.0, offset + 3.0);
    const __m256d step = _mm256_set1_pd(4.0);
    std::size_t i = 0;
    for (; i < vec_end; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(p.data() + i), idx));
        idx = _mm256_add_pd(idx, step);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += p[i] * (static_cast<double>(i) + offset);
    return total;
}

double sum(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t vec_end = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < vec_end; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    const std::size_t vec_end = n & ~std::size_t{3};
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < vec_end; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d < 0.0 ? -d : d;
    }
    return total;
}

void scale(std::span<double> x, double s) {
    const std::size_t n = x.size();
    const std::size_t vec_end = n & ~std::size_t{3};
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i < vec_end; i += 4) _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), vs));
    for (; i < n; ++i) x[i] *= s;
}

}  // namespace v2i::kernels::avx2

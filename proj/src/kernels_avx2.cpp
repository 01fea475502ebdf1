// AVX2 variants of the dense-array kernels. Compiled only on x86-64 targets
// (see src/CMakeLists.txt); never called unless the CPU reports AVX2.

#ifdef PGM_HAVE_AVX2

#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "pgm/kernels.hpp"

namespace pgm::kernels::avx2 {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

double max(const double* x, std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        best = hmax(acc);
    }
    for (; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

void mul(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void add_into(double* dst, const double* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
    for (; i < n; ++i) dst[i] += src[i];
}

void scale(double* x, double c, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vc));
    for (; i < n; ++i) x[i] *= c;
}

void sum_axis(const double* src, double* dst, std::size_t outer, std::size_t k,
              std::size_t inner) {
    if (inner < 4) {
        scalar::sum_axis(src, dst, outer, k, inner);
        return;
    }
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * k * inner;
        double* out = dst + o * inner;
        for (std::size_t i = 0; i < inner; ++i) out[i] = block[i];
        for (std::size_t s = 1; s < k; ++s) add_into(out, block + s * inner, inner);
    }
}

void max_axis(const double* src, double* dst, int* arg, std::size_t outer,
              std::size_t k, std::size_t inner) {
    if (inner < 4) {
        scalar::max_axis(src, dst, arg, outer, k, inner);
        return;
    }
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * k * inner;
        double* out = dst + o * inner;
        int* aout = arg + o * inner;
        std::size_t i = 0;
        for (; i + 4 <= inner; i += 4) {
            __m256d best = _mm256_loadu_pd(block + i);
            __m256d besti = _mm256_setzero_pd();
            for (std::size_t s = 1; s < k; ++s) {
                __m256d row = _mm256_loadu_pd(block + s * inner + i);
                __m256d gt = _mm256_cmp_pd(row, best, _CMP_GT_OQ);
                best = _mm256_blendv_pd(best, row, gt);
                besti = _mm256_blendv_pd(besti, _mm256_set1_pd(static_cast<double>(s)), gt);
            }
            _mm256_storeu_pd(out + i, best);
            alignas(32) double idx[4];
            _mm256_store_pd(idx, besti);
            for (int lane = 0; lane < 4; ++lane)
                aout[i + lane] = static_cast<int>(idx[lane]);
        }
        for (; i < inner; ++i) {
            double best = block[i];
            int bi = 0;
            for (std::size_t s = 1; s < k; ++s) {
                double v = block[s * inner + i];
                if (v > best) {
                    best = v;
                    bi = static_cast<int>(s);
                }
            }
            out[i] = best;
            aout[i] = bi;
        }
    }
}

}  // namespace pgm::kernels::avx2

#endif  // PGM_HAVE_AVX2

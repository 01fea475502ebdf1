#include <limits>

#include "pgm/kernels.hpp"

namespace pgm::kernels::scalar {

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max(const double* x, std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void mul(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void add_into(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void scale(double* x, double c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= c;
}

void sum_axis(const double* src, double* dst, std::size_t outer, std::size_t k,
              std::size_t inner) {
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * k * inner;
        double* out = dst + o * inner;
        for (std::size_t i = 0; i < inner; ++i) out[i] = block[i];
        for (std::size_t s = 1; s < k; ++s) add_into(out, block + s * inner, inner);
    }
}

void max_axis(const double* src, double* dst, int* arg, std::size_t outer,
              std::size_t k, std::size_t inner) {
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * k * inner;
        double* out = dst + o * inner;
        int* aout = arg + o * inner;
        for (std::size_t i = 0; i < inner; ++i) {
            out[i] = block[i];
            aout[i] = 0;
        }
        for (std::size_t s = 1; s < k; ++s) {
            const double* row = block + s * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                if (row[i] > out[i]) {  // strict: ties keep the lowest state
                    out[i] = row[i];
                    aout[i] = static_cast<int>(s);
                }
            }
        }
    }
}

}  // namespace pgm::kernels::scalar

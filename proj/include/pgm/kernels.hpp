#pragma once

#include <cstddef>

// Dense-array primitives behind the factor algebra. Each operation has a
// scalar reference implementation and, on x86-64 hosts with AVX2, a wide
// variant. The backend is picked once at startup; PGM_KERNELS=scalar in the
// environment forces the reference path.
//
// Axis reductions view `src` as a row-major (outer, k, inner) block and
// reduce over the middle axis, which is exactly the shape of marginalizing
// one variable out of a row-major factor table.

namespace pgm::kernels {

double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void mul(double* dst, const double* a, const double* b, std::size_t n);
void add_into(double* dst, const double* src, std::size_t n);
void scale(double* x, double c, std::size_t n);

/// dst[o,i] = sum_s src[o,s,i]; dst has outer*inner entries.
void sum_axis(const double* src, double* dst, std::size_t outer, std::size_t k,
              std::size_t inner);

/// dst[o,i] = max_s src[o,s,i]; arg[o,i] = lowest maximizing s.
void max_axis(const double* src, double* dst, int* arg, std::size_t outer,
              std::size_t k, std::size_t inner);

/// Name of the selected backend ("scalar" or "avx2").
const char* backend();

namespace scalar {
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void mul(double* dst, const double* a, const double* b, std::size_t n);
void add_into(double* dst, const double* src, std::size_t n);
void scale(double* x, double c, std::size_t n);
void sum_axis(const double* src, double* dst, std::size_t outer, std::size_t k,
              std::size_t inner);
void max_axis(const double* src, double* dst, int* arg, std::size_t outer,
              std::size_t k, std::size_t inner);
}  // namespace scalar

}  // namespace pgm::kernels

#include <cstdlib>
#include <cstring>

#include "pgm/kernels.hpp"

#ifdef PGM_HAVE_AVX2
namespace pgm::kernels::avx2 {
double sum(const double*, std::size_t);
double max(const double*, std::size_t);
double dot(const double*, const double*, std::size_t);
void mul(double*, const double*, const double*, std::size_t);
void add_into(double*, const double*, std::size_t);
void scale(double*, double, std::size_t);
void sum_axis(const double*, double*, std::size_t, std::size_t, std::size_t);
void max_axis(const double*, double*, int*, std::size_t, std::size_t, std::size_t);
}  // namespace pgm::kernels::avx2
#endif

namespace pgm::kernels {

namespace {

struct Dispatch {
    const char* name;
    double (*sum)(const double*, std::size_t);
    double (*max)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*mul)(double*, const double*, const double*, std::size_t);
    void (*add_into)(double*, const double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    void (*sum_axis)(const double*, double*, std::size_t, std::size_t, std::size_t);
    void (*max_axis)(const double*, double*, int*, std::size_t, std::size_t, std::size_t);
};

constexpr Dispatch kScalar = {
    "scalar",     scalar::sum,      scalar::max,      scalar::dot,
    scalar::mul,  scalar::add_into, scalar::scale,    scalar::sum_axis,
    scalar::max_axis,
};

Dispatch select() {
    const char* forced = std::getenv("PGM_KERNELS");
    if (forced && std::strcmp(forced, "scalar") == 0) return kScalar;
#ifdef PGM_HAVE_AVX2
    if (__builtin_cpu_supports("avx2")) {
        return Dispatch{
            "avx2",     avx2::sum,      avx2::max,      avx2::dot,
            avx2::mul,  avx2::add_into, avx2::scale,    avx2::sum_axis,
            avx2::max_axis,
        };
    }
#endif
    return kScalar;
}

const Dispatch& table() {
    static const Dispatch d = select();
    return d;
}

}  // namespace

double sum(const double* x, std::size_t n) { return table().sum(x, n); }
double max(const double* x, std::size_t n) { return table().max(x, n); }
double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void mul(double* dst, const double* a, const double* b, std::size_t n) {
    table().mul(dst, a, b, n);
}
void add_into(double* dst, const double* src, std::size_t n) { table().add_into(dst, src, n); }
void scale(double* x, double c, std::size_t n) { table().scale(x, c, n); }
void sum_axis(const double* src, double* dst, std::size_t outer, std::size_t k,
              std::size_t inner) {
    table().sum_axis(src, dst, outer, k, inner);
}
void max_axis(const double* src, double* dst, int* arg, std::size_t outer, std::size_t k,
              std::size_t inner) {
    table().max_axis(src, dst, arg, outer, k, inner);
}
const char* backend() { return table().name; }

}  // namespace pgm::kernels

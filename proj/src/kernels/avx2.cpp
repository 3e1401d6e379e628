// Compiled with -mavx2 only. No FMA: products and sums are rounded separately
// so results match the scalar reference bit for bit.
#include "kernels_impl.hpp"

#include <immintrin.h>

namespace sfn::kernels::detail {

namespace {

void add(std::span<double> dst, std::span<const double> src) {
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(dst.data() + i);
        __m256d y = _mm256_loadu_pd(src.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_add_pd(x, y));
    }
    for (; i < n; ++i) dst[i] += src[i];
}

void sub(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(a.data() + i);
        __m256d y = _mm256_loadu_pd(b.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_sub_pd(x, y));
    }
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(a.data() + i);
        __m256d y = _mm256_loadu_pd(b.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_mul_pd(x, y));
    }
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale(std::span<double> dst, double alpha, std::span<const double> src) {
    const std::size_t n = dst.size();
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst.data() + i, _mm256_mul_pd(va, _mm256_loadu_pd(src.data() + i)));
    }
    for (; i < n; ++i) dst[i] = alpha * src[i];
}

void axpy(std::span<double> dst, double alpha, std::span<const double> src) {
    const std::size_t n = dst.size();
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(src.data() + i));
        _mm256_storeu_pd(dst.data() + i, _mm256_add_pd(_mm256_loadu_pd(dst.data() + i), prod));
    }
    for (; i < n; ++i) dst[i] += alpha * src[i];
}

void fill(std::span<double> dst, double value) {
    const std::size_t n = dst.size();
    const __m256d v = _mm256_set1_pd(value);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst.data() + i, v);
    for (; i < n; ++i) dst[i] = value;
}

// (l0 + l1) + (l2 + l3), matching the scalar lane combine.
inline double combine(__m256d acc) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
        acc = _mm256_add_pd(acc, prod);
    }
    double total = combine(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum(std::span<const double> a) {
    const std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a.data() + i));
    double total = combine(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

double sum_sq(std::span<const double> a) {
    const std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(a.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(x, x));
    }
    double total = combine(acc);
    for (; i < n; ++i) total += a[i] * a[i];
    return total;
}

} // namespace

const KernelTable kAvx2Table{Isa::Avx2, add, sub, mul, scale, axpy, fill, dot, sum, sum_sq};

} // namespace sfn::kernels::detail

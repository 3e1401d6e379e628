#include "kernels_impl.hpp"

namespace sfn::kernels::detail {

namespace {

void add(std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void sub(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] - b[i];
}

void mul(std::span<double> dst, std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] * b[i];
}

void scale(std::span<double> dst, double alpha, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = alpha * src[i];
}

void axpy(std::span<double> dst, double alpha, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

void fill(std::span<double> dst, double value) {
    for (double& x : dst) x = value;
}

template <class Term>
double lane_reduce(std::size_t n, Term term) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lane[0] += term(i);
        lane[1] += term(i + 1);
        lane[2] += term(i + 2);
        lane[3] += term(i + 3);
    }
    double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (; i < n; ++i) total += term(i);
    return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return lane_reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double sum(std::span<const double> a) {
    return lane_reduce(a.size(), [&](std::size_t i) { return a[i]; });
}

double sum_sq(std::span<const double> a) {
    return lane_reduce(a.size(), [&](std::size_t i) { return a[i] * a[i]; });
}

} // namespace

const KernelTable kScalarTable{Isa::Scalar, add, sub, mul, scale, axpy, fill, dot, sum, sum_sq};

} // namespace sfn::kernels::detail

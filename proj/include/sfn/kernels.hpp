#pragma once

// Data-parallel arithmetic used by the batched evaluators.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2
// variant selected at runtime. Reductions (dot, sum, sum_sq) accumulate in
// four interleaved lanes that are combined as (l0 + l1) + (l2 + l3), with the
// tail added last; the scalar reference follows the same layout, so every
// variant returns bit-identical results.

#include <cstddef>
#include <span>
#include <string_view>

namespace sfn::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    // dst += src
    void (*add)(std::span<double> dst, std::span<const double> src);
    // dst = a - b
    void (*sub)(std::span<double> dst, std::span<const double> a, std::span<const double> b);
    // dst = a * b
    void (*mul)(std::span<double> dst, std::span<const double> a, std::span<const double> b);
    // dst = alpha * src
    void (*scale)(std::span<double> dst, double alpha, std::span<const double> src);
    // dst += alpha * src
    void (*axpy)(std::span<double> dst, double alpha, std::span<const double> src);
    // dst = value
    void (*fill)(std::span<double> dst, double value);
    double (*dot)(std::span<const double> a, std::span<const double> b);
    double (*sum)(std::span<const double> a);
    double (*sum_sq)(std::span<const double> a);
};

const KernelTable& scalar_table();
// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_has_avx2();

// The table used by the library. Defaults to the best variant the CPU supports.
const KernelTable& active();

// Forces a variant. Selecting Avx2 on a CPU without it falls back to Scalar;
// the return value is the variant actually selected.
Isa select(Isa isa);
Isa select_best();

std::string_view name(Isa isa);

} // namespace sfn::kernels

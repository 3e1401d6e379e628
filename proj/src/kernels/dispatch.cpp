#include "kernels_impl.hpp"

#include <atomic>

namespace sfn::kernels {

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(SFN_HAVE_AVX2)
    return &detail::kAvx2Table;
#else
    return nullptr;
#endif
}

bool cpu_has_avx2() {
#if defined(SFN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

const KernelTable* best_table() {
    if (cpu_has_avx2() && avx2_table() != nullptr) return avx2_table();
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{best_table()};
    return table;
}

} // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa select(Isa isa) {
    const KernelTable* table = &scalar_table();
    if (isa == Isa::Avx2 && cpu_has_avx2() && avx2_table() != nullptr) table = avx2_table();
    current().store(table, std::memory_order_release);
    return table->isa;
}

Isa select_best() { return select(Isa::Avx2); }

std::string_view name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

} // namespace sfn::kernels

#pragma once

#include "sfn/kernels.hpp"

namespace sfn::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(SFN_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

} // namespace sfn::kernels::detail

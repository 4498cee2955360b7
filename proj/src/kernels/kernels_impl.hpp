#pragma once

#include "hardy/kernels.hpp"

namespace hardy::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(HARDY_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace hardy::kernels::detail

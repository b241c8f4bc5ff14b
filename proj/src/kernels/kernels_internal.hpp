#pragma once

#include "ecg/kernels.hpp"

namespace ecg::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(ECG_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(ECG_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace ecg::kernels::detail

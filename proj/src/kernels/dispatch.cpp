#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace ecg::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar() { return detail::kScalarTable; }

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &detail::kScalarTable;
    case Isa::kAvx2:
#if defined(ECG_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2")) return &detail::kAvx2Table;
#endif
      return nullptr;
    case Isa::kNeon:
#if defined(ECG_HAVE_NEON)
      return &detail::kNeonTable;  // mandatory on AArch64
#else
      return nullptr;
#endif
  }
  return nullptr;
}

namespace {

const KernelTable& select() {
  if (const char* forced = std::getenv("ECG_KERNELS")) {
    if (std::string_view(forced) == "scalar") return detail::kScalarTable;
  }
  if (const auto* t = table_for(Isa::kAvx2)) return *t;
  if (const auto* t = table_for(Isa::kNeon)) return *t;
  return detail::kScalarTable;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace ecg::kernels

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace hardy::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(HARDY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const bool have = cpu_has_avx2();
  if (const char* env = std::getenv("HARDY_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &detail::kScalarTable;
  }
#if defined(HARDY_HAVE_AVX2)
  if (have) return &detail::kAvx2Table;
#endif
  (void)have;
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial_table()};
  return current;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool avx2_available() { return cpu_has_avx2(); }

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(HARDY_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::kAvx2Table;
#endif
  return nullptr;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &detail::kScalarTable : avx2_table();
  if (table == nullptr) return false;
  slot().store(table, std::memory_order_release);
  return true;
}

}  // namespace hardy::kernels

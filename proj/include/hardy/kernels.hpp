#pragma once

// Data-parallel inner loops shared by the variational and evolution code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once at startup from the CPU features
// (override with HARDY_KERNELS=scalar|avx2) and can be switched explicitly,
// which the equivalence tests rely on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace hardy::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Slot-major gather description: point q combines `arity` nodal values
/// u[index[a * points + q]] with coefficients coef[a * points + q].
struct GatherView {
  int arity = 0;
  std::size_t points = 0;
  std::span<const std::int32_t> index;
  std::span<const double> coef;
};

struct KernelTable {
  Isa isa;

  /// sum_q w[q] * (s[q] + shift)^e, with 0^e = 0 for e > 0.
  double (*weighted_pow_sum)(std::span<const double> w, std::span<const double> s,
                             double e, double shift);

  /// out[q] = w[q] * (s[q] + shift)^e.
  void (*weighted_pow)(std::span<const double> w, std::span<const double> s, double e,
                       double shift, std::span<double> out);

  /// out[q] = sum_a coef[a][q] * u[index[a][q]].
  void (*gather_combine)(const GatherView& view, std::span<const double> u,
                         std::span<double> out);

  /// out[q] = min(cap, x[q]); NaN inputs are mapped to cap.
  void (*cap_min)(std::span<const double> x, double cap, std::span<double> out);
};

const KernelTable& scalar_table();

/// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Currently active table.
const KernelTable& active();

/// Switches the active table; returns false (and leaves it unchanged) if the
/// requested ISA is unavailable.
bool select(Isa isa);

bool avx2_available();

}  // namespace hardy::kernels

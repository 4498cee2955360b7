#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace hardy::kernels::detail {

namespace {

inline double shifted_pow(double s, double e, double shift) {
  const double base = s + shift;
  if (base == 0.0) return e > 0.0 ? 0.0 : (e == 0.0 ? 1.0 : HUGE_VAL);
  return std::pow(base, e);
}

double scalar_weighted_pow_sum(std::span<const double> w, std::span<const double> s,
                               double e, double shift) {
  double acc = 0.0;
  for (std::size_t q = 0; q < w.size(); ++q) acc += w[q] * shifted_pow(s[q], e, shift);
  return acc;
}

void scalar_weighted_pow(std::span<const double> w, std::span<const double> s, double e,
                         double shift, std::span<double> out) {
  for (std::size_t q = 0; q < w.size(); ++q) out[q] = w[q] * shifted_pow(s[q], e, shift);
}

void scalar_gather_combine(const GatherView& view, std::span<const double> u,
                           std::span<double> out) {
  const std::size_t n = view.points;
  std::fill_n(out.begin(), n, 0.0);
  for (int a = 0; a < view.arity; ++a) {
    const std::int32_t* idx = view.index.data() + a * n;
    const double* c = view.coef.data() + a * n;
    for (std::size_t q = 0; q < n; ++q) out[q] += c[q] * u[idx[q]];
  }
}

void scalar_cap_min(std::span<const double> x, double cap, std::span<double> out) {
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double v = x[q];
    out[q] = (v < cap) ? v : cap;  // NaN compares false -> cap
  }
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, scalar_weighted_pow_sum, scalar_weighted_pow,
                               scalar_gather_combine, scalar_cap_min};

}  // namespace hardy::kernels::detail

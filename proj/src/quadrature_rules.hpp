#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace hardy::detail {

struct GaussRule {
  std::vector<double> x;  // nodes on [0, 1]
  std::vector<double> w;  // weights summing to 1
};

/// Gauss-Legendre rule mapped to [0, 1], nodes found by Newton on P_n.
inline GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    rule.x[n - 1 - i] = 0.5 * (1.0 + z);
    rule.w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

/// A sub-interval of a cell, described by its end fractions both measured
/// from the cell start (`t`) and from the cell end (`one_minus_t`), so that
/// points near either end keep full relative precision.
struct SubInterval {
  double t0, t1;
  double s0, s1;  // 1 - t0, 1 - t1
  bool tail = false;  // the final remainder next to the singular end
};

/// Splits [0, 1] geometrically toward t = 0 (toward_start) or t = 1, with
/// `levels` halvings; a trailing interval covers the remainder.
inline std::vector<SubInterval> geometric_split(int levels, bool toward_start) {
  std::vector<SubInterval> parts;
  double outer = 1.0;
  for (int k = 0; k < levels; ++k) {
    const double inner = 0.5 * outer;
    if (toward_start)
      parts.push_back({inner, outer, 1.0 - inner, 1.0 - outer, false});
    else
      parts.push_back({1.0 - outer, 1.0 - inner, outer, inner, false});
    outer = inner;
  }
  if (toward_start)
    parts.push_back({0.0, outer, 1.0, 1.0 - outer, true});
  else
    parts.push_back({1.0 - outer, 1.0, outer, 0.0, true});
  return parts;
}

}  // namespace hardy::detail

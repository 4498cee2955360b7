#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hardy/geometry.hpp"

namespace hardy {

enum class KernelKind {
  DistPower,  // d^{-p}
  DistLog,    // d^{-p} (1 + p/(2(p-1)) log^{-2}(d/D))
  OriginLog,  // (|x| log(R/|x|))^{-n}
  StarHardy,  // |x|^{m-n} |φ^m - |x|^m|^{-p},  m = (p-n)/(p-1)
};

std::string_view kernel_name(KernelKind kind);
/// Accepts "i".."iv" or the names returned by kernel_name().
std::optional<KernelKind> parse_kernel(std::string_view text);

struct Potential {
  KernelKind kind = KernelKind::DistPower;
  double p = 2.0;
  int n = 2;
  double D = 0.0;  // DistLog only
  double R = 0.0;  // OriginLog only
  double m = 0.0;  // StarHardy only
  /// Hypotheses of the existence theory that this parameter set does not meet
  /// (the kernel is still well defined). Empty when everything holds.
  std::vector<std::string> caveats;
};

struct PotentialOptions {
  std::optional<double> D;
  std::optional<double> R;
};

/// Validates the parameter regime of `kind` against `domain` and fills in
/// defaults: D = e·inradius, R = 1.01·e·sup|x|.
Potential make_potential(KernelKind kind, double p, const Domain& domain,
                         const PotentialOptions& options = {});

/// Truncation cap N > 0 of W_N = min{N, W}.
class TruncationLevel {
 public:
  explicit TruncationLevel(double cap);
  double value() const { return cap_; }

 private:
  double cap_;
};

/// W(x) for x in the closure of Ω; +inf on the singular set.
double eval_potential(const Potential& pot, const Domain& domain, std::span<const double> x);
/// Same, for a precomputed mesh/quadrature point.
double eval_potential(const Potential& pot, const Domain& domain, const PointInfo& where);

/// min{N, W(x)}: finite everywhere in Ω, equal to N on the singular set.
double truncate_potential(const Potential& pot, const Domain& domain, std::span<const double> x,
                          TruncationLevel N);

/// Optimal Hardy constant: ((p-1)/p)^p, ((n-1)/n)^n or ((p-n)/p)^p.
double optimal_constant(const Potential& pot);

/// W at every sampling point and node of a mesh (+inf on the singular set).
struct PotentialField {
  std::vector<double> samples;
  std::vector<double> nodes;
};

PotentialField sample_potential(const Potential& pot, const Mesh& mesh);

}  // namespace hardy

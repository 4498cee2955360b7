#pragma once

#include <cstdint>
#include <vector>

#include "hardy/potentials.hpp"
#include "hardy/variational.hpp"

namespace hardy {

/// Random conforming test field: a signed sum of 1–5 profiles (Gaussian
/// bumps, boundary powers d^a, origin logs and origin powers), zero on the
/// boundary. Sample `index` of stream `seed` is reproducible on its own.
GridFunction random_test_field(const MeshPtr& mesh, const Potential& pot, std::uint64_t seed,
                               std::uint64_t index);

struct FuzzResult {
  std::vector<double> quotients;  // per sample, untruncated weight
  std::vector<std::uint8_t> quadrature_converged;
  double min_quotient = 0.0;
  std::size_t violations = 0;  // quotient < C − tolerance
};

/// Rayleigh quotients of `samples` random fields against the untruncated W.
FuzzResult hardy_fuzz(const MeshPtr& mesh, const Potential& pot, int samples, std::uint64_t seed,
                      double tolerance, int workers = 1);

/// Mesh grading direction suited to the singular set of a kernel.
GradeToward natural_grading(KernelKind kind);

}  // namespace hardy

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardy/geometry.hpp"
#include "hardy/potentials.hpp"

namespace hardy {

/// Nodal values of a continuous piecewise-polynomial field; boundary nodes
/// carry exactly 0.
class GridFunction {
 public:
  GridFunction() = default;  // empty, bound to no mesh
  explicit GridFunction(MeshPtr mesh);
  /// Boundary entries are overwritten with 0; non-finite values are rejected.
  GridFunction(MeshPtr mesh, std::vector<double> values);

  const MeshPtr& mesh() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double max_abs() const;
  /// Lumped L² norm.
  double l2_norm() const;

 private:
  MeshPtr mesh_;
  std::vector<double> values_;
};

/// Interpolates f(position, node info) at interior nodes.
template <class F>
GridFunction interpolate(const MeshPtr& mesh, F&& f) {
  std::vector<double> v(mesh->size(), 0.0);
  for (std::size_t i = 0; i < mesh->size(); ++i)
    if (!mesh->is_boundary(i)) v[i] = f(mesh->position(i), mesh->node_info(i));
  return GridFunction(mesh, std::move(v));
}

/// d(x) at the nodes.
GridFunction distance_profile(const MeshPtr& mesh);

/// Weight W_N (or W, or W ≡ 1) sampled on a mesh, ready for quadrature.
class Weight {
 public:
  /// cap = nullopt: untruncated W.
  Weight(const Potential& pot, const MeshPtr& mesh, std::optional<TruncationLevel> cap);
  /// W ≡ 1, for sanity checks against the plain Laplacian.
  static Weight uniform(const MeshPtr& mesh);

  const MeshPtr& mesh() const { return mesh_; }
  bool truncated() const { return truncated_; }
  std::span<const double> omega() const { return omega_; }
  /// Points whose quadrature is not resolved (remainder intervals at a
  /// singular set that were not integrated in closed form).
  std::span<const std::uint8_t> unresolved() const { return unresolved_; }

 private:
  Weight() = default;
  void integrate_origin_remainder(const Potential& pot, std::span<const double> W,
                                  std::optional<TruncationLevel> cap);
  MeshPtr mesh_;
  std::vector<double> omega_;
  std::vector<std::uint8_t> unresolved_;
  bool truncated_ = true;
};

/// ∫ |∇u|^p (or ∫ (|∇u|² + δ²)^{p/2} − δ^p with a regularization δ > 0).
double dirichlet_energy(const GridFunction& u, double p, double delta = 0.0);

struct WeightedNorm {
  double value = 0.0;
  /// False if the innermost quadrature layers next to the singular set carry
  /// a non-negligible share of the integral (untruncated weights only).
  bool converged = true;
};

/// ∫ W_N |u|^p (or ∫ W |u|^p when N is absent).
WeightedNorm weighted_pnorm(const GridFunction& u, const Potential& pot,
                            std::optional<TruncationLevel> N, double p);
WeightedNorm weighted_pnorm(const GridFunction& u, const Weight& weight, double p);

/// Discrete Δ_p u: minus the gradient of E/p, divided by the lumped mass.
GridFunction p_laplacian_apply(const GridFunction& u, double p, double delta = 0.0);

double rayleigh_quotient(const GridFunction& u, const Potential& pot, TruncationLevel N, double p);
double rayleigh_quotient(const GridFunction& u, const Weight& weight, double p, double delta = 0.0);

struct EigenOptions {
  int max_iterations = 20000;
  double delta = 0.0;
  bool conjugate = true;  // Polak-Ribière acceleration of the preconditioned descent
};

struct EigenPair {
  double lambda = 0.0;
  GridFunction eigfun;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// First eigenpair of −Δ_p φ = λ W_N |φ|^{p−2} φ, normalized by ∫ W_N φ^p = 1.
/// Non-converged runs return the best iterate with converged = false.
EigenPair first_eigenpair(const Potential& pot, TruncationLevel N, double p, const MeshPtr& mesh,
                          double tol, const EigenOptions& options = {});
EigenPair first_eigenpair(const Weight& weight, double p, double tol,
                          const EigenOptions& options = {},
                          const GridFunction* initial = nullptr);

/// Residual of −Δ_p u − λ W |u|^{p−2}u in the dual norm of the discrete
/// Dirichlet seminorm.
double eigen_residual(const GridFunction& u, const Weight& weight, double p, double lambda,
                      double delta = 0.0);

}  // namespace hardy

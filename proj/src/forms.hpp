#pragma once

// Discrete energy functionals on a mesh, with first and second derivatives,
// and the sparse linear algebra the solvers share. Internal to the library.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <span>
#include <vector>

#include "hardy/geometry.hpp"

namespace hardy::detail {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Interior nodes are the unknowns; boundary nodes map to -1.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh);
  int dofs() const { return static_cast<int>(nodes_.size()); }
  int dof(std::size_t node) const { return dof_[node]; }
  std::size_t node(int dof) const { return nodes_[dof]; }

  Vec restrict(std::span<const double> full) const;
  void expand(const Vec& v, std::span<double> full) const;  // boundary entries set to 0

 private:
  std::vector<int> dof_;
  std::vector<std::size_t> nodes_;
};

/// E(u) = Σ_q w_q [(|∇u_q|² + δ²)^{p/2} − δ^p]; gradient and Hessian are those of E/p.
class EnergyForm {
 public:
  EnergyForm(MeshPtr mesh, double p, double delta = 0.0);

  double p() const { return p_; }
  double delta() const { return delta_; }
  const MeshPtr& mesh() const { return mesh_; }

  double value(std::span<const double> u) const;
  void gradient(std::span<const double> u, std::span<double> out) const;
  /// Adds scale·∇²(E/p) restricted to interior dofs. `floor` is added to
  /// |∇u|² inside the diffusivity (a regularization of the preconditioner).
  void add_hessian(std::span<const double> u, const DofMap& dofs, double scale, double floor,
                   Triplets& out) const;
  /// Hessian of the Dirichlet energy (p = 2), the Laplacian stiffness matrix.
  void add_laplacian(const DofMap& dofs, double scale, Triplets& out) const;

 private:
  void gradients(std::span<const double> u, std::vector<double>& g, std::vector<double>& s) const;

  MeshPtr mesh_;
  double p_;
  double delta_;
};

/// B(u) = Σ_q ω_q |u(x_q)|^p with fixed weights ω_q = w_q·W_N(x_q).
/// Gradient and Hessian are those of B/p.
class WeightForm {
 public:
  WeightForm(MeshPtr mesh, std::vector<double> omega, double p);

  /// ω_q = w_q·min(N, W_q); a null cap keeps W untruncated.
  static WeightForm truncated(MeshPtr mesh, std::span<const double> W, const double* cap, double p);
  /// ω_q = w_q (W ≡ 1).
  static WeightForm uniform(MeshPtr mesh, double p);

  double p() const { return p_; }
  std::span<const double> omega() const { return omega_; }

  double value(std::span<const double> u) const;
  /// Σ over the points flagged in `mask` only.
  double masked_value(std::span<const double> u, std::span<const std::uint8_t> mask) const;
  void gradient(std::span<const double> u, std::span<double> out) const;
  void add_hessian(std::span<const double> u, const DofMap& dofs, double scale, Triplets& out) const;

 private:
  MeshPtr mesh_;
  std::vector<double> omega_;
  double p_;
};

SpMat assemble(int n, const Triplets& t);

/// Lumped mass restricted to dofs.
Vec interior_mass(const Mesh& mesh, const DofMap& dofs);

/// ‖r‖_* = sqrt(rᵀ K⁻¹ r) with K the Laplacian stiffness on interior dofs:
/// the H⁻¹ norm dual to the Dirichlet seminorm.
class DualNorm {
 public:
  DualNorm(const EnergyForm& energy, const DofMap& dofs);
  double operator()(std::span<const double> full_residual) const;
  /// K⁻¹ r for a dof vector.
  Vec solve(const Vec& r) const;

 private:
  const DofMap* dofs_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> solver_;
};

}  // namespace hardy::detail

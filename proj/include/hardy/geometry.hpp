#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "hardy/kernels.hpp"

namespace hardy {

struct Ball {
  int dim = 2;
  double radius = 1.0;
};

/// Ω = {|x| < φ(θ)} in the plane. φ is given at K equispaced angles
/// θ_k = 2πk/K and interpolated linearly in θ.
struct StarShaped2D {
  std::vector<double> phi;
};

class Domain {
 public:
  static Domain ball(int dim, double radius);
  static Domain star_shaped(std::vector<double> phi, bool convexity_assumed = false);

  bool is_ball() const { return std::holds_alternative<Ball>(kind_); }
  const Ball& ball() const { return std::get<Ball>(kind_); }
  const StarShaped2D& star() const { return std::get<StarShaped2D>(kind_); }

  int dim() const { return is_ball() ? ball().dim : 2; }
  bool convexity_assumed() const { return convexity_assumed_; }

  /// Boundary radius along direction θ (the ball radius for balls).
  double boundary_radius(double theta) const;
  /// dφ/dθ of the interpolant (0 for balls), taken from the piece containing θ.
  double boundary_slope(double theta) const;

  /// |Ω|.
  double volume() const;

  /// True if x lies in the closure of Ω (up to a relative tolerance).
  bool contains(std::span<const double> x, double rel_tol = 1e-12) const;

  /// Convexity of the polygon through the boundary samples (always true for balls).
  bool polygon_convex() const;

 private:
  std::variant<Ball, StarShaped2D> kind_;
  bool convexity_assumed_ = false;
};

/// dist(x, ∂Ω); throws Error(Domain) for x outside the closure of Ω.
double distance_to_boundary(const Domain& domain, std::span<const double> x);

struct DomainExtremes {
  double inradius;      // sup_{x∈Ω} d(x)
  double outer_radius;  // sup_{x∈Ω} |x|
};

DomainExtremes domain_extremes(const Domain& domain);

/// Surface measure of the unit sphere S^{n-1}.
double unit_sphere_area(int n);

// ---------------------------------------------------------------------------
// Meshes

enum class GradeToward { Boundary, Origin, Both };

/// Geometric description of a node or quadrature point. For radial meshes
/// `radius` is r and `theta` is 0. `rho` is the fraction of the way to the
/// boundary along the ray, and `one_minus_rho` is carried separately so that
/// distances to the boundary keep full relative precision.
struct PointInfo {
  double radius = 0.0;
  double theta = 0.0;
  double rho = 0.0;
  double one_minus_rho = 1.0;
  double dist = -1.0;  // < 0: not precomputed
};

/// Point-value quadrature: u(x_q) = Σ_a phi[a][q] u[index[a][q]].
struct SampleTable {
  int arity = 0;
  std::size_t points = 0;
  std::vector<std::int32_t> index;
  std::vector<double> phi;
  std::vector<double> weight;
  std::vector<PointInfo> where;
  std::vector<std::uint8_t> tail;  // 1: final remainder interval next to a singular end
  /// Points of the remainder interval at the origin: the outer radius of that
  /// interval (0 elsewhere) and a group id shared by the points of one ray
  /// (-1 elsewhere). Lets origin-singular weights integrate it in closed form.
  std::vector<double> remainder_radius;
  std::vector<std::int32_t> remainder_group;

  kernels::GatherView view() const { return {arity, points, index, phi}; }
};

/// Gradient quadrature: component c of ∇u(x_q) = Σ_a dphi[c][a][q] u[index[a][q]].
struct GradientTable {
  int arity = 0;
  int components = 0;
  std::size_t points = 0;
  std::vector<std::int32_t> index;
  std::vector<double> dphi;
  std::vector<double> weight;

  kernels::GatherView view(int component) const {
    const std::size_t block = static_cast<std::size_t>(arity) * points;
    return {arity, points, index,
            std::span<const double>(dphi).subspan(static_cast<std::size_t>(component) * block,
                                                  block)};
  }
};

class Mesh {
 public:
  enum class Kind { Radial, Polar };

  Kind kind() const { return kind_; }
  const Domain& domain() const { return domain_; }
  std::size_t size() const { return node_info_.size(); }
  int radial_nodes() const { return radial_nodes_; }
  int angular_nodes() const { return angular_nodes_; }
  double grading() const { return grading_; }
  GradeToward grade_toward() const { return toward_; }

  /// Cartesian position of node i (radial meshes: (r, 0)).
  std::array<double, 2> position(std::size_t i) const { return positions_[i]; }
  const PointInfo& node_info(std::size_t i) const { return node_info_[i]; }
  bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }
  std::span<const std::uint8_t> boundary_mask() const { return boundary_; }

  /// ∫ ψ_i dx for the nodal basis function ψ_i (mass lumping).
  std::span<const double> lumped_mass() const { return lumped_mass_; }
  /// Measure of every cell (radial: shells, polar: curvilinear quads).
  std::span<const double> cell_measure() const { return cell_measure_; }

  const GradientTable& stiffness() const { return stiffness_; }
  const SampleTable& sampling() const { return sampling_; }

  /// Radial mesh coordinate r_i (radial meshes only).
  double radius(std::size_t i) const { return node_info_[i].radius; }

  friend std::shared_ptr<const Mesh> build_mesh(const Domain&, int, double, GradeToward, int);

 private:
  Kind kind_ = Kind::Radial;
  Domain domain_;
  int radial_nodes_ = 0;
  int angular_nodes_ = 1;
  double grading_ = 1.0;
  GradeToward toward_ = GradeToward::Boundary;
  std::vector<std::array<double, 2>> positions_;
  std::vector<PointInfo> node_info_;
  std::vector<std::uint8_t> boundary_;
  std::vector<double> lumped_mass_;
  std::vector<double> cell_measure_;
  GradientTable stiffness_;
  SampleTable sampling_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Graded mesh. Balls get a radial (1-D) mesh with `resolution` nodes on
/// [0, R]; star-shaped domains get a polar mesh with `resolution` radial
/// layers (center included) and `angular` rays, rounded up to a multiple of
/// the number of φ samples.
MeshPtr build_mesh(const Domain& domain, int resolution, double grading,
                   GradeToward toward = GradeToward::Boundary, int angular = 64);

/// Node fractions ρ_i ∈ [0, 1] and 1 − ρ_i of the grading map.
struct GradedFractions {
  std::vector<double> rho;
  std::vector<double> one_minus_rho;
};
GradedFractions graded_fractions(int nodes, double grading, GradeToward toward);

}  // namespace hardy

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hardy/potentials.hpp"
#include "hardy/variational.hpp"

namespace hardy {

struct EvolutionConfig {
  double mu = 0.0;
  double p = 2.0;
  Potential pot;
  TruncationLevel N{1.0};
  GridFunction u0;
  double t_end = 1.0;
  double dt0 = 1e-3;
  /// BlowUp once ‖u‖_∞ exceeds blow_threshold·‖u0‖_∞.
  double blow_threshold = 1e6;
  double dt_min = 1e-12;
  double delta = 0.0;  // p-Laplacian regularization, required for 1 < p < 2
  /// Optional: use W ≡ 1 instead of the potential (linear sanity checks).
  bool uniform_weight = false;
  /// Inner proximal solve: stop at this relative gradient norm.
  double prox_tol = 1e-8;
  int prox_max_iterations = 60;
};

enum class Termination { Completed, BlowUp, StepUnderflow };
std::string_view termination_name(Termination t);

struct TraceRow {
  double t;
  double l2;
  double linf;
  double energy;    // ∫ |∇u|^p
  double weighted;  // ∫ W_N |u|^p
};

struct SimulationTrace {
  std::vector<TraceRow> rows;
  Termination status = Termination::Completed;
  double t_final = 0.0;  // t_star for BlowUp, the failing time for StepUnderflow
  int accepted_steps = 0;
  int rejected_steps = 0;
  /// Right-endpoint path integrals ∫₀^T ∫|∇u|^p and ∫₀^T ∫W_N|u|^p.
  double energy_integral = 0.0;
  double weighted_integral = 0.0;
};

/// Prepared operators for one configuration; reused across steps.
class Stepper {
 public:
  explicit Stepper(const EvolutionConfig& cfg);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  /// One IMEX step: explicit reaction, then the proximal diffusion step.
  /// Returns nullopt if the inner solve does not converge.
  std::optional<GridFunction> step(const GridFunction& u, double dt) const;

  const Weight& weight() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::optional<GridFunction> step(const GridFunction& u, const EvolutionConfig& cfg, double dt);

/// Called after every accepted step with (t, u).
using StepObserver = std::function<void(double, const GridFunction&)>;

SimulationTrace solve_pheat(const EvolutionConfig& cfg, const StepObserver& observer = {});

struct EnergyEstimateReport {
  double lhs = 0.0;  // ‖u(T)‖² + (1 − μ/C) ∫∫|∇u|^p
  double rhs = 0.0;  // ‖u0‖²
  double slack = 0.0;  // rhs·(1 + tol) − lhs
  bool holds = false;
};

/// Checks ‖u(T)‖² + (1 − μ/C)∫₀^T∫|∇u|^p ≤ ‖u0‖²·(1 + tol). Refuses μ ≥ C.
EnergyEstimateReport energy_estimate_check(double u0_l2, double uT_l2, double energy_integral,
                                           double mu, double C, double tol = 0.05);
EnergyEstimateReport energy_estimate_check(const EvolutionConfig& cfg, const SimulationTrace& trace,
                                           double C, double tol = 0.05);

/// T(t) = T0 [1 − (p−2) T0^{p−2} t]^{−1/(p−2)}, the solution of T' = T^{p−1}.
double T_closed_form(double T0, double p, double t);
double blow_up_time(double T0, double p);

struct SteadyOptions {
  double tol = 1e-8;
  int max_iterations = 2000;
  double eigen_tol = 1e-9;
};

struct SteadyProfile {
  GridFunction X;
  double residual = 0.0;  // dual-norm residual of −Δ_p X − μ W_N X^{p−1} + X
  double lambda = 0.0;    // λ_{1N} used for the precondition check
  int iterations = 0;
};

/// Positive solution X of −Δ_p X − μ W_N X^{p−1} = −X, for p > 2 and μ > λ_{1N}.
/// Throws Error(Precondition) for μ ≤ λ_{1N}, Error(Convergence) on failure.
SteadyProfile steady_profile_solve(const Potential& pot, TruncationLevel N, double p, double mu,
                                   const MeshPtr& mesh, const SteadyOptions& options = {});

/// Dual-norm residual of −Δ_p X − a W X^{p−1} + b X.
double steady_residual(const GridFunction& X, const Weight& weight, double p, double a, double b);

struct Subsolution {
  GridFunction X;
  double T0 = 0.0;  // ε
  double p = 0.0;
  double t_max = 0.0;
  double granularity = 0.0;  // ratio between consecutive ε candidates
};

/// Largest ε ≤ eps on the grid eps·0.99^k with ε X ≤ u0 nodewise.
Subsolution build_subsolution(const GridFunction& X, double eps, double p, const GridFunction& u0);

/// v(x, t) = X(x) T(t) at the nodes.
GridFunction subsolution_at(const Subsolution& v, double t);

struct ComparisonReport {
  bool holds = true;
  double worst_violation = 0.0;  // max over checked (node, t) of v − u (≤ tol when holding)
  double worst_time = 0.0;
  std::size_t worst_node = 0;
  std::size_t checked_times = 0;
};

/// Checks u(x, t) ≥ v(x, t) − tol(t) nodewise at every given time in [0, t_limit],
/// tol(t) = base_tol + residual_scale·T(t)^{p−1}·t.
ComparisonReport comparison_check(const std::vector<GridFunction>& u_trace,
                                  const std::vector<double>& times, const Subsolution& v,
                                  double t_limit, double base_tol, double residual_scale = 0.0);

}  // namespace hardy

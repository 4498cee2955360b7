#include "hardy/evolution.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "forms.hpp"
#include "hardy/errors.hpp"

namespace hardy {

using detail::DofMap;
using detail::DualNorm;
using detail::EnergyForm;
using detail::Vec;
using detail::WeightForm;

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Completed:
      return "completed";
    case Termination::BlowUp:
      return "blow-up";
    case Termination::StepUnderflow:
      return "step-underflow";
  }
  return "?";
}

namespace {

WeightForm weight_form(const Weight& w, double p) {
  return WeightForm(w.mesh(), std::vector<double>(w.omega().begin(), w.omega().end()), p);
}

Weight make_weight(const EvolutionConfig& cfg, const MeshPtr& mesh) {
  if (cfg.uniform_weight) return Weight::uniform(mesh);
  return Weight(cfg.pot, mesh, cfg.N);
}

double mass_norm(const Vec& v, const Vec& m) { return std::sqrt((v.array().square() * m.array()).sum()); }
double inv_mass_norm(const Vec& v, const Vec& m) { return std::sqrt((v.array().square() / m.array()).sum()); }

}  // namespace

// ---------------------------------------------------------------------------

constexpr int kProxStall = 5;
constexpr double kProxFloor = 1e-6;

struct Stepper::Impl {
  EvolutionConfig cfg;
  MeshPtr mesh;
  Weight weight;
  EnergyForm E;
  WeightForm B;
  DofMap dofs;
  Vec mass;

  explicit Impl(const EvolutionConfig& c)
      : cfg(c),
        mesh(c.u0.mesh()),
        weight(make_weight(c, c.u0.mesh())),
        E(c.u0.mesh(), c.p, c.delta),
        B(weight_form(weight, c.p)),
        dofs(*c.u0.mesh()),
        mass(detail::interior_mass(*c.u0.mesh(), dofs)) {}

  // Minimizes (1/(2dt))‖v − g‖²_M + E(v)/p by damped Newton.
  std::optional<Vec> prox(const Vec& g, double dt) const {
    const std::size_t n = mesh->size();
    const double scale = mass_norm(g, mass) / dt;
    if (scale == 0.0) return Vec::Zero(g.size());
    std::vector<double> full(n), grad_full(n);
    auto objective = [&](const Vec& v) {
      dofs.expand(v, full);
      const Vec diff = v - g;
      return 0.5 / dt * (diff.array().square() * mass.array()).sum() + E.value(full) / cfg.p;
    };
    auto gradient = [&](const Vec& v) {
      dofs.expand(v, full);
      E.gradient(full, grad_full);
      return Vec(mass.cwiseProduct(v - g) / dt + dofs.restrict(grad_full));
    };
    Vec v = g;
    double phi = objective(v);
    Vec grad = gradient(v);
    Eigen::SimplicialLDLT<detail::SpMat> solver;
    double best = HUGE_VAL;
    int stalled = 0;
    for (int it = 0; it < cfg.prox_max_iterations; ++it) {
      const double gnorm = inv_mass_norm(grad, mass);
      if (gnorm <= cfg.prox_tol * scale) return v;
      // Rounding floor of the gradient on strongly graded meshes can sit just
      // above prox_tol; accept a stalled iterate that is already close.
      if (gnorm < 0.5 * best) {
        best = gnorm;
        stalled = 0;
      } else if (++stalled >= kProxStall && gnorm <= kProxFloor * scale) {
        return v;
      }
      dofs.expand(v, full);
      detail::Triplets t;
      E.add_hessian(full, dofs, 1.0, 0.0, t);
      for (int k = 0; k < dofs.dofs(); ++k) t.emplace_back(k, k, mass[k] / dt);
      solver.compute(detail::assemble(dofs.dofs(), t));
      if (solver.info() != Eigen::Success) return std::nullopt;
      const Vec step = solver.solve(grad);
      const double slope = -grad.dot(step);
      if (!(slope < 0.0)) return std::nullopt;
      double alpha = 1.0;
      bool accepted = false;
      for (int k = 0; k < 40; ++k) {
        const Vec trial = v - alpha * step;
        const double val = objective(trial);
        if (std::isfinite(val) && val <= phi + 1e-4 * alpha * slope) {
          v = trial;
          phi = val;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // Decrease below rounding of the objective: take the full step if it
        // still shrinks the gradient.
        const Vec trial = v - step;
        const Vec tg = gradient(trial);
        if (!(inv_mass_norm(tg, mass) < gnorm)) return std::nullopt;
        v = trial;
        phi = objective(v);
        grad = tg;
        continue;
      }
      grad = gradient(v);
    }
    return std::nullopt;
  }

  std::optional<GridFunction> step(const GridFunction& u, double dt) const {
    if (!(dt > 0.0)) throw Error(ErrorKind::Parameter, "time step must be positive");
    if (u.mesh() != mesh) throw Error(ErrorKind::Precondition, "field lives on a different mesh");
    Vec g = dofs.restrict(u.values());
    if (cfg.mu != 0.0) {
      std::vector<double> F(mesh->size());
      B.gradient(u.values(), F);
      g += dt * cfg.mu * dofs.restrict(F).cwiseQuotient(mass);
    }
    if (!g.allFinite()) return std::nullopt;
    auto v = prox(g, dt);
    if (!v) return std::nullopt;
    std::vector<double> full(mesh->size());
    dofs.expand(*v, full);
    return GridFunction(mesh, std::move(full));
  }
};

Stepper::Stepper(const EvolutionConfig& cfg) {
  if (!cfg.u0.mesh()) throw Error(ErrorKind::Precondition, "initial datum has no mesh");
  if (!(cfg.p > 1.0)) throw Error(ErrorKind::Parameter, "p must be > 1");
  if (!cfg.uniform_weight && cfg.pot.p != cfg.p)
    throw Error(ErrorKind::Precondition, "exponent does not match the potential");
  impl_ = std::make_unique<Impl>(cfg);
}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

std::optional<GridFunction> Stepper::step(const GridFunction& u, double dt) const {
  return impl_->step(u, dt);
}

const Weight& Stepper::weight() const { return impl_->weight; }

std::optional<GridFunction> step(const GridFunction& u, const EvolutionConfig& cfg, double dt) {
  return Stepper(cfg).step(u, dt);
}

// ---------------------------------------------------------------------------

SimulationTrace solve_pheat(const EvolutionConfig& cfg, const StepObserver& observer) {
  if (!(cfg.t_end > 0.0) || !(cfg.dt0 > 0.0) || !(cfg.dt_min > 0.0) || !(cfg.blow_threshold > 0.0))
    throw Error(ErrorKind::Parameter, "t_end, dt0, dt_min and blow_threshold must be positive");
  const Stepper stepper(cfg);
  const Weight& weight = stepper.weight();
  const double p = cfg.p;

  auto row_of = [&](double t, const GridFunction& u) {
    return TraceRow{t, u.l2_norm(), u.max_abs(), dirichlet_energy(u, p, cfg.delta),
                    weighted_pnorm(u, weight, p).value};
  };

  SimulationTrace trace;
  GridFunction u = cfg.u0;
  const double u0_max = u.max_abs();
  const double limit = cfg.blow_threshold * u0_max;
  double t = 0.0;
  double dt = cfg.dt0;
  trace.rows.push_back(row_of(t, u));
  if (observer) observer(t, u);

  while (t < cfg.t_end) {
    if (dt < cfg.dt_min) {
      trace.status = Termination::StepUnderflow;
      trace.t_final = t;
      return trace;
    }
    double h = std::min(dt, cfg.t_end - t);
    if (cfg.t_end - (t + h) < 1e-6 * h) h = cfg.t_end - t;  // no sliver step at the end
    auto next = stepper.step(u, h);
    const double before = u.max_abs();
    double growth = 1.0;
    if (next && before > 0.0) growth = next->max_abs() / before;
    if (!next || growth > 1.1) {
      dt *= 0.5;
      ++trace.rejected_steps;
      continue;
    }
    const double t_next = (h == cfg.t_end - t) ? cfg.t_end : t + h;
    TraceRow row = row_of(t_next, *next);
    // right endpoint: the proximal step dissipates dt·E(u_{n+1})
    trace.energy_integral += (t_next - t) * row.energy;
    trace.weighted_integral += (t_next - t) * row.weighted;
    trace.rows.push_back(row);
    ++trace.accepted_steps;
    t = t_next;
    u = std::move(*next);
    if (observer) observer(t, u);
    if (u0_max > 0.0 && row.linf > limit) {
      trace.status = Termination::BlowUp;
      trace.t_final = t;
      return trace;
    }
    if (growth < 1.05) dt = std::min(2.0 * dt, cfg.dt0);
  }
  trace.status = Termination::Completed;
  trace.t_final = cfg.t_end;
  return trace;
}

// ---------------------------------------------------------------------------

EnergyEstimateReport energy_estimate_check(double u0_l2, double uT_l2, double energy_integral,
                                           double mu, double C, double tol) {
  if (!(C > 0.0)) throw Error(ErrorKind::Parameter, "Hardy constant must be positive");
  if (!(mu < C))
    throw Error(ErrorKind::Precondition, "energy estimate needs mu < C (the estimate is void otherwise)");
  EnergyEstimateReport r;
  r.lhs = uT_l2 * uT_l2 + (1.0 - mu / C) * energy_integral;
  r.rhs = u0_l2 * u0_l2;
  r.slack = r.rhs * (1.0 + tol) - r.lhs;
  r.holds = r.slack >= 0.0;
  return r;
}

EnergyEstimateReport energy_estimate_check(const EvolutionConfig& cfg, const SimulationTrace& trace,
                                           double C, double tol) {
  if (trace.rows.empty()) throw Error(ErrorKind::Precondition, "empty trace");
  return energy_estimate_check(trace.rows.front().l2, trace.rows.back().l2, trace.energy_integral,
                               cfg.mu, C, tol);
}

// ---------------------------------------------------------------------------

double blow_up_time(double T0, double p) {
  if (!(p > 2.0)) throw Error(ErrorKind::Parameter, "T' = T^{p-1} blows up only for p > 2");
  if (!(T0 > 0.0)) throw Error(ErrorKind::Parameter, "T0 must be positive");
  return std::pow(1.0 / T0, p - 2.0) / (p - 2.0);
}

double T_closed_form(double T0, double p, double t) {
  const double t_star = blow_up_time(T0, p);
  if (!(t >= 0.0)) throw Error(ErrorKind::Parameter, "time must be nonnegative");
  if (!(t < t_star)) throw Error(ErrorKind::Domain, "time at or beyond the blow-up time");
  return T0 * std::pow(1.0 - t / t_star, -1.0 / (p - 2.0));
}

// ---------------------------------------------------------------------------

double steady_residual(const GridFunction& X, const Weight& weight, double p, double a, double b) {
  if (X.mesh() != weight.mesh()) throw Error(ErrorKind::Precondition, "field and weight live on different meshes");
  const EnergyForm E(X.mesh(), p);
  const WeightForm B = weight_form(weight, p);
  const DofMap dofs(*X.mesh());
  const DualNorm dual(E, dofs);
  const std::size_t n = X.size();
  std::vector<double> gE(n), gB(n);
  E.gradient(X.values(), gE);
  B.gradient(X.values(), gB);
  const auto lm = X.mesh()->lumped_mass();
  for (std::size_t i = 0; i < n; ++i)
    gE[i] = X.mesh()->is_boundary(i) ? 0.0 : gE[i] - a * gB[i] + b * lm[i] * X[i];
  return dual(gE);
}

SteadyProfile steady_profile_solve(const Potential& pot, TruncationLevel N, double p, double mu,
                                   const MeshPtr& mesh, const SteadyOptions& opt) {
  if (!(p > 2.0)) throw Error(ErrorKind::Parameter, "steady profile needs p > 2");
  if (pot.p != p) throw Error(ErrorKind::Precondition, "exponent does not match the potential");
  const Weight weight(pot, mesh, N);
  const EigenPair eig = first_eigenpair(weight, p, opt.eigen_tol);
  if (!(mu > eig.lambda))
    throw Error(ErrorKind::Precondition, "steady profile needs mu > lambda_1N = " + std::to_string(eig.lambda));

  const EnergyForm E(mesh, p);
  const WeightForm B = weight_form(weight, p);
  const DofMap dofs(*mesh);
  const DualNorm dual(E, dofs);
  const Vec mass = detail::interior_mass(*mesh, dofs);
  const std::size_t n = mesh->size();
  std::vector<double> full(n), gE(n), gB(n);

  // Phase 1: minimize (E − μB) on the sphere ‖Z‖_M = 1 (preconditioned descent,
  // positivity by |Z|). At the minimizer ∇(E/p) − μ∇(B/p) = −σ M Z with
  // σ = μB − E > 0, so X = σ^{−1/(p−2)} Z solves the steady problem.
  Vec Z = dofs.restrict(eig.eigfun.values());
  Z /= mass_norm(Z, mass);
  auto J = [&](const Vec& z) {
    dofs.expand(z, full);
    return E.value(full) - mu * B.value(full);
  };
  auto sphere = [&](Vec z) {
    z = z.cwiseAbs();
    return Vec(z / mass_norm(z, mass));
  };
  constexpr double kPhase1Tol = 1e-4;  // relative; Newton takes over from there
  int it = 0;
  double jval = J(Z);
  Eigen::SimplicialLDLT<detail::SpMat> pre;
  for (; it < opt.max_iterations; ++it) {
    dofs.expand(Z, full);
    E.gradient(full, gE);
    B.gradient(full, gB);
    Vec g = dofs.restrict(gE) - mu * dofs.restrict(gB);
    const double nu = g.dot(Z);  // = E − μB by homogeneity
    const Vec r = g - nu * mass.cwiseProduct(Z);
    dofs.expand(r, full);
    if (dual(full) <= kPhase1Tol * std::fabs(nu)) break;
    detail::Triplets t;
    dofs.expand(Z, full);
    E.add_hessian(full, dofs, 1.0, 0.0, t);
    for (int k = 0; k < dofs.dofs(); ++k) t.emplace_back(k, k, std::fabs(nu) * mass[k]);
    pre.compute(detail::assemble(dofs.dofs(), t));
    if (pre.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "steady preconditioner failed");
    const Vec z = pre.solve(r);
    const double slope = -p * r.dot(z);
    double alpha = 1.0;
    bool accepted = false;
    Vec next;
    for (int k = 0; k < 50; ++k) {
      next = sphere(Z - alpha * z);
      const double jn = J(next);
      if (jn <= jval + 1e-4 * alpha * slope) {
        jval = jn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    Z = next;
  }
  dofs.expand(Z, full);
  const double sigma = -(E.value(full) - mu * B.value(full));
  if (!(sigma > 0.0)) throw Error(ErrorKind::Convergence, "steady profile search left the region E < mu B");
  Vec X = Z * std::pow(sigma, -1.0 / (p - 2.0));

  // Phase 2: Newton on G(X) = ∇(E/p) − μ∇(B/p) + M X.
  auto residual_vec = [&](const Vec& x) {
    dofs.expand(x, full);
    E.gradient(full, gE);
    B.gradient(full, gB);
    return Vec(dofs.restrict(gE) - mu * dofs.restrict(gB) + mass.cwiseProduct(x));
  };
  auto dual_of = [&](const Vec& r) {
    std::vector<double> f(n);
    dofs.expand(r, f);
    return dual(f);
  };
  Vec G = residual_vec(X);
  double res = dual_of(G);
  Eigen::SparseLU<detail::SpMat> lu;
  for (int k = 0; k < 100 && res > opt.tol; ++k, ++it) {
    detail::Triplets t;
    dofs.expand(X, full);
    E.add_hessian(full, dofs, 1.0, 0.0, t);
    B.add_hessian(full, dofs, -mu, t);
    for (int j = 0; j < dofs.dofs(); ++j) t.emplace_back(j, j, mass[j]);
    const auto Jm = detail::assemble(dofs.dofs(), t);
    lu.compute(Jm);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "steady Jacobian is singular");
    const Vec dx = lu.solve(G);
    double alpha = 1.0;
    bool accepted = false;
    for (int s = 0; s < 30; ++s) {
      const Vec trial = X - alpha * dx;
      const Vec Gt = residual_vec(trial);
      const double rt = dual_of(Gt);
      if (std::isfinite(rt) && rt < (1.0 - 1e-4 * alpha) * res) {
        X = trial;
        G = Gt;
        res = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(res <= opt.tol))
    throw Error(ErrorKind::Convergence, "steady profile residual " + std::to_string(res) + " above tolerance");
  if (!(X.minCoeff() > 0.0)) throw Error(ErrorKind::Convergence, "steady profile is not interior-positive");

  dofs.expand(X, full);
  SteadyProfile out{GridFunction(mesh, full), res, eig.lambda, it};
  return out;
}

// ---------------------------------------------------------------------------

Subsolution build_subsolution(const GridFunction& X, double eps, double p, const GridFunction& u0) {
  if (!(p > 2.0)) throw Error(ErrorKind::Parameter, "separable sub-solution needs p > 2");
  if (!(eps > 0.0)) throw Error(ErrorKind::Parameter, "eps must be positive");
  if (X.mesh() != u0.mesh()) throw Error(ErrorKind::Precondition, "X and u0 live on different meshes");
  const auto& mesh = *X.mesh();
  constexpr double kFactor = 0.99;
  double ratio = HUGE_VAL;  // largest admissible ε
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (mesh.is_boundary(i)) continue;
    if (!(X[i] > 0.0)) throw Error(ErrorKind::Precondition, "X must be interior-positive");
    ratio = std::min(ratio, u0[i] / X[i]);
  }
  if (!(ratio > 0.0)) throw Error(ErrorKind::Precondition, "no admissible eps: u0 vanishes where X > 0");
  double e = eps;
  int k = 0;
  while (e > ratio) {
    e = eps * std::pow(kFactor, ++k);
    if (k > 100000) throw Error(ErrorKind::Precondition, "no admissible eps above the grid floor");
  }
  Subsolution v{X, e, p, blow_up_time(e, p), kFactor};
  return v;
}

GridFunction subsolution_at(const Subsolution& v, double t) {
  const double T = T_closed_form(v.T0, v.p, t);
  std::vector<double> vals(v.X.values().begin(), v.X.values().end());
  for (double& x : vals) x *= T;
  return GridFunction(v.X.mesh(), std::move(vals));
}

ComparisonReport comparison_check(const std::vector<GridFunction>& u_trace,
                                  const std::vector<double>& times, const Subsolution& v,
                                  double t_limit, double base_tol, double residual_scale) {
  if (u_trace.size() != times.size()) throw Error(ErrorKind::Precondition, "trace and time counts differ");
  ComparisonReport rep;
  rep.worst_violation = -HUGE_VAL;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (t > t_limit || t >= v.t_max) continue;
    const GridFunction& u = u_trace[k];
    if (u.mesh() != v.X.mesh()) throw Error(ErrorKind::Precondition, "trace and sub-solution meshes differ");
    const double T = T_closed_form(v.T0, v.p, t);
    const double tol = base_tol + residual_scale * std::pow(T, v.p - 1.0) * t;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double gap = v.X[i] * T - u[i];
      if (gap > rep.worst_violation) {
        rep.worst_violation = gap;
        rep.worst_time = t;
        rep.worst_node = i;
      }
      if (gap > tol) rep.holds = false;
    }
    ++rep.checked_times;
  }
  if (rep.checked_times == 0) rep.worst_violation = 0.0;
  return rep;
}

}  // namespace hardy

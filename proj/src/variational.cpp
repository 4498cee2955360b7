#include "hardy/variational.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "forms.hpp"
#include "hardy/errors.hpp"

namespace hardy {

using detail::DofMap;
using detail::DualNorm;
using detail::EnergyForm;
using detail::Vec;
using detail::WeightForm;

namespace {

constexpr double kTailShare = 1e-6;
constexpr int kStallIterations = 200;
constexpr double kQuotientResolution = 1e-11;

void check_mesh(const GridFunction& u, const MeshPtr& mesh) {
  if (u.mesh() != mesh) throw Error(ErrorKind::Precondition, "field and weight live on different meshes");
}

WeightForm weight_form(const Weight& w, double p) {
  return WeightForm(w.mesh(), std::vector<double>(w.omega().begin(), w.omega().end()), p);
}

void normalize(std::vector<double>& u, const WeightForm& B) {
  const double b = B.value(u);
  if (!(b > 0.0) || !std::isfinite(b))
    throw Error(ErrorKind::Convergence, "iterate lost its weighted norm");
  const double s = std::pow(b, -1.0 / B.p());
  for (double& v : u) v *= s;
}

}  // namespace

// ---------------------------------------------------------------------------

GridFunction::GridFunction(MeshPtr mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw Error(ErrorKind::Precondition, "null mesh");
  values_.assign(mesh_->size(), 0.0);
}

GridFunction::GridFunction(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw Error(ErrorKind::Precondition, "null mesh");
  if (values_.size() != mesh_->size())
    throw Error(ErrorKind::Precondition, "value count does not match the mesh");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw Error(ErrorKind::Precondition, "grid function value is not finite");
    if (mesh_->is_boundary(i)) values_[i] = 0.0;
  }
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

double GridFunction::l2_norm() const {
  const auto lm = mesh_->lumped_mass();
  double acc = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) acc += lm[i] * values_[i] * values_[i];
  return std::sqrt(acc);
}

GridFunction distance_profile(const MeshPtr& mesh) {
  return interpolate(mesh, [&](const std::array<double, 2>& x, const PointInfo& info) {
    if (info.dist >= 0.0) return info.dist;
    return distance_to_boundary(mesh->domain(), x);
  });
}

// ---------------------------------------------------------------------------

Weight::Weight(const Potential& pot, const MeshPtr& mesh, std::optional<TruncationLevel> cap)
    : mesh_(mesh), truncated_(cap.has_value()) {
  if (pot.n != mesh->domain().dim())
    throw Error(ErrorKind::Precondition, "potential dimension does not match the mesh");
  const auto field = sample_potential(pot, *mesh);
  const double c = cap ? cap->value() : 0.0;
  const auto form = WeightForm::truncated(mesh, field.samples, cap ? &c : nullptr, pot.p);
  omega_.assign(form.omega().begin(), form.omega().end());
  const auto& s = mesh->sampling();
  unresolved_ = s.tail;
  if (pot.kind == KernelKind::OriginLog) integrate_origin_remainder(pot, field.samples, cap);
}

// (|x| log(R/|x|))^{-n} decays too slowly at the origin for any geometric
// subdivision; on the remainder ball of radius ε the exact integral is
// |S^{n-1}| / ((n-1) log^{n-1}(R/ε)). The Gauss weights of each ray are
// rescaled to reproduce it wherever the cap is inactive.
void Weight::integrate_origin_remainder(const Potential& pot, std::span<const double> W,
                                        std::optional<TruncationLevel> cap) {
  const auto& s = mesh_->sampling();
  const int n = pot.n;
  std::vector<double> wsum, osum, radius;
  std::vector<std::uint8_t> capped;
  for (std::size_t q = 0; q < s.points; ++q) {
    const int g = s.remainder_group[q];
    if (g < 0) continue;
    if (static_cast<std::size_t>(g) >= wsum.size()) {
      wsum.resize(g + 1, 0.0);
      osum.resize(g + 1, 0.0);
      radius.resize(g + 1, 0.0);
      capped.resize(g + 1, 0);
    }
    wsum[g] += s.weight[q];
    osum[g] += omega_[q];
    radius[g] = s.remainder_radius[q];
    if (cap && !(W[q] < cap->value())) capped[g] = 1;
  }
  std::vector<double> factor(wsum.size(), 1.0);
  for (std::size_t g = 0; g < wsum.size(); ++g) {
    if (capped[g] || !(osum[g] > 0.0) || !(radius[g] > 0.0)) continue;
    const double lg = std::log(pot.R / radius[g]);
    const double exact = wsum[g] * n * std::pow(radius[g], -n) / ((n - 1.0) * std::pow(lg, n - 1.0));
    factor[g] = exact / osum[g];
  }
  for (std::size_t q = 0; q < s.points; ++q) {
    const int g = s.remainder_group[q];
    if (g < 0 || capped[g]) continue;
    omega_[q] *= factor[g];
    unresolved_[q] = 0;
  }
}

Weight Weight::uniform(const MeshPtr& mesh) {
  Weight w;
  w.mesh_ = mesh;
  w.omega_ = mesh->sampling().weight;
  w.unresolved_.assign(w.omega_.size(), 0);
  w.truncated_ = true;
  return w;
}

double dirichlet_energy(const GridFunction& u, double p, double delta) {
  // The energy itself is well defined for 1 < p < 2 without regularization.
  if (!(p > 1.0)) throw Error(ErrorKind::Parameter, "p must be > 1");
  if (p < 2.0 && delta == 0.0) {
    const auto& t = u.mesh()->stiffness();
    std::vector<double> s(t.points, 0.0), g(t.points);
    for (int c = 0; c < t.components; ++c) {
      kernels::active().gather_combine(t.view(c), u.values(), g);
      for (std::size_t q = 0; q < t.points; ++q) s[q] += g[q] * g[q];
    }
    return kernels::active().weighted_pow_sum(t.weight, s, 0.5 * p, 0.0);
  }
  return EnergyForm(u.mesh(), p, delta).value(u.values());
}

WeightedNorm weighted_pnorm(const GridFunction& u, const Weight& weight, double p) {
  check_mesh(u, weight.mesh());
  const WeightForm B = weight_form(weight, p);
  WeightedNorm out;
  out.value = B.value(u.values());
  if (!weight.truncated()) {
    const double tail = B.masked_value(u.values(), weight.unresolved());
    out.converged = std::isfinite(out.value) && tail <= kTailShare * out.value;
  }
  return out;
}

WeightedNorm weighted_pnorm(const GridFunction& u, const Potential& pot,
                            std::optional<TruncationLevel> N, double p) {
  return weighted_pnorm(u, Weight(pot, u.mesh(), N), p);
}

GridFunction p_laplacian_apply(const GridFunction& u, double p, double delta) {
  if (p < 2.0 && delta == 0.0)
    throw Error(ErrorKind::Parameter, "1 < p < 2 needs a regularization delta > 0");
  const EnergyForm E(u.mesh(), p, delta);
  std::vector<double> g(u.size());
  E.gradient(u.values(), g);
  const auto lm = u.mesh()->lumped_mass();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i] / lm[i];
  return GridFunction(u.mesh(), std::move(g));
}

double rayleigh_quotient(const GridFunction& u, const Weight& weight, double p, double delta) {
  const double b = weighted_pnorm(u, weight, p).value;
  if (!(b > 0.0)) throw Error(ErrorKind::Precondition, "Rayleigh quotient of a field with zero weighted norm");
  return dirichlet_energy(u, p, delta) / b;
}

double rayleigh_quotient(const GridFunction& u, const Potential& pot, TruncationLevel N, double p) {
  return rayleigh_quotient(u, Weight(pot, u.mesh(), N), p);
}

double eigen_residual(const GridFunction& u, const Weight& weight, double p, double lambda,
                      double delta) {
  check_mesh(u, weight.mesh());
  const EnergyForm E(u.mesh(), p, delta);
  const WeightForm B = weight_form(weight, p);
  const DofMap dofs(*u.mesh());
  const DualNorm dual(E, dofs);
  std::vector<double> gE(u.size()), gB(u.size());
  E.gradient(u.values(), gE);
  B.gradient(u.values(), gB);
  for (std::size_t i = 0; i < gE.size(); ++i) gE[i] -= lambda * gB[i];
  return dual(gE);
}

// ---------------------------------------------------------------------------

EigenPair first_eigenpair(const Weight& weight, double p, double tol, const EigenOptions& opt,
                          const GridFunction* initial) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Parameter, "eigen tolerance must be positive");
  if (!weight.truncated()) throw Error(ErrorKind::Precondition, "eigen solve needs a bounded (truncated) weight");
  const MeshPtr& mesh = weight.mesh();
  const EnergyForm E(mesh, p, opt.delta);
  const WeightForm B = weight_form(weight, p);
  const DofMap dofs(*mesh);
  const DualNorm dual(E, dofs);
  const std::size_t n = mesh->size();
  const double volume = mesh->domain().volume();

  std::vector<double> u;
  if (initial != nullptr) {
    check_mesh(*initial, mesh);
    u.assign(initial->values().begin(), initial->values().end());
    for (double& v : u) v = std::fabs(v);
  } else {
    const auto d = distance_profile(mesh);
    u.assign(d.values().begin(), d.values().end());
  }
  normalize(u, B);

  auto quotient = [&](const std::vector<double>& v) { return E.value(v) / B.value(v); };

  std::vector<double> gE(n), gB(n), r(n), trial(n);
  Vec d_prev, z_prev, r_prev;
  double Q = quotient(u);
  double res = HUGE_VAL;
  double best_res = HUGE_VAL;
  int best_it = 0;
  int it = 0;
  Eigen::SimplicialLDLT<detail::SpMat> pre;
  auto residual = [&](const std::vector<double>& v, std::vector<double>& out) {
    E.gradient(v, gE);
    B.gradient(v, gB);
    const double b = B.value(v);
    const double q = E.value(v) / b;
    for (std::size_t i = 0; i < n; ++i) out[i] = (gE[i] - q * gB[i]) / b;
    return std::pair{q, dual(out)};
  };
  std::vector<double> r_trial(n);
  for (; it < opt.max_iterations; ++it) {
    std::tie(Q, res) = residual(u, r);
    if (res <= tol) break;
    if (res < 0.5 * best_res) {
      best_res = res;
      best_it = it;
    } else if (it - best_it > kStallIterations) {
      break;  // rounding floor reached above tol
    }

    const Vec rd = dofs.restrict(r);
    Vec z;
    if (p == 2.0 && opt.delta == 0.0) {
      z = dual.solve(rd);
    } else {
      detail::Triplets t;
      const double floor = 1e-8 * std::pow(Q / volume, 2.0 / p);
      E.add_hessian(u, dofs, 1.0, floor, t);
      pre.compute(detail::assemble(dofs.dofs(), t));
      z = pre.info() == Eigen::Success ? Vec(pre.solve(rd)) : dual.solve(rd);
    }

    Vec d = -z;
    if (opt.conjugate && d_prev.size() == d.size()) {
      const double beta = std::max(0.0, (rd.dot(z) - r_prev.dot(z)) / r_prev.dot(z_prev));
      d += beta * d_prev;
      if (rd.dot(d) >= 0.0) d = -z;
    }

    // Armijo backtracking on the quotient along |u + α d|, expanding when α = 1 is accepted.
    const double slope = p * rd.dot(d);
    auto try_step = [&](double alpha) {
      std::fill(trial.begin(), trial.end(), 0.0);
      for (int k = 0; k < dofs.dofs(); ++k) {
        const std::size_t i = dofs.node(k);
        trial[i] = std::fabs(u[i] + alpha * d[k]);
      }
      return quotient(trial);
    };
    // Near convergence the quotient decrease drops below its rounding level;
    // there the step length is chosen by the residual instead.
    if (-slope <= kQuotientResolution * Q) {
      double best = res, best_alpha = 0.0;
      for (double a : {0.5, 1.0, 2.0}) {
        try_step(a);
        normalize(trial, B);
        const double ra = residual(trial, r_trial).second;
        if (ra < best) {
          best = ra;
          best_alpha = a;
        }
      }
      if (best_alpha == 0.0) {
        if (d_prev.size() != 0) {  // retry once from steepest descent
          d_prev.resize(0);
          continue;
        }
        break;  // rounding floor
      }
      try_step(best_alpha);
      u.swap(trial);
      normalize(u, B);
      d_prev = d;
      z_prev = z;
      r_prev = rd;
      continue;
    }

    double alpha = 1.0;
    double q_new = try_step(alpha);
    bool accepted = std::isfinite(q_new) && q_new <= Q + 1e-4 * alpha * slope;
    if (accepted) {
      for (int grow = 0; grow < 8; ++grow) {
        const double q2 = try_step(2.0 * alpha);
        if (!(q2 < q_new)) break;
        alpha *= 2.0;
        q_new = q2;
      }
    } else {
      while (!accepted && alpha > 1e-14) {
        alpha *= 0.5;
        q_new = try_step(alpha);
        accepted = std::isfinite(q_new) && q_new <= Q + 1e-4 * alpha * slope;
      }
    }
    if (!accepted) {
      if (d_prev.size() != 0) {  // drop the conjugate memory and retry once from steepest descent
        d_prev.resize(0);
        continue;
      }
      break;  // stagnated at rounding level
    }
    try_step(alpha);
    u.swap(trial);
    normalize(u, B);
    d_prev = d;
    z_prev = z;
    r_prev = rd;
  }

  EigenPair out{0.0, GridFunction(mesh, u), res, it, res <= tol};
  out.lambda = E.value(u) / B.value(u);
  for (std::size_t i = 0; i < n; ++i)
    if (!mesh->is_boundary(i) && !(u[i] > 0.0))
      throw Error(ErrorKind::Convergence, "eigenfunction iterate is not interior-positive");
  return out;
}

EigenPair first_eigenpair(const Potential& pot, TruncationLevel N, double p, const MeshPtr& mesh,
                          double tol, const EigenOptions& options) {
  if (p != pot.p) throw Error(ErrorKind::Precondition, "exponent does not match the potential");
  return first_eigenpair(Weight(pot, mesh, N), p, tol, options);
}

}  // namespace hardy

#include "forms.hpp"

#include <cmath>

#include "hardy/errors.hpp"
#include "hardy/kernels.hpp"

namespace hardy::detail {

DofMap::DofMap(const Mesh& mesh) : dof_(mesh.size(), -1) {
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (mesh.is_boundary(i)) continue;
    dof_[i] = static_cast<int>(nodes_.size());
    nodes_.push_back(i);
  }
}

Vec DofMap::restrict(std::span<const double> full) const {
  Vec v(dofs());
  for (int k = 0; k < dofs(); ++k) v[k] = full[nodes_[k]];
  return v;
}

void DofMap::expand(const Vec& v, std::span<double> full) const {
  std::fill(full.begin(), full.end(), 0.0);
  for (int k = 0; k < dofs(); ++k) full[nodes_[k]] = v[k];
}

namespace {

void zero_boundary(const Mesh& mesh, std::span<double> out) {
  for (std::size_t i = 0; i < mesh.size(); ++i)
    if (mesh.is_boundary(i)) out[i] = 0.0;
}

// Adds, for each point q, coef[q]·(Σ_c D_ca D_cb) + coef2[q]·(g·D_a)(g·D_b).
void stiffness_triplets(const GradientTable& t, const DofMap& dofs, std::span<const double> coef,
                        std::span<const double> coef2, const std::vector<double>* g, double scale,
                        Triplets& out) {
  const int A = t.arity, C = t.components;
  const std::size_t Q = t.points;
  auto D = [&](int c, int a, std::size_t q) {
    return t.dphi[(static_cast<std::size_t>(c) * A + a) * Q + q];
  };
  out.reserve(out.size() + Q * A * A);
  for (std::size_t q = 0; q < Q; ++q) {
    double gd[8] = {0};
    if (g != nullptr && !coef2.empty() && coef2[q] != 0.0) {
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < C; ++c) gd[a] += (*g)[static_cast<std::size_t>(c) * Q + q] * D(c, a, q);
    }
    for (int a = 0; a < A; ++a) {
      const int ra = dofs.dof(t.index[static_cast<std::size_t>(a) * Q + q]);
      if (ra < 0) continue;
      for (int b = 0; b < A; ++b) {
        const int rb = dofs.dof(t.index[static_cast<std::size_t>(b) * Q + q]);
        if (rb < 0) continue;
        double v = 0.0;
        for (int c = 0; c < C; ++c) v += D(c, a, q) * D(c, b, q);
        v *= coef[q];
        if (!coef2.empty()) v += coef2[q] * gd[a] * gd[b];
        if (v != 0.0) out.emplace_back(ra, rb, scale * v);
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

EnergyForm::EnergyForm(MeshPtr mesh, double p, double delta)
    : mesh_(std::move(mesh)), p_(p), delta_(delta) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::Parameter, "p must be a finite real > 1");
  if (!(delta >= 0.0)) throw Error(ErrorKind::Parameter, "regularization delta must be >= 0");
  if (p < 2.0 && delta == 0.0)
    throw Error(ErrorKind::Parameter, "1 < p < 2 needs a regularization delta > 0");
}

void EnergyForm::gradients(std::span<const double> u, std::vector<double>& g,
                           std::vector<double>& s) const {
  const auto& t = mesh_->stiffness();
  const auto& kt = kernels::active();
  const std::size_t Q = t.points;
  g.assign(Q * t.components, 0.0);
  s.assign(Q, 0.0);
  for (int c = 0; c < t.components; ++c) {
    std::span<double> gc(g.data() + static_cast<std::size_t>(c) * Q, Q);
    kt.gather_combine(t.view(c), u, gc);
    for (std::size_t q = 0; q < Q; ++q) s[q] += gc[q] * gc[q];
  }
}

double EnergyForm::value(std::span<const double> u) const {
  if (u.size() != mesh_->size()) throw Error(ErrorKind::Precondition, "field does not match the mesh");
  std::vector<double> g, s;
  gradients(u, g, s);
  const auto& t = mesh_->stiffness();
  const double d2 = delta_ * delta_;
  double v = kernels::active().weighted_pow_sum(t.weight, s, 0.5 * p_, d2);
  if (delta_ > 0.0) {
    double wsum = 0.0;
    for (double w : t.weight) wsum += w;
    v -= std::pow(delta_, p_) * wsum;
  }
  return std::max(v, 0.0);
}

void EnergyForm::gradient(std::span<const double> u, std::span<double> out) const {
  if (u.size() != mesh_->size() || out.size() != mesh_->size())
    throw Error(ErrorKind::Precondition, "field does not match the mesh");
  std::vector<double> g, s;
  gradients(u, g, s);
  const auto& t = mesh_->stiffness();
  const std::size_t Q = t.points;
  std::vector<double> coef(Q);
  kernels::active().weighted_pow(t.weight, s, 0.5 * (p_ - 2.0), delta_ * delta_, coef);
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < t.arity; ++a) {
    const std::size_t base = static_cast<std::size_t>(a) * Q;
    for (std::size_t q = 0; q < Q; ++q) {
      double flux = 0.0;
      for (int c = 0; c < t.components; ++c)
        flux += g[static_cast<std::size_t>(c) * Q + q] *
                t.dphi[(static_cast<std::size_t>(c) * t.arity + a) * Q + q];
      out[t.index[base + q]] += coef[q] * flux;
    }
  }
  zero_boundary(*mesh_, out);
}

void EnergyForm::add_hessian(std::span<const double> u, const DofMap& dofs, double scale,
                             double floor, Triplets& out) const {
  std::vector<double> g, s;
  gradients(u, g, s);
  const auto& t = mesh_->stiffness();
  const std::size_t Q = t.points;
  const double shift = delta_ * delta_ + floor;
  std::vector<double> coef(Q), coef2;
  kernels::scalar_table().weighted_pow(t.weight, s, 0.5 * (p_ - 2.0), shift, coef);
  if (p_ != 2.0) {
    coef2.resize(Q);
    kernels::scalar_table().weighted_pow(t.weight, s, 0.5 * (p_ - 4.0), shift, coef2);
    for (std::size_t q = 0; q < Q; ++q) {
      coef2[q] *= (p_ - 2.0);
      if (!std::isfinite(coef2[q])) coef2[q] = 0.0;  // s = 0 with p < 4: the term vanishes
    }
  }
  stiffness_triplets(t, dofs, coef, coef2, &g, scale, out);
}

void EnergyForm::add_laplacian(const DofMap& dofs, double scale, Triplets& out) const {
  const auto& t = mesh_->stiffness();
  stiffness_triplets(t, dofs, t.weight, {}, nullptr, scale, out);
}

// ---------------------------------------------------------------------------

WeightForm::WeightForm(MeshPtr mesh, std::vector<double> omega, double p)
    : mesh_(std::move(mesh)), omega_(std::move(omega)), p_(p) {
  if (omega_.size() != mesh_->sampling().points)
    throw Error(ErrorKind::Precondition, "weight table does not match the mesh");
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::Parameter, "p must be a finite real > 1");
}

WeightForm WeightForm::truncated(MeshPtr mesh, std::span<const double> W, const double* cap,
                                 double p) {
  const auto& s = mesh->sampling();
  if (W.size() != s.points) throw Error(ErrorKind::Precondition, "potential samples do not match the mesh");
  std::vector<double> omega(s.points);
  if (cap != nullptr) {
    kernels::active().cap_min(W, *cap, omega);
  } else {
    omega.assign(W.begin(), W.end());
  }
  for (std::size_t q = 0; q < s.points; ++q) omega[q] *= s.weight[q];
  return WeightForm(std::move(mesh), std::move(omega), p);
}

WeightForm WeightForm::uniform(MeshPtr mesh, double p) {
  std::vector<double> omega = mesh->sampling().weight;
  return WeightForm(std::move(mesh), std::move(omega), p);
}

double WeightForm::value(std::span<const double> u) const {
  if (u.size() != mesh_->size()) throw Error(ErrorKind::Precondition, "field does not match the mesh");
  const auto& t = mesh_->sampling();
  const auto& kt = kernels::active();
  std::vector<double> uq(t.points);
  kt.gather_combine(t.view(), u, uq);
  for (double& v : uq) v *= v;
  return kt.weighted_pow_sum(omega_, uq, 0.5 * p_, 0.0);
}

double WeightForm::masked_value(std::span<const double> u, std::span<const std::uint8_t> mask) const {
  const auto& t = mesh_->sampling();
  std::vector<double> uq(t.points);
  kernels::active().gather_combine(t.view(), u, uq);
  double acc = 0.0;
  for (std::size_t q = 0; q < t.points; ++q)
    if (mask[q] && uq[q] != 0.0) acc += omega_[q] * std::pow(std::fabs(uq[q]), p_);
  return acc;
}

void WeightForm::gradient(std::span<const double> u, std::span<double> out) const {
  if (u.size() != mesh_->size() || out.size() != mesh_->size())
    throw Error(ErrorKind::Precondition, "field does not match the mesh");
  const auto& t = mesh_->sampling();
  const auto& kt = kernels::active();
  const std::size_t Q = t.points;
  std::vector<double> uq(Q), s(Q), coef(Q);
  kt.gather_combine(t.view(), u, uq);
  for (std::size_t q = 0; q < Q; ++q) s[q] = uq[q] * uq[q];
  kt.weighted_pow(omega_, s, 0.5 * (p_ - 2.0), 0.0, coef);
  for (std::size_t q = 0; q < Q; ++q) coef[q] = uq[q] == 0.0 ? 0.0 : coef[q] * uq[q];
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < t.arity; ++a) {
    const std::size_t base = static_cast<std::size_t>(a) * Q;
    for (std::size_t q = 0; q < Q; ++q) out[t.index[base + q]] += coef[q] * t.phi[base + q];
  }
  zero_boundary(*mesh_, out);
}

void WeightForm::add_hessian(std::span<const double> u, const DofMap& dofs, double scale,
                             Triplets& out) const {
  const auto& t = mesh_->sampling();
  const std::size_t Q = t.points;
  const int A = t.arity;
  std::vector<double> uq(Q), s(Q), coef(Q);
  kernels::scalar_table().gather_combine(t.view(), u, uq);
  for (std::size_t q = 0; q < Q; ++q) s[q] = uq[q] * uq[q];
  kernels::scalar_table().weighted_pow(omega_, s, 0.5 * (p_ - 2.0), 0.0, coef);
  out.reserve(out.size() + Q * A * A);
  for (std::size_t q = 0; q < Q; ++q) {
    if (uq[q] == 0.0 && p_ < 2.0) continue;
    const double c = (p_ - 1.0) * coef[q] * scale;
    if (c == 0.0 || !std::isfinite(c)) continue;
    for (int a = 0; a < A; ++a) {
      const int ra = dofs.dof(t.index[static_cast<std::size_t>(a) * Q + q]);
      if (ra < 0) continue;
      const double pa = t.phi[static_cast<std::size_t>(a) * Q + q];
      if (pa == 0.0) continue;
      for (int b = 0; b < A; ++b) {
        const int rb = dofs.dof(t.index[static_cast<std::size_t>(b) * Q + q]);
        if (rb < 0) continue;
        const double pb = t.phi[static_cast<std::size_t>(b) * Q + q];
        if (pb != 0.0) out.emplace_back(ra, rb, c * pa * pb);
      }
    }
  }
}

// ---------------------------------------------------------------------------

SpMat assemble(int n, const Triplets& t) {
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Vec interior_mass(const Mesh& mesh, const DofMap& dofs) {
  Vec m(dofs.dofs());
  const auto lm = mesh.lumped_mass();
  for (int k = 0; k < dofs.dofs(); ++k) m[k] = lm[dofs.node(k)];
  return m;
}

DualNorm::DualNorm(const EnergyForm& energy, const DofMap& dofs)
    : dofs_(&dofs), solver_(std::make_shared<Eigen::SimplicialLDLT<SpMat>>()) {
  Triplets t;
  energy.add_laplacian(dofs, 1.0, t);
  solver_->compute(assemble(dofs.dofs(), t));
  if (solver_->info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "stiffness factorization failed");
}

Vec DualNorm::solve(const Vec& r) const { return solver_->solve(r); }

double DualNorm::operator()(std::span<const double> full) const {
  const Vec r = dofs_->restrict(full);
  const Vec x = solver_->solve(r);
  return std::sqrt(std::max(0.0, r.dot(x)));
}

}  // namespace hardy::detail

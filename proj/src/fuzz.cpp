#include "hardy/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "hardy/errors.hpp"

namespace hardy {

GradeToward natural_grading(KernelKind kind) {
  switch (kind) {
    case KernelKind::DistPower:
    case KernelKind::DistLog:
      return GradeToward::Boundary;
    case KernelKind::OriginLog:
      return GradeToward::Origin;
    case KernelKind::StarHardy:
      return GradeToward::Both;
  }
  return GradeToward::Boundary;
}

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace

namespace {

// Per-mesh data shared by all samples of a fuzz run.
struct FieldContext {
  MeshPtr mesh;
  double S;  // sup |x|
  double R;  // log scale for origin profiles
  double lo_exp;
  std::vector<double> dist;

  FieldContext(const MeshPtr& m, const Potential& pot) : mesh(m) {
    S = domain_extremes(m->domain()).outer_radius;
    R = pot.kind == KernelKind::OriginLog ? pot.R : std::exp(1.0) * S * 1.01;
    lo_exp = (pot.p - 1.0) / pot.p;
    dist.assign(m->size(), 0.0);
    for (std::size_t i = 0; i < m->size(); ++i) {
      if (m->is_boundary(i)) continue;
      const auto& info = m->node_info(i);
      dist[i] = info.dist >= 0.0 ? info.dist : distance_to_boundary(m->domain(), m->position(i));
    }
  }

  GridFunction sample(std::uint64_t seed, std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 5), kind(0, 3);
    const bool radial = mesh->kind() == Mesh::Kind::Radial;

    std::vector<double> v(mesh->size(), 0.0);
    const int terms = count(rng);
    for (int k = 0; k < terms; ++k) {
      const double amp = (unit(rng) < 0.8 ? 1.0 : -1.0) * (0.2 + 0.8 * unit(rng));
      const int which = kind(rng);
      if (which == 0) {  // Gaussian bump
        double cx, cy;
        if (radial) {
          cx = S * unit(rng);
          cy = 0.0;
        } else {
          const double th = 2.0 * std::numbers::pi * unit(rng);
          const double r = mesh->domain().boundary_radius(th) * std::sqrt(unit(rng));
          cx = r * std::cos(th);
          cy = r * std::sin(th);
        }
        const double w = log_uniform(rng, 0.02, 0.5) * S;
        for (std::size_t i = 0; i < v.size(); ++i) {
          const auto x = mesh->position(i);
          const double dx = radial ? mesh->node_info(i).radius - cx : x[0] - cx;
          const double dy = radial ? 0.0 : x[1] - cy;
          v[i] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
        }
      } else if (which == 1) {  // boundary power d^a
        const double a = lo_exp + (2.0 - lo_exp) * unit(rng);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += amp * std::pow(dist[i] / S, a);
      } else if (which == 2) {  // origin log (log(R/(|x|+η)))^b
        const double b = 0.1 + 0.9 * unit(rng);
        const double eta = log_uniform(rng, 1e-8, 1e-2) * S;
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] += amp * std::pow(std::log(R / (mesh->node_info(i).radius + eta)), b);
      } else {  // origin power |x|^a
        const double a = 0.05 + 1.95 * unit(rng);
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] += amp * std::pow(mesh->node_info(i).radius / S, a);
      }
    }
    return GridFunction(mesh, std::move(v));
  }
};

}  // namespace

GridFunction random_test_field(const MeshPtr& mesh, const Potential& pot, std::uint64_t seed,
                               std::uint64_t index) {
  return FieldContext(mesh, pot).sample(seed, index);
}

FuzzResult hardy_fuzz(const MeshPtr& mesh, const Potential& pot, int samples, std::uint64_t seed,
                      double tolerance, int workers) {
  if (samples < 1) throw Error(ErrorKind::Parameter, "fuzz needs at least one sample");
  const Weight weight(pot, mesh, std::nullopt);
  const double C = optimal_constant(pot);
  FuzzResult out;
  out.quotients.assign(samples, 0.0);
  out.quadrature_converged.assign(samples, 0);

  const FieldContext ctx(mesh, pot);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int s = next++; s < samples; s = next++) {
      GridFunction u = ctx.sample(seed, static_cast<std::uint64_t>(s));
      if (u.max_abs() == 0.0) u = distance_profile(mesh);
      const auto B = weighted_pnorm(u, weight, pot.p);
      out.quotients[s] = dirichlet_energy(u, pot.p) / B.value;
      out.quadrature_converged[s] = B.converged ? 1 : 0;
    }
  };
  const int n = std::max(1, std::min(workers, samples));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  out.min_quotient = *std::min_element(out.quotients.begin(), out.quotients.end());
  for (double q : out.quotients)
    if (!(q >= C - tolerance)) ++out.violations;
  return out;
}

}  // namespace hardy

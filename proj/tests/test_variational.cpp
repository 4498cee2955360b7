#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hardy/errors.hpp"
#include "hardy/fuzz.hpp"
#include "hardy/variational.hpp"

using namespace hardy;

namespace {

const Domain kDisk = Domain::ball(2, 1.0);
constexpr double kPi = std::numbers::pi;

GridFunction radial(const MeshPtr& m, double (*f)(double)) {
  return interpolate(m, [f](auto, const PointInfo& info) { return f(info.radius); });
}

GridFunction random_field(const MeshPtr& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(m->size());
  for (auto& x : v) x = u(rng);
  return GridFunction(m, std::move(v));
}

GridFunction axpy(const GridFunction& u, double a, const GridFunction& v) {
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = u[i] + a * v[i];
  return GridFunction(u.mesh(), std::move(w));
}

}  // namespace

TEST_CASE("grid functions vanish on the boundary and stay finite") {
  const auto m = build_mesh(kDisk, 20, 1.0);
  GridFunction u(m, std::vector<double>(20, 1.0));
  CHECK(u[19] == 0.0);
  CHECK(u[0] == 1.0);
  std::vector<double> bad(20, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(GridFunction(m, bad), Error);
  CHECK_THROWS_AS(GridFunction(m, std::vector<double>(5, 0.0)), Error);
}

TEST_CASE("dirichlet energy") {
  const auto m = build_mesh(kDisk, 2000, 1.0);
  CHECK(dirichlet_energy(GridFunction(m), 2.0) == 0.0);
  // |u'| = 1 on the unit disk
  CHECK(dirichlet_energy(radial(m, [](double r) { return 1.0 - r; }), 2.0) ==
        doctest::Approx(kPi).epsilon(1e-12));
  // 2π ∫ (2r)^3 r dr = 16π/5
  CHECK(dirichlet_energy(radial(m, [](double r) { return 1.0 - r * r; }), 3.0) ==
        doctest::Approx(16.0 * kPi / 5.0).epsilon(1e-5));
  const auto g = build_mesh(kDisk, 400, 2.0);
  CHECK(dirichlet_energy(radial(g, [](double r) { return 1.0 - r * r; }), 3.0) ==
        doctest::Approx(16.0 * kPi / 5.0).epsilon(1e-4));
}

TEST_CASE("weighted p-norm") {
  const auto m = build_mesh(kDisk, 400, 2.0);
  const auto pot = make_potential(KernelKind::DistPower, 2.0, kDisk);
  CHECK(weighted_pnorm(GridFunction(m), pot, TruncationLevel(10.0), 2.0).value == 0.0);

  // d^{-2}(1 - r)^2 = 1
  const auto u = radial(m, [](double r) { return 1.0 - r; });
  const auto B = weighted_pnorm(u, pot, std::nullopt, 2.0);
  CHECK(B.converged);
  CHECK(B.value == doctest::Approx(kPi).epsilon(1e-9));
  CHECK(rayleigh_quotient(u, Weight(pot, m, std::nullopt), 2.0) == doctest::Approx(1.0).epsilon(1e-9));

  // support away from the singular set: a huge cap is inactive
  const auto bump = radial(m, [](double r) { return r < 0.5 ? std::pow(0.25 - r * r, 2) : 0.0; });
  const double capped = weighted_pnorm(bump, pot, TruncationLevel(1e12), 2.0).value;
  const double free = weighted_pnorm(bump, pot, std::nullopt, 2.0).value;
  CHECK(capped == doctest::Approx(free).epsilon(1e-12));

  // W_N increases with N
  double prev = 0.0;
  for (double N : {1.0, 10.0, 100.0, 1e4}) {
    const double b = weighted_pnorm(u, pot, TruncationLevel(N), 2.0).value;
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(prev <= B.value * (1 + 1e-12));
}

TEST_CASE("p-Laplacian: zero field and the 3-node stencil") {
  const auto m = build_mesh(kDisk, 50, 1.0);
  const auto z = p_laplacian_apply(GridFunction(m), 2.0);
  for (double v : z.values()) CHECK(v == 0.0);

  // Δ(1 - r²) = -4 exactly for the lumped radial stencil on a uniform mesh
  const auto u = radial(m, [](double r) { return 1.0 - r * r; });
  const auto Lu = p_laplacian_apply(u, 2.0);
  for (std::size_t i = 1; i + 1 < m->size(); ++i) CHECK(Lu[i] == doctest::Approx(-4.0).epsilon(1e-10));

  // stencil by hand: −(|c_{i−1}|(u_i − u_{i−1}) − |c_i|(u_{i+1} − u_i)) / (h² m_i)
  std::mt19937_64 rng(1);
  const auto v = random_field(m, rng);
  const auto Lv = p_laplacian_apply(v, 2.0);
  const auto cell = m->cell_measure();
  const auto mass = m->lumped_mass();
  for (std::size_t i = 1; i + 1 < m->size(); ++i) {
    const double hl = m->radius(i) - m->radius(i - 1), hr = m->radius(i + 1) - m->radius(i);
    const double flux = cell[i - 1] * (v[i] - v[i - 1]) / (hl * hl) - cell[i] * (v[i + 1] - v[i]) / (hr * hr);
    CHECK(Lv[i] == doctest::Approx(-flux / mass[i]).epsilon(1e-10));
  }
}

TEST_CASE("p-Laplacian homogeneity") {
  const auto m = build_mesh(kDisk, 200, 2.0);
  std::mt19937_64 rng(2);
  const auto u = random_field(m, rng);
  std::vector<double> twice(u.values().begin(), u.values().end());
  for (auto& x : twice) x *= 2.0;
  const auto a = p_laplacian_apply(u, 3.0);
  const auto b = p_laplacian_apply(GridFunction(m, twice), 3.0);
  for (std::size_t i = 0; i < m->size(); ++i) CHECK(b[i] == doctest::Approx(4.0 * a[i]).epsilon(1e-10));
}

TEST_CASE("p-Laplacian is minus the energy gradient") {
  std::mt19937_64 rng(7);
  for (const auto& m : {build_mesh(kDisk, 200, 2.0),
                        build_mesh(Domain::star_shaped({1.2, 1.0, 0.9, 1.0, 1.1, 1.0, 0.8, 1.0}), 24, 1.5,
                                   GradeToward::Both, 32)}) {
    for (double p : {2.0, 3.0, 4.0}) {
      for (int t = 0; t < 5; ++t) {
        const auto u = random_field(m, rng);
        const auto dir = random_field(m, rng);
        const auto L = p_laplacian_apply(u, p);
        const auto mass = m->lumped_mass();
        double analytic = 0.0;
        for (std::size_t i = 0; i < m->size(); ++i) analytic += -p * mass[i] * L[i] * dir[i];
        const double h = 1e-5;
        const double fd = (dirichlet_energy(axpy(u, h, dir), p) - dirichlet_energy(axpy(u, -h, dir), p)) / (2 * h);
        CHECK(std::abs(fd - analytic) <= 1e-6 * std::abs(analytic));
      }
    }
  }
}

TEST_CASE("Rayleigh quotient is scale invariant") {
  const auto m = build_mesh(kDisk, 200, 2.0);
  const auto pot = make_potential(KernelKind::DistPower, 3.0, kDisk);
  const auto u = distance_profile(m);
  std::vector<double> v(u.values().begin(), u.values().end());
  for (auto& x : v) x *= 7.5;
  const TruncationLevel N(100.0);
  CHECK(rayleigh_quotient(GridFunction(m, v), pot, N, 3.0) ==
        doctest::Approx(rayleigh_quotient(u, pot, N, 3.0)).epsilon(1e-12));
}

TEST_CASE("Dirichlet Laplacian eigenvalue of the disk") {
  const auto m = build_mesh(kDisk, 400, 2.0);
  const auto e = first_eigenpair(Weight::uniform(m), 2.0, 1e-9);
  const double j01 = 2.404825557695773;
  CHECK(e.lambda == doctest::Approx(j01 * j01).epsilon(0.02));
  CHECK(e.lambda == doctest::Approx(j01 * j01).epsilon(1e-3));
}

TEST_CASE("first eigenpair invariants") {
  const auto m = build_mesh(kDisk, 400, 2.0);
  for (double p : {2.0, 3.0}) {
    const auto pot = make_potential(KernelKind::DistPower, p, kDisk);
    const TruncationLevel N(100.0);
    const auto e = first_eigenpair(pot, N, p, m, 1e-9);
    CHECK(e.converged);
    for (std::size_t i = 0; i < m->size(); ++i)
      if (!m->is_boundary(i)) CHECK(e.eigfun[i] > 0.0);
    CHECK(weighted_pnorm(e.eigfun, pot, N, p).value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rayleigh_quotient(e.eigfun, pot, N, p) == doctest::Approx(e.lambda).epsilon(1e-10));
    CHECK(e.lambda >= optimal_constant(pot) - 1e-3);
    CHECK(eigen_residual(e.eigfun, Weight(pot, m, N), p, e.lambda) <= 1e-8);
  }
}

TEST_CASE("truncated eigenvalues decrease toward the Hardy constant") {
  const auto m = build_mesh(kDisk, 400, 2.0);
  const auto pot = make_potential(KernelKind::DistPower, 2.0, kDisk);
  double prev = HUGE_VAL;
  for (double N : {10.0, 100.0, 1000.0}) {
    const auto e = first_eigenpair(pot, TruncationLevel(N), 2.0, m, 1e-9);
    CHECK(e.lambda <= prev);
    CHECK(e.lambda >= 0.25 - 1e-3);
    prev = e.lambda;
  }
}

TEST_CASE("Hardy floor on random fields") {
  const auto m = build_mesh(kDisk, 400, 2.0);
  for (double p : {2.0, 3.0}) {
    const auto pot = make_potential(KernelKind::DistPower, p, kDisk);
    const auto r = hardy_fuzz(m, pot, 40, 123, 1e-3, 2);
    CHECK(r.violations == 0);
    CHECK(r.min_quotient >= optimal_constant(pot) - 1e-3);
    // same seed, same quotients
    const auto again = hardy_fuzz(m, pot, 40, 123, 1e-3, 1);
    CHECK(again.quotients == r.quotients);
  }
}

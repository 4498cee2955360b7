#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hardy/errors.hpp"
#include "hardy/potentials.hpp"

using namespace hardy;

namespace {

const Domain kDisk = Domain::ball(2, 1.0);

std::array<double, 2> random_point(std::mt19937_64& rng, double rmax) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double th = 2.0 * std::numbers::pi * u(rng);
  const double r = rmax * std::sqrt(u(rng));
  return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace

TEST_CASE("dist-power kernel") {
  const auto pot = make_potential(KernelKind::DistPower, 2.0, kDisk);
  const double x[] = {0.5, 0.0};
  CHECK(eval_potential(pot, kDisk, x) == doctest::Approx(4.0).epsilon(1e-14));
  const double edge[] = {1.0, 0.0};
  CHECK(std::isinf(eval_potential(pot, kDisk, edge)));
}

TEST_CASE("origin-log kernel") {
  // R = e with |x| = 1 needs a domain reaching past |x| = 1, so the
  // R > e sup|x| check is bypassed on purpose here.
  Potential pot;
  pot.kind = KernelKind::OriginLog;
  pot.p = 2.0;
  pot.n = 2;
  pot.R = std::numbers::e;
  const auto big = Domain::ball(2, 2.0);
  const double x[] = {0.6, 0.8};
  CHECK(eval_potential(pot, big, x) == doctest::Approx(1.0).epsilon(1e-14));

  const auto valid = make_potential(KernelKind::OriginLog, 2.0, kDisk);
  CHECK(valid.R == doctest::Approx(1.01 * std::numbers::e));
  const double origin[] = {0.0, 0.0};
  CHECK(std::isinf(eval_potential(valid, kDisk, origin)));
  // radial: depends on |x| only
  const double a[] = {0.3, 0.4}, b[] = {-0.5, 0.0};
  CHECK(eval_potential(valid, kDisk, a) == doctest::Approx(eval_potential(valid, kDisk, b)).epsilon(1e-14));
}

TEST_CASE("star-hardy kernel") {
  const auto d = Domain::star_shaped(std::vector<double>(16, 1.0));
  const auto pot = make_potential(KernelKind::StarHardy, 3.0, d);
  CHECK(pot.m == doctest::Approx(0.5));
  const double x[] = {0.0, 0.25};
  CHECK(eval_potential(pot, d, x) == doctest::Approx(64.0).epsilon(1e-12));
  // W = |x|^{m-n} |φ^m - |x|^m|^{-p} on a non-circular domain
  std::vector<double> phi(16);
  for (int k = 0; k < 16; ++k) phi[k] = 1.0 + 0.2 * std::cos(2.0 * std::numbers::pi * k / 16);
  const auto s = Domain::star_shaped(phi);
  const auto ps = make_potential(KernelKind::StarHardy, 3.0, s);
  const double th = 0.7, r = 0.4;
  const double y[] = {r * std::cos(th), r * std::sin(th)};
  const double ref = std::pow(r, 0.5 - 2.0) * std::pow(std::pow(s.boundary_radius(th), 0.5) - std::pow(r, 0.5), -3.0);
  CHECK(eval_potential(ps, s, y) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("dist-log kernel dominates dist-power") {
  const auto p3 = Domain::ball(2, 1.0);
  const auto log = make_potential(KernelKind::DistLog, 3.0, p3);
  const auto pow = make_potential(KernelKind::DistPower, 3.0, p3);
  CHECK(log.D == doctest::Approx(std::numbers::e));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto x = random_point(rng, 0.999);
    CHECK(eval_potential(log, p3, x) >= eval_potential(pow, p3, x));
  }
}

TEST_CASE("truncation") {
  const auto pot = make_potential(KernelKind::DistPower, 2.0, kDisk);
  const double x[] = {0.5, 0.0};
  CHECK(truncate_potential(pot, kDisk, x, TruncationLevel(3.0)) == 3.0);
  CHECK(truncate_potential(pot, kDisk, x, TruncationLevel(10.0)) == doctest::Approx(4.0));
  const double edge[] = {0.0, -1.0};
  CHECK(truncate_potential(pot, kDisk, edge, TruncationLevel(100.0)) == 100.0);

  CHECK_THROWS_AS(TruncationLevel(0.0), Error);
  CHECK_THROWS_AS(TruncationLevel(-1.0), Error);
  CHECK_THROWS_AS(TruncationLevel(std::nan("")), Error);
}

TEST_CASE("truncation is monotone in N and bounded by W") {
  std::mt19937_64 rng(9);
  for (auto kind : {KernelKind::DistPower, KernelKind::OriginLog}) {
    const auto pot = make_potential(kind, 2.0, kDisk);
    for (int t = 0; t < 100; ++t) {
      const auto x = random_point(rng, 1.0);
      const double W = eval_potential(pot, kDisk, x);
      double prev = 0.0;
      for (double N : {0.5, 1.0, 10.0, 1e3, 1e6}) {
        const double w = truncate_potential(pot, kDisk, x, TruncationLevel(N));
        CHECK(w >= prev);
        CHECK(w <= W);
        CHECK(w <= N);
        prev = w;
      }
    }
  }
}

TEST_CASE("optimal constants") {
  CHECK(optimal_constant(make_potential(KernelKind::DistPower, 2.0, kDisk)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(optimal_constant(make_potential(KernelKind::DistPower, 3.0, kDisk)) == doctest::Approx(8.0 / 27.0).epsilon(1e-15));
  CHECK(optimal_constant(make_potential(KernelKind::OriginLog, 2.0, kDisk)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(optimal_constant(make_potential(KernelKind::StarHardy, 3.0, kDisk)) == doctest::Approx(1.0 / 27.0).epsilon(1e-15));
  CHECK(optimal_constant(make_potential(KernelKind::DistLog, 3.0, kDisk)) == doctest::Approx(8.0 / 27.0).epsilon(1e-15));
}

TEST_CASE("parameter regimes") {
  CHECK_THROWS_AS(make_potential(KernelKind::StarHardy, 2.0, kDisk), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::DistLog, 2.0, kDisk), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::DistLog, 1.5, kDisk), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::OriginLog, 3.0, kDisk), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::DistPower, 1.0, kDisk), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::OriginLog, 2.0, kDisk, {.R = 2.0}), Error);
  CHECK_THROWS_AS(make_potential(KernelKind::DistLog, 3.0, kDisk, {.D = 0.5}), Error);
  try {
    make_potential(KernelKind::StarHardy, 2.0, kDisk);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("p > n") != std::string::npos);
    CHECK(e.kind() == ErrorKind::Parameter);
  }
  // p = n is outside the covered range for kernel i but the kernel is still defined
  const auto pot = make_potential(KernelKind::DistPower, 2.0, kDisk);
  CHECK_FALSE(pot.caveats.empty());
  CHECK(make_potential(KernelKind::DistPower, 3.0, kDisk).caveats.empty());
}

TEST_CASE("kernel names round-trip") {
  for (auto k : {KernelKind::DistPower, KernelKind::DistLog, KernelKind::OriginLog, KernelKind::StarHardy})
    CHECK(parse_kernel(kernel_name(k)) == k);
  CHECK(parse_kernel("iv") == KernelKind::StarHardy);
  CHECK_FALSE(parse_kernel("v").has_value());
}

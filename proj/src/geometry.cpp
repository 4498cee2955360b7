#include "hardy/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

double circular_gap(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

struct Piece {
  double theta0, theta1, phi0, phi1;
  double radius(double theta) const {
    return phi0 + (phi1 - phi0) * (theta - theta0) / (theta1 - theta0);
  }
};

Piece piece_of(const StarShaped2D& s, std::size_t k) {
  const std::size_t K = s.phi.size();
  const double step = kTwoPi / static_cast<double>(K);
  return {step * static_cast<double>(k), step * static_cast<double>(k + 1), s.phi[k],
          s.phi[(k + 1) % K]};
}

double sq_dist_to_curve_point(double px, double py, const Piece& pc, double theta) {
  const double r = pc.radius(theta);
  const double dx = px - r * std::cos(theta);
  const double dy = py - r * std::sin(theta);
  return dx * dx + dy * dy;
}

// Minimum squared distance from (px, py) to one boundary piece: dense sampling
// followed by golden-section refinement around the best sample.
double sq_dist_to_piece(double px, double py, const Piece& pc) {
  constexpr int kSamples = 24;
  const double h = (pc.theta1 - pc.theta0) / kSamples;
  int best = 0;
  double best_val = sq_dist_to_curve_point(px, py, pc, pc.theta0);
  for (int i = 1; i <= kSamples; ++i) {
    const double v = sq_dist_to_curve_point(px, py, pc, pc.theta0 + h * i);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = pc.theta0 + h * std::max(best - 1, 0);
  double b = pc.theta0 + h * std::min(best + 1, kSamples);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = sq_dist_to_curve_point(px, py, pc, c);
  double fd = sq_dist_to_curve_point(px, py, pc, d);
  for (int it = 0; it < 80 && (b - a) > 1e-15; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = sq_dist_to_curve_point(px, py, pc, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = sq_dist_to_curve_point(px, py, pc, d);
    }
  }
  return std::min({best_val, fc, fd});
}

double star_distance(const StarShaped2D& s, double px, double py) {
  const std::size_t K = s.phi.size();
  const double r = std::hypot(px, py);
  const double theta = wrap_angle(std::atan2(py, px));

  // Lower bound per piece: a boundary point y at angular gap α from x satisfies
  // |x - y| >= |y| sin(min(α, π/2)).
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Piece pc = piece_of(s, k);
    double gap = 0.0;
    if (theta < pc.theta0 || theta > pc.theta1)
      gap = std::min(circular_gap(theta, pc.theta0), circular_gap(theta, pc.theta1));
    const double rmin = std::min(pc.phi0, pc.phi1);
    double lb = rmin * std::sin(std::min(gap, std::numbers::pi / 2));
    if (r == 0.0) lb = rmin;
    order.emplace_back(lb, k);
  }
  std::sort(order.begin(), order.end());
  double best = HUGE_VAL;
  for (const auto& [lb, k] : order) {
    if (lb * lb >= best) break;
    best = std::min(best, sq_dist_to_piece(px, py, piece_of(s, k)));
  }
  return std::sqrt(best);
}

// Compass search maximizing d over the interior, started from `start`.
std::pair<double, std::array<double, 2>> refine_inradius(const Domain& domain,
                                                         std::array<double, 2> start,
                                                         double step) {
  auto value = [&](const std::array<double, 2>& x) {
    if (!domain.contains(x, 0.0)) return -1.0;
    return distance_to_boundary(domain, x);
  };
  double best = value(start);
  std::array<double, 2> at = start;
  const std::array<std::array<double, 2>, 8> dirs{{{1, 0},
                                                   {-1, 0},
                                                   {0, 1},
                                                   {0, -1},
                                                   {0.7071067811865476, 0.7071067811865476},
                                                   {-0.7071067811865476, 0.7071067811865476},
                                                   {0.7071067811865476, -0.7071067811865476},
                                                   {-0.7071067811865476, -0.7071067811865476}}};
  while (step > 1e-12) {
    bool improved = false;
    for (const auto& d : dirs) {
      const std::array<double, 2> trial{at[0] + step * d[0], at[1] + step * d[1]};
      const double v = value(trial);
      if (v > best) {
        best = v;
        at = trial;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return {best, at};
}

}  // namespace

Domain Domain::ball(int dim, double radius) {
  if (dim < 2) throw Error(ErrorKind::Parameter, "ball dimension must be >= 2");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorKind::Parameter, "ball radius must be positive and finite");
  Domain d;
  d.kind_ = Ball{dim, radius};
  return d;
}

Domain Domain::star_shaped(std::vector<double> phi, bool convexity_assumed) {
  if (phi.size() < 8)
    throw Error(ErrorKind::Parameter, "star-shaped domain needs at least 8 samples of phi");
  for (double v : phi) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Parameter, "phi sample is not finite");
    if (!(v > 0.0)) throw Error(ErrorKind::Parameter, "phi samples must be positive");
  }
  Domain d;
  d.kind_ = StarShaped2D{std::move(phi)};
  d.convexity_assumed_ = convexity_assumed;
  if (convexity_assumed && !d.polygon_convex())
    throw Error(ErrorKind::Parameter,
                "convexity assumed but the boundary sample polygon is not convex");
  return d;
}

double Domain::boundary_radius(double theta) const {
  if (is_ball()) return ball().radius;
  const auto& s = star();
  const std::size_t K = s.phi.size();
  const double step = kTwoPi / static_cast<double>(K);
  const double t = wrap_angle(theta);
  std::size_t k = std::min(static_cast<std::size_t>(t / step), K - 1);
  return piece_of(s, k).radius(t);
}

double Domain::boundary_slope(double theta) const {
  if (is_ball()) return 0.0;
  const auto& s = star();
  const std::size_t K = s.phi.size();
  const double step = kTwoPi / static_cast<double>(K);
  const double t = wrap_angle(theta);
  std::size_t k = std::min(static_cast<std::size_t>(t / step), K - 1);
  return (s.phi[(k + 1) % K] - s.phi[k]) / step;
}

double Domain::volume() const {
  if (is_ball()) {
    const auto& b = ball();
    return unit_sphere_area(b.dim) * std::pow(b.radius, b.dim) / b.dim;
  }
  // (1/2) ∫ φ² dθ, exact for the piecewise linear φ.
  const auto& s = star();
  const std::size_t K = s.phi.size();
  const double step = kTwoPi / static_cast<double>(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = s.phi[k], b = s.phi[(k + 1) % K];
    acc += step * (a * a + a * b + b * b) / 3.0;
  }
  return 0.5 * acc;
}

bool Domain::contains(std::span<const double> x, double rel_tol) const {
  if (is_ball()) {
    const auto& b = ball();
    if (static_cast<int>(x.size()) != b.dim) return false;
    return norm(x) <= b.radius * (1.0 + rel_tol);
  }
  if (x.size() != 2) return false;
  const double r = std::hypot(x[0], x[1]);
  if (r == 0.0) return true;
  return r <= boundary_radius(std::atan2(x[1], x[0])) * (1.0 + rel_tol);
}

bool Domain::polygon_convex() const {
  if (is_ball()) return true;
  const auto& s = star();
  const std::size_t K = s.phi.size();
  const double step = kTwoPi / static_cast<double>(K);
  auto pt = [&](std::size_t k) {
    const double t = step * static_cast<double>(k % K);
    return std::array<double, 2>{s.phi[k % K] * std::cos(t), s.phi[k % K] * std::sin(t)};
  };
  for (std::size_t k = 0; k < K; ++k) {
    const auto a = pt(k), b = pt(k + 1), c = pt(k + 2);
    const double cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
    if (cross < -1e-14) return false;
  }
  return true;
}

double distance_to_boundary(const Domain& domain, std::span<const double> x) {
  if (!domain.contains(x)) throw Error(ErrorKind::Domain, "point lies outside the domain");
  if (domain.is_ball()) return std::max(0.0, domain.ball().radius - norm(x));
  const double r = std::hypot(x[0], x[1]);
  if (r > 0.0) {
    const double edge = domain.boundary_radius(std::atan2(x[1], x[0]));
    if (std::fabs(edge - r) <= 1e-14 * edge) return 0.0;
  }
  return star_distance(domain.star(), x[0], x[1]);
}

DomainExtremes domain_extremes(const Domain& domain) {
  if (domain.is_ball()) return {domain.ball().radius, domain.ball().radius};
  const auto& phi = domain.star().phi;
  const double outer = *std::max_element(phi.begin(), phi.end());

  // Coarse polar scan, then compass refinement from the best few candidates.
  constexpr int kRadial = 24, kAngular = 64;
  std::vector<std::pair<double, std::array<double, 2>>> cand;
  cand.emplace_back(distance_to_boundary(domain, std::array<double, 2>{0.0, 0.0}),
                    std::array<double, 2>{0.0, 0.0});
  for (int j = 1; j < kRadial; ++j) {
    for (int k = 0; k < kAngular; ++k) {
      const double t = kTwoPi * k / kAngular;
      const double r = domain.boundary_radius(t) * j / kRadial;
      const std::array<double, 2> x{r * std::cos(t), r * std::sin(t)};
      cand.emplace_back(distance_to_boundary(domain, x), x);
    }
  }
  std::partial_sort(cand.begin(), cand.begin() + 4, cand.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = cand.front().first;
  const double step = outer / kRadial;
  for (int i = 0; i < 4; ++i) best = std::max(best, refine_inradius(domain, cand[i].second, step).first);
  return {best, outer};
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace hardy

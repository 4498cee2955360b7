#include "hardy/potentials.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

constexpr double kInf = HUGE_VAL;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double point_distance(const Domain& domain, const PointInfo& w) {
  if (w.dist >= 0.0) return w.dist;
  if (w.one_minus_rho == 0.0) return 0.0;
  const double x[2] = {w.radius * std::cos(w.theta), w.radius * std::sin(w.theta)};
  return distance_to_boundary(domain, x);
}

// 1 - ρ^m with ρ = 1 - om, accurate for small om.
double one_minus_rho_pow(double om, double m) {
  if (om >= 1.0) return 1.0;
  return -std::expm1(m * std::log1p(-om));
}

}  // namespace

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::DistPower:
      return "dist-power";
    case KernelKind::DistLog:
      return "dist-log";
    case KernelKind::OriginLog:
      return "origin-log";
    case KernelKind::StarHardy:
      return "star-hardy";
  }
  return "?";
}

std::optional<KernelKind> parse_kernel(std::string_view t) {
  if (t == "i" || t == "dist-power") return KernelKind::DistPower;
  if (t == "ii" || t == "dist-log") return KernelKind::DistLog;
  if (t == "iii" || t == "origin-log") return KernelKind::OriginLog;
  if (t == "iv" || t == "star-hardy") return KernelKind::StarHardy;
  return std::nullopt;
}

Potential make_potential(KernelKind kind, double p, const Domain& domain,
                         const PotentialOptions& options) {
  if (!std::isfinite(p) || !(p > 1.0))
    throw Error(ErrorKind::Parameter, "p must be a finite real > 1");
  Potential pot;
  pot.kind = kind;
  pot.p = p;
  pot.n = domain.dim();
  const double n = pot.n;
  const double e = std::numbers::e;

  switch (kind) {
    case KernelKind::DistPower:
      if (p == n)
        pot.caveats.push_back("kernel i: p = n lies outside the covered range p > 1, p != n");
      if (!domain.convexity_assumed() && !domain.is_ball())
        pot.caveats.push_back("kernel i: Hardy inequality assumes nonnegative mean curvature");
      break;
    case KernelKind::DistLog: {
      if (!(p > n))
        throw Error(ErrorKind::Parameter, "kernel ii requires p > n (got p = " + fmt(p) +
                                              ", n = " + fmt(n) + ")");
      const double inradius = domain_extremes(domain).inradius;
      pot.D = options.D.value_or(e * inradius);
      if (!(pot.D >= inradius))
        throw Error(ErrorKind::Parameter,
                    "kernel ii requires D >= sup d(x) = " + fmt(inradius) + " (got " + fmt(pot.D) + ")");
      if (pot.D < e * inradius)
        pot.caveats.push_back("kernel ii: D < e sup d(x); the log term is unbounded near d = D");
      break;
    }
    case KernelKind::OriginLog: {
      if (p != n)
        throw Error(ErrorKind::Parameter, "kernel iii is the n-Laplacian case: requires p = n (got p = " +
                                              fmt(p) + ", n = " + fmt(n) + ")");
      const double outer = domain_extremes(domain).outer_radius;
      pot.R = options.R.value_or(1.01 * e * outer);
      if (!(pot.R > e * outer))
        throw Error(ErrorKind::Parameter, "kernel iii requires R > e sup|x| = " + fmt(e * outer) +
                                              " (got " + fmt(pot.R) + ")");
      break;
    }
    case KernelKind::StarHardy:
      if (!(p > n))
        throw Error(ErrorKind::Parameter, "kernel iv requires p > n (got p = " + fmt(p) +
                                              ", n = " + fmt(n) + ")");
      pot.m = (p - n) / (p - 1.0);
      break;
  }
  return pot;
}

TruncationLevel::TruncationLevel(double cap) : cap_(cap) {
  if (!(cap > 0.0) || std::isnan(cap))
    throw Error(ErrorKind::Parameter, "truncation level N must be positive");
}

double eval_potential(const Potential& pot, const Domain& domain, const PointInfo& w) {
  const double p = pot.p;
  switch (pot.kind) {
    case KernelKind::DistPower: {
      const double d = point_distance(domain, w);
      return d > 0.0 ? std::pow(d, -p) : kInf;
    }
    case KernelKind::DistLog: {
      const double d = point_distance(domain, w);
      if (!(d > 0.0)) return kInf;
      const double lg = std::log(d / pot.D);
      if (lg == 0.0) return kInf;
      return std::pow(d, -p) * (1.0 + p / (2.0 * (p - 1.0)) / (lg * lg));
    }
    case KernelKind::OriginLog: {
      const double r = w.radius;
      if (!(r > 0.0)) return kInf;
      return std::pow(r * std::log(pot.R / r), -static_cast<double>(pot.n));
    }
    case KernelKind::StarHardy: {
      const double r = w.radius;
      if (!(r > 0.0) || w.one_minus_rho <= 0.0) return kInf;
      const double phi = domain.boundary_radius(w.theta);
      const double m = pot.m;
      const double gap = std::pow(phi, m) * one_minus_rho_pow(w.one_minus_rho, m);
      return std::pow(r, m - pot.n) * std::pow(gap, -p);
    }
  }
  return kInf;
}

double eval_potential(const Potential& pot, const Domain& domain, std::span<const double> x) {
  if (!domain.contains(x)) throw Error(ErrorKind::Domain, "point lies outside the domain");
  PointInfo w;
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  w.radius = std::sqrt(r2);
  w.theta = x.size() == 2 ? std::atan2(x[1], x[0]) : 0.0;
  const double edge = domain.boundary_radius(w.theta);
  w.rho = std::min(1.0, w.radius / edge);
  w.one_minus_rho = std::max(0.0, (edge - w.radius) / edge);
  w.dist = (pot.kind == KernelKind::DistPower || pot.kind == KernelKind::DistLog)
               ? distance_to_boundary(domain, x)
               : -1.0;
  return eval_potential(pot, domain, w);
}

double truncate_potential(const Potential& pot, const Domain& domain, std::span<const double> x,
                          TruncationLevel N) {
  const double W = eval_potential(pot, domain, x);
  return W < N.value() ? W : N.value();
}

double optimal_constant(const Potential& pot) {
  switch (pot.kind) {
    case KernelKind::DistPower:
    case KernelKind::DistLog:
      return std::pow((pot.p - 1.0) / pot.p, pot.p);
    case KernelKind::OriginLog: {
      const double n = pot.n;
      return std::pow((n - 1.0) / n, n);
    }
    case KernelKind::StarHardy:
      return std::pow((pot.p - pot.n) / pot.p, pot.p);
  }
  return 0.0;
}

PotentialField sample_potential(const Potential& pot, const Mesh& mesh) {
  PotentialField f;
  const auto& s = mesh.sampling();
  f.samples.resize(s.points);
  for (std::size_t q = 0; q < s.points; ++q)
    f.samples[q] = eval_potential(pot, mesh.domain(), s.where[q]);
  f.nodes.resize(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    f.nodes[i] = mesh.is_boundary(i) && (pot.kind != KernelKind::OriginLog)
                     ? kInf
                     : eval_potential(pot, mesh.domain(), mesh.node_info(i));
  return f;
}

}  // namespace hardy

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hardy/errors.hpp"
#include "hardy/geometry.hpp"
#include "quadrature_rules.hpp"

namespace hardy {

namespace {

constexpr int kCellGauss = 8;       // points per regular cell (weighted integrals)
constexpr int kSubGauss = 4;        // points per geometric sub-interval
constexpr int kSplitLevels = 40;    // halvings toward a singular end
constexpr int kAngularGauss = 4;
constexpr int kStiffnessGauss = 4;  // per direction, polar energy quadrature

// b^n - a^n = (b - a) Σ a^k b^{n-1-k}, with h = b - a passed in accurately.
double power_difference(double a, double b, double h, int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::pow(a, k) * std::pow(b, n - 1 - k);
  return h * acc;
}

// Interval length in ρ between consecutive fractions, taken from whichever
// representation keeps relative precision.
double fraction_gap(const GradedFractions& f, std::size_t i) {
  if (f.one_minus_rho[i] < 0.5) return f.one_minus_rho[i] - f.one_minus_rho[i + 1];
  return f.rho[i + 1] - f.rho[i];
}

struct TableBuilder {
  int arity;
  std::vector<std::vector<std::int32_t>> index;
  std::vector<std::vector<double>> phi;
  std::vector<double> weight;
  std::vector<PointInfo> where;
  std::vector<std::uint8_t> tail;
  std::vector<double> remainder_radius;
  std::vector<std::int32_t> remainder_group;

  explicit TableBuilder(int a) : arity(a), index(a), phi(a) {}

  void add(std::span<const std::int32_t> idx, std::span<const double> basis, double w,
           const PointInfo& info, bool in_tail, double rem_radius = 0.0,
           std::int32_t group = -1) {
    for (int a = 0; a < arity; ++a) {
      index[a].push_back(idx[a]);
      phi[a].push_back(basis[a]);
    }
    weight.push_back(w);
    where.push_back(info);
    tail.push_back(in_tail ? 1 : 0);
    remainder_radius.push_back(rem_radius);
    remainder_group.push_back(group);
  }

  SampleTable finish() {
    SampleTable t;
    t.arity = arity;
    t.points = weight.size();
    for (int a = 0; a < arity; ++a) {
      t.index.insert(t.index.end(), index[a].begin(), index[a].end());
      t.phi.insert(t.phi.end(), phi[a].begin(), phi[a].end());
    }
    t.weight = std::move(weight);
    t.where = std::move(where);
    t.tail = std::move(tail);
    t.remainder_radius = std::move(remainder_radius);
    t.remainder_group = std::move(remainder_group);
    return t;
  }
};

std::vector<detail::SubInterval> cell_parts(bool split_start, bool split_end) {
  if (split_start && split_end) {
    // Split at the midpoint, then grade each half toward its end.
    std::vector<detail::SubInterval> parts;
    for (const auto& p : detail::geometric_split(kSplitLevels, true))
      parts.push_back({0.5 * p.t0, 0.5 * p.t1, 1.0 - 0.5 * p.t0, 1.0 - 0.5 * p.t1, p.tail});
    for (const auto& p : detail::geometric_split(kSplitLevels, false))
      parts.push_back({0.5 + 0.5 * p.t0, 0.5 + 0.5 * p.t1, 0.5 * p.s0, 0.5 * p.s1, p.tail});
    return parts;
  }
  if (split_start) return detail::geometric_split(kSplitLevels, true);
  if (split_end) return detail::geometric_split(kSplitLevels, false);
  return {{0.0, 1.0, 1.0, 0.0, false}};
}

}  // namespace

GradedFractions graded_fractions(int nodes, double grading, GradeToward toward) {
  GradedFractions f;
  f.rho.resize(nodes);
  f.one_minus_rho.resize(nodes);
  const double g = grading;
  for (int i = 0; i < nodes; ++i) {
    const double s = static_cast<double>(i) / (nodes - 1);
    const double sc = static_cast<double>(nodes - 1 - i) / (nodes - 1);  // 1 - s, exact
    double rho = 0.0, om = 1.0;
    switch (toward) {
      case GradeToward::Boundary:
        om = std::pow(sc, g);
        rho = 1.0 - om;
        break;
      case GradeToward::Origin:
        rho = std::pow(s, g);
        om = 1.0 - rho;
        break;
      case GradeToward::Both:
        if (2 * i <= nodes - 1) {
          rho = 0.5 * std::pow(2.0 * s, g);
          om = 1.0 - rho;
        } else {
          om = 0.5 * std::pow(2.0 * sc, g);
          rho = 1.0 - om;
        }
        break;
    }
    f.rho[i] = rho;
    f.one_minus_rho[i] = om;
  }
  f.rho.front() = 0.0;
  f.one_minus_rho.front() = 1.0;
  f.rho.back() = 1.0;
  f.one_minus_rho.back() = 0.0;
  return f;
}

namespace {

void build_radial(Mesh& mesh, const Ball& ball, const GradedFractions& f,
                  GradientTable& stiff, SampleTable& samp, std::vector<double>& cells,
                  std::vector<std::array<double, 2>>& pos, std::vector<PointInfo>& info,
                  std::vector<std::uint8_t>& boundary) {
  (void)mesh;
  const int M = static_cast<int>(f.rho.size());
  const double R = ball.radius;
  const int n = ball.dim;
  const double area = unit_sphere_area(n);

  pos.resize(M);
  info.resize(M);
  boundary.assign(M, 0);
  for (int i = 0; i < M; ++i) {
    const double r = R * f.rho[i];
    pos[i] = {r, 0.0};
    info[i] = {r, 0.0, f.rho[i], f.one_minus_rho[i], R * f.one_minus_rho[i]};
  }
  boundary[M - 1] = 1;

  stiff.arity = 2;
  stiff.components = 1;
  stiff.points = M - 1;
  stiff.index.resize(2 * (M - 1));
  stiff.dphi.resize(2 * (M - 1));
  stiff.weight.resize(M - 1);
  cells.resize(M - 1);
  for (int i = 0; i + 1 < M; ++i) {
    const double h = R * fraction_gap(f, i);
    const double a = R * f.rho[i], b = R * f.rho[i + 1];
    const double measure = area * power_difference(a, b, h, n) / n;
    cells[i] = measure;
    stiff.index[i] = i;
    stiff.index[(M - 1) + i] = i + 1;
    stiff.dphi[i] = -1.0 / h;
    stiff.dphi[(M - 1) + i] = 1.0 / h;
    stiff.weight[i] = measure;
  }

  const auto cell_rule = detail::gauss_legendre(kCellGauss);
  const auto sub_rule = detail::gauss_legendre(kSubGauss);
  TableBuilder tb(2);
  for (int i = 0; i + 1 < M; ++i) {
    const double delta = fraction_gap(f, i);
    const bool at_origin = (i == 0);
    const bool at_boundary = (i + 2 == M);
    const auto parts = cell_parts(at_origin, at_boundary);
    const auto& rule = parts.size() == 1 ? cell_rule : sub_rule;
    const std::int32_t idx[2] = {i, i + 1};
    for (const auto& part : parts) {
      const double len = part.t1 - part.t0;
      for (std::size_t g = 0; g < rule.x.size(); ++g) {
        const double t = part.t0 + len * rule.x[g];
        const double one_minus_t = part.s0 + (part.s1 - part.s0) * rule.x[g];
        const double rho = f.rho[i] + t * delta;
        const double om = f.one_minus_rho[i + 1] + one_minus_t * delta;
        const double r = R * rho;
        const double w = rule.w[g] * len * delta * R * area * std::pow(r, n - 1);
        const double basis[2] = {one_minus_t, t};
        const bool at_center = at_origin && part.tail && part.t0 == 0.0;
        tb.add(idx, basis, w, PointInfo{r, 0.0, rho, om, R * om}, part.tail,
               at_center ? R * part.t1 * delta : 0.0, at_center ? 0 : -1);
      }
    }
  }
  samp = tb.finish();
}

void build_polar(const Domain& domain, const GradedFractions& f, int A, GradientTable& stiff,
                 SampleTable& samp, std::vector<double>& cells,
                 std::vector<std::array<double, 2>>& pos, std::vector<PointInfo>& info,
                 std::vector<std::uint8_t>& boundary) {
  const int M = static_cast<int>(f.rho.size());
  const double dtheta = 2.0 * std::numbers::pi / A;
  auto node = [&](int j, int k) -> std::int32_t {
    if (j == 0) return 0;
    return 1 + (j - 1) * A + ((k % A + A) % A);
  };

  const std::size_t count = 1 + static_cast<std::size_t>(M - 1) * A;
  pos.assign(count, {0.0, 0.0});
  info.assign(count, PointInfo{});
  boundary.assign(count, 0);
  info[0] = {0.0, 0.0, 0.0, 1.0, -1.0};
  for (int j = 1; j < M; ++j) {
    for (int k = 0; k < A; ++k) {
      const double th = dtheta * k;
      const double ph = domain.boundary_radius(th);
      const double r = f.rho[j] * ph;
      const auto id = node(j, k);
      pos[id] = {r * std::cos(th), r * std::sin(th)};
      info[id] = {r, th, f.rho[j], f.one_minus_rho[j], j == M - 1 ? 0.0 : -1.0};
      if (j == M - 1) boundary[id] = 1;
    }
  }

  // Basis values and derivatives for a cell at local (s, t); center-row cells
  // collapse the inner edge onto node 0. dN/dt is returned divided by s for
  // the center row so that N_θ / ρ stays finite.
  struct Local {
    std::int32_t idx[4];
    double N[4], Ns[4], Nt[4];
  };
  auto local = [&](int j, int k, double s, double t) {
    Local L{};
    if (j == 0) {
      L.idx[0] = node(0, 0);
      L.idx[1] = node(1, k);
      L.idx[2] = node(1, k + 1);
      L.idx[3] = node(0, 0);
      const double N[4] = {1.0 - s, s * (1.0 - t), s * t, 0.0};
      const double Ns[4] = {-1.0, 1.0 - t, t, 0.0};
      const double Nt[4] = {0.0, -1.0, 1.0, 0.0};  // divided by s
      std::copy(N, N + 4, L.N);
      std::copy(Ns, Ns + 4, L.Ns);
      std::copy(Nt, Nt + 4, L.Nt);
    } else {
      L.idx[0] = node(j, k);
      L.idx[1] = node(j, k + 1);
      L.idx[2] = node(j + 1, k);
      L.idx[3] = node(j + 1, k + 1);
      const double N[4] = {(1 - s) * (1 - t), (1 - s) * t, s * (1 - t), s * t};
      const double Ns[4] = {-(1 - t), -t, 1 - t, t};
      const double Nt[4] = {-(1 - s), 1 - s, -s, s};
      std::copy(N, N + 4, L.N);
      std::copy(Ns, Ns + 4, L.Ns);
      std::copy(Nt, Nt + 4, L.Nt);
    }
    return L;
  };

  const auto th_rule = detail::gauss_legendre(kAngularGauss);
  const auto st_rule = detail::gauss_legendre(kStiffnessGauss);
  const std::size_t ncells = static_cast<std::size_t>(M - 1) * A;
  cells.assign(ncells, 0.0);

  // Energy quadrature.
  {
    std::vector<std::vector<std::int32_t>> idx(4);
    std::vector<std::vector<double>> gr(4), gt(4);
    std::vector<double> wts;
    for (int j = 0; j + 1 < M; ++j) {
      const double drho = fraction_gap(f, j);
      for (int k = 0; k < A; ++k) {
        for (std::size_t a = 0; a < st_rule.x.size(); ++a) {
          const double s = st_rule.x[a];
          const double rho = f.rho[j] + s * drho;
          for (std::size_t b = 0; b < th_rule.x.size(); ++b) {
            const double t = th_rule.x[b];
            const double th = dtheta * (k + t);
            const double ph = domain.boundary_radius(th);
            const double dph = domain.boundary_slope(th);
            const Local L = local(j, k, s, t);
            for (int c = 0; c < 4; ++c) {
              const double n_rho = L.Ns[c] / drho;
              const double n_th_over_rho =
                  (j == 0) ? L.Nt[c] / (dtheta * drho) : L.Nt[c] / (dtheta * rho);
              idx[c].push_back(L.idx[c]);
              gr[c].push_back(n_rho / ph);
              gt[c].push_back(n_th_over_rho / ph - dph * n_rho / (ph * ph));
            }
            const double w = st_rule.w[a] * th_rule.w[b] * drho * dtheta * rho * ph * ph;
            wts.push_back(w);
          }
        }
      }
    }
    stiff.arity = 4;
    stiff.components = 2;
    stiff.points = wts.size();
    for (int c = 0; c < 4; ++c) stiff.index.insert(stiff.index.end(), idx[c].begin(), idx[c].end());
    for (int c = 0; c < 4; ++c) stiff.dphi.insert(stiff.dphi.end(), gr[c].begin(), gr[c].end());
    for (int c = 0; c < 4; ++c) stiff.dphi.insert(stiff.dphi.end(), gt[c].begin(), gt[c].end());
    stiff.weight = std::move(wts);
  }

  // Point-value quadrature, graded toward the origin row and the boundary row.
  const auto cell_rule = detail::gauss_legendre(kCellGauss);
  const auto sub_rule = detail::gauss_legendre(kSubGauss);
  TableBuilder tb(4);
  for (int j = 0; j + 1 < M; ++j) {
    const double drho = fraction_gap(f, j);
    const auto parts = cell_parts(j == 0, j + 2 == M);
    const auto& rule = parts.size() == 1 ? cell_rule : sub_rule;
    for (int k = 0; k < A; ++k) {
      double measure = 0.0;
      for (const auto& part : parts) {
        const double len = part.t1 - part.t0;
        for (std::size_t g = 0; g < rule.x.size(); ++g) {
          const double s = part.t0 + len * rule.x[g];
          const double one_minus_s = part.s0 + (part.s1 - part.s0) * rule.x[g];
          const double rho = f.rho[j] + s * drho;
          const double om = f.one_minus_rho[j + 1] + one_minus_s * drho;
          for (std::size_t b = 0; b < th_rule.x.size(); ++b) {
            const double t = th_rule.x[b];
            const double th = dtheta * (k + t);
            const double ph = domain.boundary_radius(th);
            const Local L = local(j, k, s, t);
            const double w = rule.w[g] * len * th_rule.w[b] * drho * dtheta * rho * ph * ph;
            measure += w;
            const bool at_center = j == 0 && part.tail && part.t0 == 0.0;
            tb.add(L.idx, L.N, w, PointInfo{rho * ph, th, rho, om, -1.0}, part.tail,
                   at_center ? part.t1 * drho * ph : 0.0,
                   at_center ? static_cast<std::int32_t>(k * th_rule.x.size() + b) : -1);
          }
        }
      }
      cells[static_cast<std::size_t>(j) * A + k] = measure;
    }
  }
  samp = tb.finish();
}

}  // namespace

MeshPtr build_mesh(const Domain& domain, int resolution, double grading, GradeToward toward,
                   int angular) {
  if (resolution < 8) throw Error(ErrorKind::Parameter, "mesh resolution must be >= 8");
  if (!(grading >= 1.0) || !std::isfinite(grading))
    throw Error(ErrorKind::Parameter, "mesh grading must be a finite real >= 1");

  auto mesh = std::make_shared<Mesh>();
  mesh->domain_ = domain;
  mesh->radial_nodes_ = resolution;
  mesh->grading_ = grading;
  mesh->toward_ = toward;
  const GradedFractions f = graded_fractions(resolution, grading, toward);

  if (domain.is_ball()) {
    mesh->kind_ = Mesh::Kind::Radial;
    mesh->angular_nodes_ = 1;
    build_radial(*mesh, domain.ball(), f, mesh->stiffness_, mesh->sampling_,
                 mesh->cell_measure_, mesh->positions_, mesh->node_info_, mesh->boundary_);
  } else {
    const int K = static_cast<int>(domain.star().phi.size());
    if (angular < 8) throw Error(ErrorKind::Parameter, "angular resolution must be >= 8");
    const int A = ((angular + K - 1) / K) * K;
    mesh->kind_ = Mesh::Kind::Polar;
    mesh->angular_nodes_ = A;
    build_polar(domain, f, A, mesh->stiffness_, mesh->sampling_, mesh->cell_measure_,
                mesh->positions_, mesh->node_info_, mesh->boundary_);
  }

  // Lumped mass from the point-value quadrature.
  const auto& s = mesh->sampling_;
  mesh->lumped_mass_.assign(mesh->node_info_.size(), 0.0);
  for (int a = 0; a < s.arity; ++a)
    for (std::size_t q = 0; q < s.points; ++q)
      mesh->lumped_mass_[s.index[a * s.points + q]] += s.weight[q] * s.phi[a * s.points + q];
  return mesh;
}

}  // namespace hardy

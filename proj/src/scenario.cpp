#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "hardy/errors.hpp"
#include "hardy/evolution.hpp"
#include "hardy/fuzz.hpp"
#include "hardy/scenario.hpp"

namespace hardy {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kHardyFloorTol = 1e-3;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// CSV with the resolved config echoed as '# ' comment lines.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const RunConfig& cfg, std::initializer_list<const char*> columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
    std::istringstream lines(cfg.resolved_json);
    for (std::string line; std::getline(lines, line);) out_ << "# " << line << '\n';
    bool first = true;
    for (const char* c : columns) {
      out_ << (first ? "" : ",") << c;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << fmt(v);
      first = false;
    }
    out_ << '\n';
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// Runs body(k) for k in [0, count) on up to `workers` threads; rethrows the
// first failure in index order.
template <class F>
void parallel_for(std::size_t count, int workers, F&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        body(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min<std::size_t>(workers, count));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

MeshPtr make_mesh(const RunConfig& cfg) {
  return build_mesh(cfg.domain, cfg.mesh.resolution, cfg.mesh.grading,
                    cfg.mesh.toward.value_or(natural_grading(cfg.potential.kind)), cfg.mesh.angular);
}

GridFunction scaled_to(const GridFunction& u, double scale) {
  const double m = u.max_abs();
  if (m == 0.0) throw Error(ErrorKind::Parameter, "initial profile vanishes on the mesh");
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x = std::abs(x) * scale / m;
  return GridFunction(u.mesh(), std::move(v));
}

GridFunction initial_profile(const RunConfig& cfg, const MeshPtr& mesh, TruncationLevel N) {
  const auto& s = cfg.u0;
  if (s.profile == "distance") {
    auto d = distance_profile(mesh);
    std::vector<double> v(d.values().begin(), d.values().end());
    for (double& x : v) x *= s.scale;
    return GridFunction(mesh, std::move(v));
  }
  if (s.profile == "bump") {
    // Gaussian centered at (center, 0), tapered to zero at the boundary.
    return interpolate(mesh, [&](std::array<double, 2> x, const PointInfo& info) {
      const double dx = x[0] - s.center, dy = x[1];
      const double dist = info.dist >= 0.0 ? info.dist : distance_to_boundary(mesh->domain(), x);
      return s.scale * std::exp(-(dx * dx + dy * dy) / (2.0 * s.width * s.width)) * std::min(1.0, dist / s.width);
    });
  }
  if (s.profile == "eigenfunction") {
    const auto e = first_eigenpair(cfg.potential, N, cfg.potential.p, mesh, cfg.eigen_tol,
                                   EigenOptions{.delta = cfg.delta});
    return scaled_to(e.eigfun, s.scale);
  }
  const auto e = first_eigenpair(Weight::uniform(mesh), 2.0, cfg.eigen_tol);
  return scaled_to(e.eigfun, s.scale);
}

json eigen_json(double N, const EigenPair& e) {
  return {{"N", N},
          {"lambda", e.lambda},
          {"residual", e.residual},
          {"iterations", e.iterations},
          {"converged", e.converged}};
}

void write_nodal(const fs::path& path, const RunConfig& cfg, const GridFunction& u) {
  CsvFile f(path, cfg, {"node", "x", "y", "value"});
  const auto& mesh = *u.mesh();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto x = mesh.position(i);
    f.row({static_cast<double>(i), x[0], x[1], u[i]});
  }
}

struct Result {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
  void raise(int code, const std::string& why) {
    exit_code = std::max(exit_code, code);
    messages.push_back(why);
  }
};

// ---- eigen / sweep-N -------------------------------------------------------

void run_eigen(const RunConfig& cfg, const fs::path& dir, ScenarioOutcome& out, Result& res,
               json& summary) {
  const auto mesh = make_mesh(cfg);
  const double C = optimal_constant(cfg.potential);
  const bool sweep = cfg.scenario == ScenarioKind::SweepN;

  std::vector<EigenPair> pairs(cfg.N.size());
  parallel_for(cfg.N.size(), cfg.workers, [&](std::size_t k) {
    pairs[k] = first_eigenpair(cfg.potential, TruncationLevel(cfg.N[k]), cfg.potential.p, mesh,
                               cfg.eigen_tol, EigenOptions{.delta = cfg.delta});
    if (sweep) write_nodal(dir / ("eigfun_" + std::to_string(k) + ".csv"), cfg, pairs[k].eigfun);
  });
  if (sweep)
    for (std::size_t k = 0; k < cfg.N.size(); ++k) out.files.push_back("eigfun_" + std::to_string(k) + ".csv");
  else
    write_nodal(dir / "eigfun.csv", cfg, pairs.front().eigfun), out.files.push_back("eigfun.csv");

  const std::string name = sweep ? "sweep_N.csv" : "eigen.csv";
  {
    CsvFile f(dir / name, cfg, {"N", "lambda", "residual", "iterations", "converged"});
    for (std::size_t k = 0; k < pairs.size(); ++k)
      f.row({cfg.N[k], pairs[k].lambda, pairs[k].residual, static_cast<double>(pairs[k].iterations),
             pairs[k].converged ? 1.0 : 0.0});
  }
  out.files.push_back(name);

  json rows = json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    rows.push_back(eigen_json(cfg.N[k], pairs[k]));
    if (!pairs[k].converged) res.raise(kExitSolver, "eigen solve for N=" + fmt(cfg.N[k]) + " did not converge");
    if (pairs[k].lambda < C - kHardyFloorTol)
      res.raise(kExitInvariant, "lambda_1N = " + fmt(pairs[k].lambda) + " below the Hardy floor C = " + fmt(C));
  }
  // λ_{1N} is nonincreasing in N.
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.N[a] < cfg.N[b]; });
  bool monotone = true;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& lo = pairs[order[k - 1]];
    const auto& hi = pairs[order[k]];
    if (hi.lambda > lo.lambda * (1.0 + 1e-8) + 1e-12) monotone = false;
  }
  if (!monotone) res.raise(kExitInvariant, "lambda_1N increases with N");
  summary["C"] = C;
  summary["eigenpairs"] = rows;
  summary["nonincreasing_in_N"] = monotone;
}

// ---- evolve / sweep-mu -----------------------------------------------------

struct EvolveShared {
  MeshPtr mesh;
  TruncationLevel N{1.0};
  GridFunction u0;
  double C = 0.0;
  std::optional<double> lambda;
};

json run_one_evolution(const RunConfig& cfg, const EvolveShared& sh, double mu, const fs::path& trace_path,
                       Result& res) {
  const double p = cfg.potential.p;
  json s;
  s["mu"] = mu;
  s["mu_over_C"] = mu / sh.C;
  if (sh.lambda) s["lambda_1N"] = *sh.lambda;

  // A sub-solution exists for p > 2 and μ > λ_{1N}.
  std::optional<Subsolution> sub;
  double steady_residual_value = 0.0;
  if (cfg.subsolution && p > 2.0 && sh.lambda && mu > *sh.lambda) {
    try {
      const auto sp = steady_profile_solve(cfg.potential, sh.N, p, mu, sh.mesh,
                                           SteadyOptions{.eigen_tol = cfg.eigen_tol});
      steady_residual_value = sp.residual;
      const double start = cfg.subsolution_eps * sh.u0.max_abs() / sp.X.max_abs();
      sub = build_subsolution(sp.X, start, p, sh.u0);
      s["subsolution"] = {{"epsilon", sub->T0},
                          {"granularity", sub->granularity},
                          {"t_max", sub->t_max},
                          {"steady_residual", sp.residual},
                          {"steady_iterations", sp.iterations}};
    } catch (const Error& e) {
      s["subsolution"] = {{"error", e.what()}};
      res.raise(e.kind() == ErrorKind::Convergence ? kExitSolver : kExitOk, e.what());
    }
  }

  EvolutionConfig ec;
  ec.mu = mu;
  ec.p = p;
  ec.pot = cfg.potential;
  ec.N = sh.N;
  ec.u0 = sh.u0;
  ec.t_end = cfg.t_end;
  ec.dt0 = cfg.dt0;
  ec.blow_threshold = cfg.blow_threshold;
  ec.dt_min = cfg.dt_min;
  ec.delta = cfg.delta;

  std::optional<ComparisonReport> cmp;
  const double base_tol = 1e-6 * sh.u0.max_abs();
  StepObserver observer;
  if (sub) {
    cmp = comparison_check({sh.u0}, {0.0}, *sub, 0.9 * sub->t_max, base_tol, steady_residual_value);
    observer = [&](double t, const GridFunction& u) {
      if (t > 0.9 * sub->t_max) return;
      const auto r = comparison_check({u}, {t}, *sub, 0.9 * sub->t_max, base_tol, steady_residual_value);
      cmp->checked_times += r.checked_times;
      if (r.worst_violation > cmp->worst_violation) {
        cmp->worst_violation = r.worst_violation;
        cmp->worst_time = r.worst_time;
        cmp->worst_node = r.worst_node;
      }
      cmp->holds = cmp->holds && r.holds;
    };
  }
  const auto trace = solve_pheat(ec, observer);

  {
    CsvFile f(trace_path, cfg, {"t", "l2", "linf", "dirichlet_energy", "weighted_norm"});
    for (const auto& r : trace.rows) f.row({r.t, r.l2, r.linf, r.energy, r.weighted});
    f.comment("status: " + std::string(termination_name(trace.status)) + " t_final: " + fmt(trace.t_final));
  }

  s["status"] = std::string(termination_name(trace.status));
  if (trace.status == Termination::BlowUp) s["t_star"] = trace.t_final;
  if (trace.status == Termination::StepUnderflow) {
    s["t_underflow"] = trace.t_final;
    res.raise(kExitSolver, "time step underflow at t = " + fmt(trace.t_final) + ", mu = " + fmt(mu));
  }
  s["t_final"] = trace.t_final;
  s["accepted_steps"] = trace.accepted_steps;
  s["rejected_steps"] = trace.rejected_steps;
  if (sub) s["t_max"] = sub->t_max;

  if (mu < sh.C && !(p < 2.0)) {
    const auto e = energy_estimate_check(ec, trace, sh.C, cfg.energy_tolerance);
    s["energy_estimate"] = {{"lhs", e.lhs}, {"rhs", e.rhs}, {"slack", e.slack}, {"holds", e.holds}};
    if (trace.status == Termination::Completed && !e.holds)
      res.raise(kExitInvariant, "energy estimate violated at mu = " + fmt(mu));
  }
  if (cmp) {
    s["comparison"] = {{"holds", cmp->holds},
                       {"t_limit", 0.9 * sub->t_max},
                       {"worst_violation", cmp->worst_violation},
                       {"worst_time", cmp->worst_time},
                       {"worst_node", cmp->worst_node},
                       {"checked_times", cmp->checked_times}};
    if (!cmp->holds) res.raise(kExitInvariant, "comparison with the sub-solution failed at mu = " + fmt(mu));
  }
  return s;
}

void run_evolve(const RunConfig& cfg, const fs::path& dir, ScenarioOutcome& out, Result& res, json& summary) {
  EvolveShared sh;
  sh.mesh = make_mesh(cfg);
  sh.N = TruncationLevel(cfg.N.front());
  sh.C = optimal_constant(cfg.potential);
  sh.u0 = initial_profile(cfg, sh.mesh, sh.N);

  const bool needs_lambda =
      (cfg.subsolution && cfg.potential.p > 2.0) ||
      std::any_of(cfg.mu.begin(), cfg.mu.end(), [](const MuSpec& m) { return m.unit == MuSpec::Unit::Eigenvalue; });
  if (needs_lambda) {
    const auto e = first_eigenpair(cfg.potential, sh.N, cfg.potential.p, sh.mesh, cfg.eigen_tol,
                                   EigenOptions{.delta = cfg.delta});
    if (!e.converged) res.raise(kExitSolver, "eigen solve for the mu units did not converge");
    sh.lambda = e.lambda;
  }

  std::vector<double> mus;
  for (const auto& m : cfg.mu) mus.push_back(m.unit == MuSpec::Unit::Eigenvalue ? m.factor * *sh.lambda : m.factor);

  const bool sweep = cfg.scenario == ScenarioKind::SweepMu;
  std::vector<json> entries(mus.size());
  std::vector<Result> results(mus.size());
  std::vector<std::string> names(mus.size());
  for (std::size_t k = 0; k < mus.size(); ++k) names[k] = sweep ? "trace_" + std::to_string(k) + ".csv" : "trace.csv";
  parallel_for(mus.size(), cfg.workers,
               [&](std::size_t k) { entries[k] = run_one_evolution(cfg, sh, mus[k], dir / names[k], results[k]); });

  json runs = json::array();
  for (std::size_t k = 0; k < mus.size(); ++k) {
    entries[k]["trace"] = names[k];
    out.files.push_back(names[k]);
    for (const auto& m : results[k].messages) res.messages.push_back(m);
    res.exit_code = std::max(res.exit_code, results[k].exit_code);
    runs.push_back(entries[k]);
  }
  summary["C"] = sh.C;
  if (sweep) {
    summary["runs"] = runs;
  } else {
    for (auto& [k, v] : runs.front().items()) summary[k] = v;
  }
}

// ---- potential-dump / hardy-fuzz -------------------------------------------

void run_dump(const RunConfig& cfg, const fs::path& dir, ScenarioOutcome& out, json& summary) {
  const auto mesh = make_mesh(cfg);
  const auto field = sample_potential(cfg.potential, *mesh);
  const double N = cfg.N.front();
  CsvFile f(dir / "potential.csv", cfg, {"node", "x", "y", "W", "W_N"});
  for (std::size_t i = 0; i < mesh->size(); ++i) {
    const auto x = mesh->position(i);
    f.row({static_cast<double>(i), x[0], x[1], field.nodes[i], std::min(N, field.nodes[i])});
  }
  out.files.push_back("potential.csv");
  summary["C"] = optimal_constant(cfg.potential);
  summary["nodes"] = mesh->size();
  summary["N"] = N;
}

void run_fuzz(const RunConfig& cfg, const fs::path& dir, ScenarioOutcome& out, Result& res, json& summary) {
  const auto mesh = make_mesh(cfg);
  const double C = optimal_constant(cfg.potential);
  const auto r = hardy_fuzz(mesh, cfg.potential, cfg.fuzz_samples, cfg.seed, cfg.fuzz_tolerance, cfg.workers);
  {
    CsvFile f(dir / "fuzz.csv", cfg, {"sample", "quotient", "quadrature_converged"});
    for (std::size_t k = 0; k < r.quotients.size(); ++k)
      f.row({static_cast<double>(k), r.quotients[k], static_cast<double>(r.quadrature_converged[k])});
  }
  out.files.push_back("fuzz.csv");
  const auto unresolved = std::count(r.quadrature_converged.begin(), r.quadrature_converged.end(), 0);
  summary["C"] = C;
  summary["samples"] = cfg.fuzz_samples;
  summary["min_quotient"] = r.min_quotient;
  summary["violations"] = r.violations;
  summary["unresolved_quadrature"] = unresolved;
  if (r.violations > 0)
    res.raise(kExitInvariant, std::to_string(r.violations) + " fields below the Hardy floor C - " + fmt(cfg.fuzz_tolerance));
}

}  // namespace

ScenarioOutcome run_scenario(const RunConfig& cfg) {
  ScenarioOutcome out;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + cfg.output_dir + "': " + ec.message());

  json summary;
  summary["scenario"] = std::string(scenario_name(cfg.scenario));
  summary["seed"] = cfg.seed;
  summary["config"] = json::parse(cfg.resolved_json);
  Result res;
  try {
    switch (cfg.scenario) {
      case ScenarioKind::Eigen:
      case ScenarioKind::SweepN:
        run_eigen(cfg, dir, out, res, summary);
        break;
      case ScenarioKind::Evolve:
      case ScenarioKind::SweepMu:
        run_evolve(cfg, dir, out, res, summary);
        break;
      case ScenarioKind::PotentialDump:
        run_dump(cfg, dir, out, summary);
        break;
      case ScenarioKind::HardyFuzz:
        run_fuzz(cfg, dir, out, res, summary);
        break;
    }
  } catch (const Error& e) {
    const bool config = e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Parameter ||
                        e.kind() == ErrorKind::Domain;
    res.raise(config ? kExitConfig : kExitSolver, e.what());
  }

  summary["exit_code"] = res.exit_code;
  summary["messages"] = res.messages;
  write_json(dir / "summary.json", summary);
  out.files.push_back("summary.json");
  out.exit_code = res.exit_code;
  for (const auto& m : res.messages) out.message += (out.message.empty() ? "" : "; ") + m;
  return out;
}

}  // namespace hardy

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hardy/evolution.hpp"
#include "hardy/scenario.hpp"
#include "hardy/variational.hpp"

using namespace hardy;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// Runs a scenario into root/name and returns its summary.
json run(const fs::path& root, const std::string& name, const std::string& text,
         std::vector<std::pair<std::string, std::string>> overrides = {}) {
  const auto dir = root / name;
  fs::remove_all(dir);
  overrides.emplace_back("output_dir", json(dir.string()).dump());
  const auto cfg = parse_config_text(text, overrides);
  const auto out = run_scenario(cfg);
  auto s = json::parse(slurp(dir / "summary.json"));
  s["exit_code"] = out.exit_code;
  return s;
}

// Numeric columns of a CSV, comment lines and header skipped.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(std::move(r));
  }
  return rows;
}

const fs::path kRoot = fs::temp_directory_path() / "hardy_acceptance";

// ---- scenarios (shared by the criteria and the determinism rerun) ----------

struct FuzzCase {
  std::string name, text;
};

std::vector<FuzzCase> fuzz_cases() {
  const std::string star = R"("domain": {"kind": "star", "phi_cos": {"samples": 16, "amplitude": 0.2}},
                              "mesh": {"resolution": 128, "angular": 64})";
  return {
      {"fuzz_i_p2", R"({"scenario": "hardy-fuzz", "kernel": "i", "p": 2, "seed": 11})"},
      {"fuzz_i_p3", R"({"scenario": "hardy-fuzz", "kernel": "i", "p": 3, "seed": 12})"},
      {"fuzz_ii_p3", R"({"scenario": "hardy-fuzz", "kernel": "ii", "p": 3, "seed": 13})"},
      {"fuzz_iii_p2", R"({"scenario": "hardy-fuzz", "kernel": "iii", "p": 2, "seed": 14})"},
      {"fuzz_iv_p3", R"({"scenario": "hardy-fuzz", "kernel": "iv", "p": 3, "seed": 15, )" + star + "}"},
  };
}

const char* kSweepN = R"({"scenario": "sweep-N", "kernel": "i", "p": 2, "N": [10, 100, 1000, 10000],
                          "eigen_tol": 1e-10})";
const char* kEnergy = R"({"scenario": "evolve", "kernel": "i", "p": 3, "mu": "0.8C", "N": 1000,
                          "u0": {"profile": "distance"}, "t_end": 5, "dt0": 1e-3})";
const char* kDichotomy = R"({"scenario": "sweep-mu", "kernel": "i", "p": 3, "mu": ["0.5C", "1.2L"], "N": 1000,
                             "u0": {"profile": "distance"}, "t_end": 10, "dt0": 1e-3})";

// ---- criteria ----------------------------------------------------------------

Verdict hardy_floor(const fs::path& root, int workers) {
  std::string d;
  bool ok = true;
  for (const auto& c : fuzz_cases()) {
    const auto s = run(root, c.name, c.text, {{"workers", std::to_string(workers)}});
    const double C = s["C"], q = s["min_quotient"];
    const std::size_t v = s["violations"];
    ok = ok && s["exit_code"] == 0 && v == 0 && q >= C - 1e-3;
    d += c.name + " min " + num(q) + " (C " + num(C) + ", " + std::to_string(v) + " below); ";
  }
  return {ok, d};
}

Verdict eigenvalue_trends() {
  const auto s = run(kRoot / "a", "sweep_N", kSweepN);
  std::vector<double> lam;
  bool converged = true;
  for (const auto& e : s["eigenpairs"]) {
    lam.push_back(e["lambda"]);
    converged = converged && e["converged"].get<bool>();
  }
  bool monotone = lam.size() == 4, floor = true;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    floor = floor && lam[k] >= 0.25 - 1e-3;
    if (k > 0) monotone = monotone && lam[k] <= lam[k - 1];
  }
  const bool near = !lam.empty() && lam.back() <= 0.30;
  std::string d = "lambda_1N =";
  for (double l : lam) d += " " + num(l);
  d += std::string("; converged ") + (converged ? "yes" : "no") + ", nonincreasing " + (monotone ? "yes" : "no") +
       ", floor " + (floor ? "yes" : "no") + ", lambda(1e4) <= 0.30 " + (near ? "yes" : "no");
  return {converged && monotone && floor && near, d};
}

Verdict gradient_consistency() {
  const auto disk = Domain::ball(2, 1.0);
  const auto m = build_mesh(disk, 400, 2.0);
  const auto mass = m->lumped_mass();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto field = [&] {
    std::vector<double> v(m->size());
    for (auto& x : v) x = u(rng);
    return GridFunction(m, std::move(v));
  };
  auto shifted = [](const GridFunction& a, double h, const GridFunction& b) {
    std::vector<double> w(a.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = a[i] + h * b[i];
    return GridFunction(a.mesh(), std::move(w));
  };
  double worst = 0.0;
  int count = 0;
  for (double p : {2.0, 3.0, 4.0}) {
    for (int t = 0; t < 50; ++t, ++count) {
      const auto f = field(), dir = field();
      const auto L = p_laplacian_apply(f, p);
      double analytic = 0.0;
      for (std::size_t i = 0; i < m->size(); ++i) analytic += -p * mass[i] * L[i] * dir[i];
      const double h = 1e-5;
      const double fd = (dirichlet_energy(shifted(f, h, dir), p) - dirichlet_energy(shifted(f, -h, dir), p)) / (2 * h);
      worst = std::max(worst, std::abs(fd - analytic) / std::abs(analytic));
    }
  }
  return {worst <= 1e-6, std::to_string(count) + " fields, worst relative error " + num(worst, 3)};
}

Verdict linear_rate() {
  const double target = 5.7832;
  const auto disk = Domain::ball(2, 1.0);
  const auto m = build_mesh(disk, 400, 2.0);
  EvolutionConfig c;
  c.p = 2.0;
  c.mu = 0.0;
  c.pot = make_potential(KernelKind::DistPower, 2.0, disk);
  c.uniform_weight = true;
  c.u0 = first_eigenpair(Weight::uniform(m), 2.0, 1e-10).eigfun;
  c.t_end = 1.5 / target;
  c.dt0 = 1e-4;
  const auto trace = solve_pheat(c);
  // least squares on log ‖u‖ over the first e-folding
  const double l0 = trace.rows.front().l2;
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (const auto& r : trace.rows) {
    if (r.l2 < l0 / std::exp(1.0)) break;
    const double y = std::log(r.l2);
    st += r.t, sy += y, stt += r.t * r.t, sty += r.t * y, ++n;
  }
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  const double rate = -slope;
  const double err = std::abs(rate - target) / target;
  return {trace.status == Termination::Completed && n > 10 && err <= 0.02,
          "fitted rate " + num(rate) + " over " + std::to_string(n) + " samples, relative error " + num(err, 3)};
}

Verdict energy_estimate() {
  const auto s = run(kRoot / "a", "energy", kEnergy);
  const auto& e = s["energy_estimate"];
  const bool ok = s["exit_code"] == 0 && s["status"] == "completed" && e["holds"].get<bool>();
  return {ok, "status " + s["status"].get<std::string>() + ", lhs " + num(e["lhs"]) + " vs rhs " + num(e["rhs"]) +
                  " (5% slack)"};
}

json dichotomy_summary;

Verdict dichotomy() {
  dichotomy_summary = run(kRoot / "a", "dichotomy", kDichotomy, {{"workers", "2"}});
  const auto& runs = dichotomy_summary["runs"];
  const auto& lo = runs[0];
  const auto& hi = runs[1];
  const auto rows = csv_rows(kRoot / "a" / "dichotomy" / "trace_0.csv");
  bool decreasing = !rows.empty();
  for (std::size_t k = 1; k < rows.size(); ++k) decreasing = decreasing && rows[k][1] <= rows[k - 1][1];
  const bool reached = !rows.empty() && rows.back()[0] >= 10.0 - 1e-9;
  const bool blow = hi["status"] == "blow-up" && std::isfinite(hi["t_star"].get<double>());
  const bool ok = lo["status"] == "completed" && decreasing && reached && blow;
  std::string d = "0.5C: " + lo["status"].get<std::string>() + ", L2 nonincreasing " + (decreasing ? "yes" : "no") +
                  " to t = " + num(rows.empty() ? 0.0 : rows.back()[0]) + "; 1.2 lambda_1N (" +
                  num(hi["mu"]) + "): " + hi["status"].get<std::string>();
  if (hi.contains("t_star")) d += " at t* = " + num(hi["t_star"]);
  return {ok, d};
}

Verdict subsolution() {
  const auto& hi = dichotomy_summary["runs"][1];
  if (!hi.contains("subsolution") || !hi["subsolution"].contains("epsilon"))
    return {false, "no sub-solution was built"};
  const auto& cmp = hi["comparison"];
  const double t_max = hi["t_max"];
  const bool holds = cmp["holds"];
  const bool early = hi.contains("t_star") && hi["t_star"].get<double>() <= 1.1 * t_max;
  std::string d = "epsilon " + num(hi["subsolution"]["epsilon"]) + ", t_max " + num(t_max) + ", comparison " +
                  (holds ? "holds" : "fails") + " on " + std::to_string(cmp["checked_times"].get<int>()) +
                  " times up to " + num(cmp["t_limit"]) + " (worst v - u " + num(cmp["worst_violation"], 3) + ")";
  if (hi.contains("t_star")) d += ", t* / t_max = " + num(hi["t_star"].get<double>() / t_max);
  return {holds && early, d};
}

// RK4 on T' = T^{p-1}, step shrinking as T grows.
double integrate_T(double T0, double p, double t_end) {
  double t = 0.0, T = T0;
  auto f = [p](double y) { return std::pow(y, p - 1.0); };
  while (t < t_end) {
    const double h = std::min(t_end - t, 2e-4 / std::pow(T, p - 2.0));
    const double k1 = f(T), k2 = f(T + 0.5 * h * k1), k3 = f(T + 0.5 * h * k2), k4 = f(T + h * k3);
    T += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return T;
}

Verdict closed_form() {
  double worst = 0.0;
  for (double p : {3.0, 4.0}) {
    for (double T0 : {0.5, 1.0}) {
      const double ts = blow_up_time(T0, p);
      for (int k = 1; k <= 90; ++k) {
        const double t = 0.01 * k * ts;
        worst = std::max(worst, std::abs(integrate_T(T0, p, t) - T_closed_form(T0, p, t)));
      }
    }
  }
  const double b = blow_up_time(0.1, 4.0);
  return {worst <= 1e-8 && b == 50.0, "max |T_rk4 - T| " + num(worst, 3) + ", blow_up_time(0.1, 4) = " + num(b, 17)};
}

// Reruns the CSV-producing scenarios with other worker counts and compares bytes.
Verdict determinism() {
  hardy_floor(kRoot / "b", 1);
  run(kRoot / "b", "sweep_N", kSweepN, {{"workers", "4"}});
  run(kRoot / "b", "energy", kEnergy);
  run(kRoot / "b", "dichotomy", kDichotomy, {{"workers", "1"}});
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& e : fs::recursive_directory_iterator(kRoot / "a")) {
    if (e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), kRoot / "a");
    ++compared;
    if (!fs::exists(kRoot / "b" / rel) || slurp(e.path()) != slurp(kRoot / "b" / rel)) differing.push_back(rel.string());
  }
  return {compared > 0 && differing.empty(),
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing.size()) + " differ" +
              (differing.empty() ? "" : " (first: " + differing.front() + ")")};
}

}  // namespace

int main() {
  fs::remove_all(kRoot);
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "hardy floor on random fields", [] { return hardy_floor(kRoot / "a", 4); }},
      {2, "truncated eigenvalue trends", eigenvalue_trends},
      {3, "p-Laplacian gradient consistency", gradient_consistency},
      {4, "linear heat decay rate", linear_rate},
      {5, "energy estimate", energy_estimate},
      {6, "existence / blow-up dichotomy", dichotomy},
      {7, "sub-solution comparison", subsolution},
      {8, "closed-form T vs ODE integration", closed_form},
      {9, "byte-identical reruns", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s [%.1fs] %s\n", c.id, v.pass ? "PASS" : "FAIL", c.name, secs, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}

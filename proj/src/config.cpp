#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "hardy/errors.hpp"
#include "hardy/fuzz.hpp"
#include "hardy/scenario.hpp"

namespace hardy {

using json = nlohmann::ordered_json;

std::string_view scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Eigen:
      return "eigen";
    case ScenarioKind::Evolve:
      return "evolve";
    case ScenarioKind::SweepMu:
      return "sweep-mu";
    case ScenarioKind::SweepN:
      return "sweep-N";
    case ScenarioKind::PotentialDump:
      return "potential-dump";
    case ScenarioKind::HardyFuzz:
      return "hardy-fuzz";
  }
  return "?";
}

std::optional<ScenarioKind> parse_scenario(std::string_view t) {
  for (auto k : {ScenarioKind::Eigen, ScenarioKind::Evolve, ScenarioKind::SweepMu, ScenarioKind::SweepN,
                 ScenarioKind::PotentialDump, ScenarioKind::HardyFuzz})
    if (t == scenario_name(k)) return k;
  return std::nullopt;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::Config, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) fail("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

double number(const json& obj, const char* key, double fallback, const std::string& where = "") {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail("'" + where + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail("'" + where + key + "' must be finite");
  return x;
}

int integer(const json& obj, const char* key, int fallback, const std::string& where = "") {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail("'" + where + key + "' must be an integer");
  return v.get<int>();
}

std::string text(const json& obj, const char* key, const std::string& fallback, const std::string& where = "") {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail("'" + where + key + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(std::string("'") + key + "' must be true or false");
  return v.get<bool>();
}

MuSpec parse_mu(const json& v) {
  MuSpec m;
  if (v.is_number()) {
    m.factor = v.get<double>();
    m.unit = MuSpec::Unit::Absolute;
    m.text = v.dump();
    return m;
  }
  if (!v.is_string()) fail("'mu' entries must be numbers or strings like \"0.9C\" / \"1.2L\"");
  m.text = v.get<std::string>();
  std::string body = m.text;
  if (!body.empty() && (body.back() == 'C' || body.back() == 'L')) {
    m.unit = body.back() == 'C' ? MuSpec::Unit::HardyConstant : MuSpec::Unit::Eigenvalue;
    body.pop_back();
    if (!body.empty() && body.back() == '*') body.pop_back();
    if (body.empty()) body = "1";
  }
  std::size_t used = 0;
  try {
    m.factor = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != body.size() || !std::isfinite(m.factor))
    fail("cannot read mu value \"" + m.text + "\" (expected a number, \"<x>C\" or \"<x>L\")");
  return m;
}

Domain parse_domain(const json& d) {
  const std::string kind = text(d, "kind", "ball", "domain.");
  if (kind == "ball") {
    check_keys(d, "domain", {"kind", "dim", "radius"});
    return Domain::ball(integer(d, "dim", 2, "domain."), number(d, "radius", 1.0, "domain."));
  }
  if (kind != "star") fail("domain.kind must be \"ball\" or \"star\"");
  check_keys(d, "domain", {"kind", "phi", "phi_cos", "convex"});
  std::vector<double> phi;
  if (d.contains("phi")) {
    if (!d.at("phi").is_array()) fail("'domain.phi' must be an array of radii");
    for (const auto& v : d.at("phi")) {
      if (!v.is_number()) fail("'domain.phi' entries must be numbers");
      phi.push_back(v.get<double>());
    }
  } else if (d.contains("phi_cos")) {
    // φ(θ) = base + amplitude·cos(mode·θ) sampled at `samples` angles.
    const auto& c = d.at("phi_cos");
    check_keys(c, "domain.phi_cos", {"samples", "base", "amplitude", "mode"});
    const int K = integer(c, "samples", 64, "domain.phi_cos.");
    const double base = number(c, "base", 1.0, "domain.phi_cos.");
    const double amp = number(c, "amplitude", 0.0, "domain.phi_cos.");
    const int mode = integer(c, "mode", 1, "domain.phi_cos.");
    if (K < 1) fail("'domain.phi_cos.samples' must be positive");
    for (int k = 0; k < K; ++k)
      phi.push_back(base + amp * std::cos(mode * 2.0 * std::numbers::pi * k / K));
  } else {
    fail("star domain needs 'phi' or 'phi_cos'");
  }
  return Domain::star_shaped(std::move(phi), boolean(d, "convex", false));
}

std::optional<GradeToward> parse_toward(const std::string& t) {
  if (t == "auto") return std::nullopt;
  if (t == "boundary") return GradeToward::Boundary;
  if (t == "origin") return GradeToward::Origin;
  if (t == "both") return GradeToward::Both;
  fail("mesh.toward must be one of auto, boundary, origin, both");
}

std::string toward_name(GradeToward g) {
  switch (g) {
    case GradeToward::Boundary:
      return "boundary";
    case GradeToward::Origin:
      return "origin";
    case GradeToward::Both:
      return "both";
  }
  return "?";
}

void set_path(json& root, const std::string& path, const std::string& raw) {
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty() || path.empty()) fail("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) fail("override '" + path + "' descends into a non-object");
    node = &next;
  }
  (*node)[parts.back()] = value;
}

}  // namespace

RunConfig parse_config_text(const std::string& src,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  json j;
  try {
    j = json::parse(src, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config must be a JSON object");
  for (const auto& [k, v] : overrides) set_path(j, k, v);

  check_keys(j, "", {"scenario", "domain", "kernel", "p", "n", "D", "R", "mu", "N", "mesh", "u0",
                     "t_end", "dt0", "blow_threshold", "dt_min", "delta", "eigen_tol", "fuzz_samples",
                     "fuzz_tolerance", "subsolution", "subsolution_eps", "energy_tolerance", "seed",
                     "workers", "output_dir"});

  RunConfig cfg;
  const auto scen = parse_scenario(text(j, "scenario", "eigen"));
  if (!scen) fail("scenario must be one of eigen, evolve, sweep-mu, sweep-N, potential-dump, hardy-fuzz");
  cfg.scenario = *scen;

  cfg.domain = parse_domain(j.contains("domain") ? j.at("domain") : json::object());
  if (j.contains("n") && integer(j, "n", 0) != cfg.domain.dim())
    fail("'n' = " + std::to_string(integer(j, "n", 0)) + " does not match the domain dimension " +
         std::to_string(cfg.domain.dim()));

  const std::string kname = text(j, "kernel", "i");
  const auto kind = parse_kernel(kname);
  if (!kind) fail("kernel must be one of i, ii, iii, iv (or dist-power, dist-log, origin-log, star-hardy)");
  PotentialOptions popt;
  if (j.contains("D")) popt.D = number(j, "D", 0.0);
  if (j.contains("R")) popt.R = number(j, "R", 0.0);
  const double p = number(j, "p", 2.0);
  cfg.potential = make_potential(*kind, p, cfg.domain, popt);
  const double C = optimal_constant(cfg.potential);

  if (j.contains("mu")) {
    const auto& m = j.at("mu");
    if (m.is_array()) {
      for (const auto& v : m) cfg.mu.push_back(parse_mu(v));
    } else {
      cfg.mu.push_back(parse_mu(m));
    }
  }
  for (auto& m : cfg.mu) {
    if (m.unit == MuSpec::Unit::HardyConstant) {
      m.factor *= C;
      m.unit = MuSpec::Unit::Absolute;
    }
  }

  if (j.contains("N")) {
    const auto& n = j.at("N");
    auto take = [&](const json& v) {
      if (!v.is_number()) fail("'N' entries must be numbers");
      cfg.N.push_back(v.get<double>());
    };
    if (n.is_array()) {
      for (const auto& v : n) take(v);
    } else {
      take(n);
    }
  } else {
    cfg.N.push_back(100.0);
  }
  for (double n : cfg.N) TruncationLevel{n};

  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    check_keys(m, "mesh", {"resolution", "grading", "toward", "angular"});
    cfg.mesh.resolution = integer(m, "resolution", cfg.mesh.resolution, "mesh.");
    cfg.mesh.grading = number(m, "grading", cfg.mesh.grading, "mesh.");
    cfg.mesh.toward = parse_toward(text(m, "toward", "auto", "mesh."));
    cfg.mesh.angular = integer(m, "angular", cfg.mesh.angular, "mesh.");
  }
  if (cfg.mesh.resolution < 8) fail("mesh.resolution must be >= 8");
  if (!(cfg.mesh.grading >= 1.0)) fail("mesh.grading must be >= 1");

  if (j.contains("u0")) {
    const auto& u = j.at("u0");
    check_keys(u, "u0", {"profile", "scale", "center", "width"});
    cfg.u0.profile = text(u, "profile", cfg.u0.profile, "u0.");
    cfg.u0.scale = number(u, "scale", cfg.u0.scale, "u0.");
    cfg.u0.center = number(u, "center", cfg.u0.center, "u0.");
    cfg.u0.width = number(u, "width", cfg.u0.width, "u0.");
  }
  const std::set<std::string> profiles{"distance", "bump", "eigenfunction", "laplace-eigenfunction"};
  if (!profiles.count(cfg.u0.profile))
    fail("u0.profile must be one of distance, bump, eigenfunction, laplace-eigenfunction");
  if (!(cfg.u0.width > 0.0)) fail("u0.width must be positive");

  cfg.t_end = number(j, "t_end", cfg.t_end);
  cfg.dt0 = number(j, "dt0", cfg.dt0);
  cfg.blow_threshold = number(j, "blow_threshold", cfg.blow_threshold);
  cfg.dt_min = number(j, "dt_min", cfg.dt_min);
  cfg.delta = number(j, "delta", cfg.delta);
  cfg.eigen_tol = number(j, "eigen_tol", cfg.eigen_tol);
  cfg.fuzz_samples = integer(j, "fuzz_samples", cfg.fuzz_samples);
  cfg.fuzz_tolerance = number(j, "fuzz_tolerance", cfg.fuzz_tolerance);
  cfg.subsolution = boolean(j, "subsolution", cfg.subsolution);
  cfg.subsolution_eps = number(j, "subsolution_eps", cfg.subsolution_eps);
  cfg.energy_tolerance = number(j, "energy_tolerance", cfg.energy_tolerance);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("'seed' must be a nonnegative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.workers = integer(j, "workers", cfg.workers);
  cfg.output_dir = text(j, "output_dir", cfg.output_dir);

  for (auto [name, v] : {std::pair{"t_end", cfg.t_end}, {"dt0", cfg.dt0}, {"blow_threshold", cfg.blow_threshold},
                         {"dt_min", cfg.dt_min}, {"eigen_tol", cfg.eigen_tol}, {"subsolution_eps", cfg.subsolution_eps}})
    if (!(v > 0.0)) fail(std::string("'") + name + "' must be positive");
  if (cfg.delta < 0.0) fail("'delta' must be >= 0");
  if (p < 2.0 && cfg.delta == 0.0 && cfg.scenario != ScenarioKind::PotentialDump &&
      cfg.scenario != ScenarioKind::HardyFuzz)
    fail("1 < p < 2 needs a regularization 'delta' > 0");
  if (cfg.fuzz_samples < 1) fail("'fuzz_samples' must be >= 1");
  if (cfg.workers < 1) fail("'workers' must be >= 1");

  switch (cfg.scenario) {
    case ScenarioKind::Evolve:
      if (cfg.mu.size() != 1) fail("evolve needs exactly one 'mu'");
      if (cfg.N.size() != 1) fail("evolve needs exactly one 'N'");
      break;
    case ScenarioKind::SweepMu:
      if (cfg.mu.empty()) fail("sweep-mu needs a non-empty 'mu' list");
      if (cfg.N.size() != 1) fail("sweep-mu needs exactly one 'N'");
      break;
    default:
      break;
  }

  // Echo of the resolved configuration.
  json r;
  r["scenario"] = std::string(scenario_name(cfg.scenario));
  if (cfg.domain.is_ball()) {
    r["domain"] = {{"kind", "ball"}, {"dim", cfg.domain.dim()}, {"radius", cfg.domain.ball().radius}};
  } else {
    r["domain"] = {{"kind", "star"}, {"phi", cfg.domain.star().phi}, {"convex", cfg.domain.convexity_assumed()}};
  }
  r["kernel"] = std::string(kernel_name(cfg.potential.kind));
  r["p"] = cfg.potential.p;
  r["n"] = cfg.potential.n;
  if (cfg.potential.kind == KernelKind::DistLog) r["D"] = cfg.potential.D;
  if (cfg.potential.kind == KernelKind::OriginLog) r["R"] = cfg.potential.R;
  if (cfg.potential.kind == KernelKind::StarHardy) r["m"] = cfg.potential.m;
  r["C"] = C;
  json mus = json::array();
  for (const auto& m : cfg.mu) {
    if (m.unit == MuSpec::Unit::Absolute)
      mus.push_back(m.factor);
    else
      mus.push_back(m.text);
  }
  r["mu"] = mus;
  r["N"] = cfg.N;
  r["mesh"] = {{"resolution", cfg.mesh.resolution},
               {"grading", cfg.mesh.grading},
               {"toward", toward_name(cfg.mesh.toward.value_or(natural_grading(cfg.potential.kind)))},
               {"angular", cfg.mesh.angular}};
  r["u0"] = {{"profile", cfg.u0.profile}, {"scale", cfg.u0.scale}, {"center", cfg.u0.center}, {"width", cfg.u0.width}};
  r["t_end"] = cfg.t_end;
  r["dt0"] = cfg.dt0;
  r["blow_threshold"] = cfg.blow_threshold;
  r["dt_min"] = cfg.dt_min;
  r["delta"] = cfg.delta;
  r["eigen_tol"] = cfg.eigen_tol;
  r["fuzz_samples"] = cfg.fuzz_samples;
  r["fuzz_tolerance"] = cfg.fuzz_tolerance;
  r["subsolution"] = cfg.subsolution;
  r["subsolution_eps"] = cfg.subsolution_eps;
  r["energy_tolerance"] = cfg.energy_tolerance;
  r["seed"] = cfg.seed;
  r["caveats"] = cfg.potential.caveats;
  cfg.resolved_json = r.dump(2);
  return cfg;
}

RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

}  // namespace hardy

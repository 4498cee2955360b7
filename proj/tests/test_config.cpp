#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hardy/errors.hpp"
#include "hardy/scenario.hpp"

using namespace hardy;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hardy_cfg_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config_error(const std::string& text,
                         const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  try {
    parse_config_text(text, overrides);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

// λ column of an eigen CSV.
std::vector<double> lambdas(const fs::path& csv) {
  std::ifstream in(csv);
  std::vector<double> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto a = line.find(','), b = line.find(',', a + 1);
    out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return out;
}

}  // namespace

TEST_CASE("minimal eigen config gets defaults") {
  const auto cfg = parse_config_text(R"({"scenario": "eigen", "kernel": "i", "p": 2, "N": 100})");
  CHECK(cfg.scenario == ScenarioKind::Eigen);
  CHECK(cfg.domain.is_ball());
  CHECK(cfg.domain.dim() == 2);
  CHECK(cfg.potential.kind == KernelKind::DistPower);
  CHECK(cfg.N == std::vector<double>{100.0});
  CHECK(cfg.mesh.resolution == 400);
  CHECK(cfg.seed == 1);
  const auto echo = nlohmann::json::parse(cfg.resolved_json);
  CHECK(echo["C"].get<double>() == doctest::Approx(0.25));
  CHECK(echo["mesh"]["toward"] == "boundary");
  CHECK(echo["seed"] == 1);
}

TEST_CASE("parameter regime violations are reported") {
  const auto msg = config_error(R"({"kernel": "iv", "p": 2, "domain": {"kind": "ball", "dim": 2}})");
  CHECK(msg.find("p > n") != std::string::npos);
  CHECK(config_error(R"({"kernel": "iii", "p": 3})").find("p = n") != std::string::npos);
  CHECK(config_error(R"({"kernel": "ii", "p": 2})").find("p > n") != std::string::npos);
}

TEST_CASE("mu in units of C is resolved at parse time") {
  const auto cfg = parse_config_text(R"({"scenario": "evolve", "p": 3, "mu": "1.2C"})");
  REQUIRE(cfg.mu.size() == 1);
  CHECK(cfg.mu[0].unit == MuSpec::Unit::Absolute);
  CHECK(cfg.mu[0].factor == doctest::Approx(1.2 * 8.0 / 27.0).epsilon(1e-15));
  const auto echo = nlohmann::json::parse(cfg.resolved_json);
  CHECK(echo["mu"][0].is_number());

  const auto sweep = parse_config_text(R"({"scenario": "sweep-mu", "p": 3, "mu": ["0.5C", 0.1, "1.2L"]})");
  REQUIRE(sweep.mu.size() == 3);
  CHECK(sweep.mu[1].factor == 0.1);
  CHECK(sweep.mu[2].unit == MuSpec::Unit::Eigenvalue);
  CHECK(sweep.mu[2].factor == doctest::Approx(1.2));
  CHECK_FALSE(config_error(R"({"mu": "abcC"})").empty());
}

TEST_CASE("invalid documents are rejected with the offending key") {
  CHECK(config_error(R"({"kernal": "i"})").find("kernal") != std::string::npos);
  CHECK(config_error(R"({"mesh": {"resolutoin": 10}})").find("mesh.resolutoin") != std::string::npos);
  CHECK(config_error(R"({"p": "three"})").find("'p'") != std::string::npos);
  CHECK(config_error(R"({"scenario": "simulate"})").find("scenario") != std::string::npos);
  CHECK(config_error(R"({"N": 0})").find("positive") != std::string::npos);
  CHECK(config_error(R"({"scenario": "evolve"})").find("mu") != std::string::npos);
  CHECK_FALSE(config_error("{not json").empty());
  CHECK(config_error(R"({"n": 3})").find("dimension") != std::string::npos);
  CHECK_FALSE(config_error(R"({"domain": {"kind": "star"}})").empty());
}

TEST_CASE("dotted overrides") {
  const auto cfg = parse_config_text(R"({"mesh": {"resolution": 100}})",
                                     {{"mesh.grading", "3"}, {"kernel", "iii"}, {"N", "[10, 20]"}, {"seed", "9"}});
  CHECK(cfg.mesh.resolution == 100);
  CHECK(cfg.mesh.grading == 3.0);
  CHECK(cfg.potential.kind == KernelKind::OriginLog);
  CHECK(cfg.N == std::vector<double>{10.0, 20.0});
  CHECK(cfg.seed == 9);
  CHECK(config_error("{}", {{"mesh.bogus", "1"}}).find("mesh.bogus") != std::string::npos);
}

TEST_CASE("star domains from samples or a cosine profile") {
  const auto a = parse_config_text(R"({"domain": {"kind": "star", "phi": [1, 1.1, 1, 0.9, 1, 1.1, 1, 0.9]}})");
  CHECK(a.domain.star().phi.size() == 8);
  const auto b = parse_config_text(
      R"({"kernel": "iv", "p": 3, "domain": {"kind": "star", "phi_cos": {"samples": 16, "amplitude": 0.2}}})");
  CHECK(b.domain.star().phi[0] == doctest::Approx(1.2));
  CHECK(nlohmann::json::parse(b.resolved_json)["mesh"]["toward"] == "both");
}

TEST_CASE("sweep-N writes nonincreasing eigenvalues, reproducibly") {
  const auto dir = scratch("sweepN");
  auto cfg = parse_config_text(R"({"scenario": "sweep-N", "N": [10, 100, 1000], "mesh": {"resolution": 150}})",
                               {{"output_dir", "\"" + dir.string() + "\""}, {"workers", "3"}});
  const auto out = run_scenario(cfg);
  CHECK(out.exit_code == kExitOk);
  const auto lam = lambdas(dir / "sweep_N.csv");
  REQUIRE(lam.size() == 3);
  CHECK(lam[1] <= lam[0]);
  CHECK(lam[2] <= lam[1]);
  const auto first = slurp(dir / "sweep_N.csv");
  CHECK(first.rfind("# {", 0) == 0);
  CHECK(first.find("\"seed\": 1") != std::string::npos);

  cfg.workers = 1;
  CHECK(run_scenario(cfg).exit_code == kExitOk);
  CHECK(slurp(dir / "sweep_N.csv") == first);
  fs::remove_all(dir);
}

TEST_CASE("sweep-mu reproduces the dichotomy") {
  const auto dir = scratch("sweepmu");
  const auto cfg = parse_config_text(
      R"({"scenario": "sweep-mu", "p": 3, "mu": ["0.5C", "0.9C", "1.2L"], "N": 1000,
          "mesh": {"resolution": 150}, "t_end": 3, "dt0": 0.01, "workers": 3})",
      {{"output_dir", "\"" + dir.string() + "\""}});
  const auto out = run_scenario(cfg);
  CHECK(out.exit_code == kExitOk);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary["runs"].size() == 3);
  CHECK(summary["runs"][0]["status"] == "completed");
  CHECK(summary["runs"][1]["status"] == "completed");
  CHECK(summary["runs"][2]["status"] == "blow-up");
  CHECK(summary["runs"][2].contains("t_star"));
  CHECK(summary["runs"][2].contains("t_max"));
  for (int k = 0; k < 3; ++k) {
    const auto trace = slurp(dir / ("trace_" + std::to_string(k) + ".csv"));
    CHECK(trace.find("t,l2,linf,dirichlet_energy,weighted_norm") != std::string::npos);
    CHECK(trace.find("# status: ") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("hardy-fuzz and potential dump") {
  const auto dir = scratch("fuzz");
  const auto cfg = parse_config_text(R"({"scenario": "hardy-fuzz", "kernel": "iii", "p": 2, "fuzz_samples": 60})",
                                     {{"output_dir", "\"" + dir.string() + "\""}});
  CHECK(run_scenario(cfg).exit_code == kExitOk);
  const auto s = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(s["violations"] == 0);
  CHECK(s["min_quotient"].get<double>() >= 0.25 - 1e-3);

  const auto dump = parse_config_text(R"({"scenario": "potential-dump", "kernel": "i", "p": 3, "N": 50,
                                           "mesh": {"resolution": 20}})",
                                      {{"output_dir", "\"" + dir.string() + "\""}});
  CHECK(run_scenario(dump).exit_code == kExitOk);
  const auto csv = slurp(dir / "potential.csv");
  CHECK(csv.find("node,x,y,W,W_N") != std::string::npos);
  CHECK(csv.find("19,1,0,inf,50") != std::string::npos);
  fs::remove_all(dir);
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hardy/geometry.hpp"
#include "hardy/potentials.hpp"

namespace hardy {

enum class ScenarioKind { Eigen, Evolve, SweepMu, SweepN, PotentialDump, HardyFuzz };

std::string_view scenario_name(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario(std::string_view text);

/// μ as written in a config: absolute, a multiple of C (resolved at parse
/// time) or a multiple of λ_{1N} (resolved when the eigenvalue is known).
struct MuSpec {
  enum class Unit { Absolute, HardyConstant, Eigenvalue };
  double factor = 0.0;
  Unit unit = Unit::Absolute;
  std::string text;
};

struct MeshSpec {
  int resolution = 400;
  double grading = 2.0;
  std::optional<GradeToward> toward;  // nullopt: chosen from the kernel
  int angular = 64;
};

struct U0Spec {
  std::string profile = "distance";  // distance | bump | eigenfunction | laplace-eigenfunction
  double scale = 1.0;
  double center = 0.0;  // bump center (x coordinate / radius)
  double width = 0.25;  // bump width
};

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::Eigen;
  Domain domain = Domain::ball(2, 1.0);
  Potential potential;
  std::vector<MuSpec> mu;
  std::vector<double> N;
  MeshSpec mesh;
  U0Spec u0;
  double t_end = 1.0;
  double dt0 = 1e-3;
  double blow_threshold = 1e6;
  double dt_min = 1e-12;
  double delta = 0.0;
  double eigen_tol = 1e-9;
  int fuzz_samples = 500;
  double fuzz_tolerance = 1e-3;
  bool subsolution = true;
  double subsolution_eps = 1.0;
  double energy_tolerance = 0.05;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";

  /// The resolved configuration as pretty-printed JSON (defaults applied,
  /// C-relative μ resolved), echoed into every output file.
  std::string resolved_json;
};

/// Parses a JSON document; `overrides` are dotted key paths with values
/// (parsed as JSON when possible, else taken as strings). Throws
/// Error(Config) or Error(Parameter) with a diagnostic.
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitInvariant = 4 };

struct ScenarioOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written artifacts, relative to output_dir
  std::string message;
};

/// Runs the configured scenario and writes CSV/JSON artifacts to output_dir.
ScenarioOutcome run_scenario(const RunConfig& cfg);

}  // namespace hardy

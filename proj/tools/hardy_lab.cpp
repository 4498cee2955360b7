// hardy_lab: eigenvalues, evolutions, sweeps and Hardy checks for the
// singular p-heat problem, driven by a JSON run configuration.
//
//   hardy_lab eigen          --config run.json
//   hardy_lab evolve         --config run.json --set mu=1.2L --output-dir out/blow
//   hardy_lab sweep mu       --config sweep.json --workers 3
//   hardy_lab dump-potential --set kernel=iii --set N=50
//   hardy_lab hardy-fuzz     --set kernel=iv --set p=3 --seed 7

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>

#include "hardy/errors.hpp"
#include "hardy/kernels.hpp"
#include "hardy/scenario.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string kernels = "auto";
  bool print_config = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.sets, "override a config key, e.g. --set mesh.resolution=800")
      ->take_all();
  cmd->add_option("-o,--output-dir", c.output_dir, "directory for CSV/JSON artifacts");
  cmd->add_option("--seed", c.seed, "seed for randomized tests");
  cmd->add_option("-j,--workers", c.workers, "parallel sweep entries")->check(CLI::PositiveNumber);
  cmd->add_option("--kernels", c.kernels, "inner-loop kernels")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  cmd->add_flag("--print-config", c.print_config, "print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular p-heat equation lab: Hardy kernels, truncated eigenvalues, IMEX evolution"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hardy_lab 1.0");

  Common common;
  std::string sweep_axis;
  struct Verb {
    const char* name;
    const char* help;
    const char* scenario;
  };
  const Verb verbs[] = {
      {"eigen", "first eigenpair of the truncated problem for each N", "eigen"},
      {"evolve", "time evolution from u0 (blow-up detection, sub-solution check)", "evolve"},
      {"sweep", "sweep over mu or N", nullptr},
      {"dump-potential", "write W and W_N at the mesh nodes", "potential-dump"},
      {"hardy-fuzz", "Rayleigh quotients of random fields against the untruncated W", "hardy-fuzz"},
  };
  std::map<CLI::App*, const Verb*> lookup;
  for (const auto& v : verbs) {
    auto* cmd = app.add_subcommand(v.name, v.help);
    add_common(cmd, common);
    if (std::string(v.name) == "sweep")
      cmd->add_option("axis", sweep_axis, "mu | N")->required()->check(CLI::IsMember({"mu", "N"}));
    lookup[cmd] = &v;
  }

  CLI11_PARSE(app, argc, argv);

  const Verb* verb = nullptr;
  for (auto* sub : app.get_subcommands()) verb = lookup[sub];

  if (common.kernels != "auto") {
    const auto isa = common.kernels == "avx2" ? hardy::kernels::Isa::Avx2 : hardy::kernels::Isa::Scalar;
    if (!hardy::kernels::select(isa)) {
      std::cerr << "error: " << common.kernels << " kernels are not available on this machine\n";
      return hardy::kExitConfig;
    }
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  const std::string scenario = verb->scenario ? verb->scenario : "sweep-" + sweep_axis;
  overrides.emplace_back("scenario", "\"" + scenario + "\"");
  for (const auto& s : common.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << s << "'\n";
      return hardy::kExitConfig;
    }
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!common.output_dir.empty()) overrides.emplace_back("output_dir", "\"" + common.output_dir + "\"");
  if (common.seed) overrides.emplace_back("seed", std::to_string(*common.seed));
  if (common.workers) overrides.emplace_back("workers", std::to_string(*common.workers));

  hardy::RunConfig cfg;
  try {
    cfg = common.config.empty() ? hardy::parse_config_text("{}", overrides)
                                : hardy::parse_config(common.config, overrides);
  } catch (const hardy::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hardy::kExitConfig;
  }

  if (common.print_config) {
    std::cout << cfg.resolved_json << '\n';
    return hardy::kExitOk;
  }

  std::cerr << "hardy_lab " << scenario << " (kernels: " << hardy::kernels::isa_name(hardy::kernels::active().isa)
            << ", output: " << cfg.output_dir << ")\n";
  hardy::ScenarioOutcome outcome;
  try {
    outcome = hardy::run_scenario(cfg);
  } catch (const hardy::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hardy::kExitSolver;
  }
  for (const auto& f : outcome.files) std::cout << cfg.output_dir << '/' << f << '\n';
  if (!outcome.message.empty()) std::cerr << outcome.message << '\n';
  return outcome.exit_code;
}

// gpig_cli: information-gain sweeps, regret benchmarks, spectrum dumps and
// the verification suite.
//
// Exit status: 0 success, 1 a check failed, 2 configuration error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpig/error.hpp"
#include "gpig/experiment.hpp"

using nlohmann::json;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

struct Flags {
  std::string config_path;
  std::string kernel;
  std::optional<double> tau;
  std::optional<long> grid_size;
  std::optional<long> horizon;
  std::vector<long> horizons;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::string algo, setting, gamma_source;
  std::optional<double> delta, norm_bound, noise_scale, width_constant;

  std::optional<long> num_eigs;
  std::vector<long> fit_range;
  std::vector<std::string> fixtures;
};

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw gpig::Error(gpig::Errc::ConfigError, std::string(what) + ": cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw gpig::Error(gpig::Errc::ConfigError, std::string(what) + ": " + e.what());
  }
}

// Inline JSON when the argument starts with '{', otherwise a file path.
json parse_kernel_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && arg[first] == '{') {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw gpig::Error(gpig::Errc::ConfigError, std::string("kernel: ") + e.what());
    }
  }
  return load_json_file(arg, "kernel");
}

json merged_config(const Flags& f) {
  json j = f.config_path.empty() ? json::object() : load_json_file(f.config_path, "config");
  if (!j.is_object()) throw gpig::Error(gpig::Errc::ConfigError, "config: must be a JSON object");
  if (!f.kernel.empty()) j["kernel"] = parse_kernel_argument(f.kernel);
  if (f.tau) j["tau"] = *f.tau;
  if (f.grid_size) j["grid_size"] = *f.grid_size;
  if (f.horizon) {
    j.erase("horizons");
    j["horizon"] = *f.horizon;
  }
  if (!f.horizons.empty()) {
    j.erase("horizon");
    j["horizons"] = f.horizons;
  }
  if (!f.seeds.empty()) j["seeds"] = f.seeds;
  if (f.seed) j["seed"] = *f.seed;
  if (!f.out.empty()) j["out"] = f.out;
  if (!f.algo.empty()) j["algo"] = f.algo;
  if (!f.setting.empty()) j["setting"] = f.setting;
  if (!f.gamma_source.empty()) j["gamma_source"] = f.gamma_source;
  if (f.delta) j["delta"] = *f.delta;
  if (f.norm_bound) j["norm_bound"] = *f.norm_bound;
  if (f.noise_scale) j["noise_scale"] = *f.noise_scale;
  if (f.width_constant) j["width_constant"] = *f.width_constant;
  if (f.num_eigs) j["num_eigs"] = *f.num_eigs;
  if (!f.fit_range.empty()) j["fit_range"] = f.fit_range;
  if (!f.fixtures.empty()) j["fixtures"] = f.fixtures;
  return j;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "JSON config supplying defaults");
  app->add_option("--kernel", f.kernel, "Kernel spec: a JSON file or inline JSON");
  app->add_option("--tau", f.tau, "Observation noise variance");
  app->add_option("--grid-size", f.grid_size, "Grid points per dimension");
  auto* horizon = app->add_option("--horizon", f.horizon, "Single horizon T");
  app->add_option("--horizons", f.horizons, "Strictly increasing horizons")->excludes(horizon);
  app->add_option("--seeds", f.seeds, "Per-trace seeds");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
}

int cmd_gamma(const gpig::ExperimentConfig& config) {
  const auto result = gpig::run_gamma_sweep(config);
  std::cout << "T,empirical_gamma,D_star,theorem3_bound,corollary_bound\n";
  for (const auto& r : result.rows)
    std::cout << r.T << ',' << r.empirical_gamma << ',' << r.D_star << ',' << r.theorem3_bound << ','
              << r.corollary_bound << '\n';
  std::cout << "log-log slope " << result.slope << (result.certified ? "" : " (bounds uncertified)")
            << '\n';
  if (!result.bounds_hold) std::cerr << "error: empirical gamma exceeds a bound\n";
  if (!result.cumvar_holds) std::cerr << "error: cumulative variance exceeds c1 * gain\n";
  return result.bounds_hold && result.cumvar_holds ? 0 : kExitCheckFailed;
}

int cmd_regret(const gpig::ExperimentConfig& config) {
  const auto result = gpig::run_regret_bench(config);
  const auto& last = result.summary.back();
  std::cout << "T=" << last.t << " median R(T)=" << last.median << " mean=" << last.mean
            << " q25=" << last.q25 << " q75=" << last.q75 << '\n';
  if (!result.cumvar_holds) std::cerr << "error: cumulative variance exceeds c1 * gain\n";
  return result.cumvar_holds ? 0 : kExitCheckFailed;
}

int cmd_spectrum(const gpig::ExperimentConfig& config) {
  const auto result = gpig::run_spectrum(config);
  std::cout << "eigenvalues " << result.spectrum.size() << ", fit range [" << result.fit_first << ", "
            << result.fit_last << "]\n"
            << "polynomial residual " << result.polynomial.residual << ", exponential residual "
            << result.exponential.residual << '\n'
            << "selected " << (std::holds_alternative<gpig::PolynomialDecay>(result.selected)
                                   ? "polynomial"
                                   : "exponential")
            << '\n';
  return 0;
}

int cmd_verify(const gpig::ExperimentConfig& config) {
  const auto report = gpig::run_verify(config);
  gpig::print_report(std::cout, report);
  return report.all_passed() ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process bandits and information gain"};
  app.require_subcommand(1);
  Flags f;

  auto* gamma = app.add_subcommand("gamma", "Greedy information gain against the closed-form bounds");
  auto* regret = app.add_subcommand("regret", "GP-UCB / GP-TS regret benchmark");
  auto* spectrum = app.add_subcommand("spectrum", "Nystrom eigenvalues and fitted decay profile");
  auto* verify = app.add_subcommand("verify", "Run the invariant checks");
  for (auto* sub : {gamma, regret, spectrum, verify}) add_common(sub, f);

  regret->add_option("--algo", f.algo, "ucb or ts")->check(CLI::IsMember({"ucb", "ts"}));
  regret->add_option("--setting", f.setting, "bayesian or frequentist")
      ->check(CLI::IsMember({"bayesian", "frequentist"}));
  regret->add_option("--delta", f.delta, "Confidence parameter in (0, 1)");
  regret->add_option("--norm-bound", f.norm_bound, "RKHS norm bound B");
  regret->add_option("--noise-scale", f.noise_scale, "Sub-Gaussian noise scale R");
  regret->add_option("--width-constant", f.width_constant, "Bayesian width multiplier");
  regret->add_option("--gamma-source", f.gamma_source, "theorem3 or empirical")
      ->check(CLI::IsMember({"theorem3", "empirical"}));
  for (auto* sub : {gamma, spectrum}) {
    sub->add_option("--num-eigs", f.num_eigs, "Nystrom eigenpairs to keep");
    sub->add_option("--fit-range", f.fit_range, "First and last eigenvalue index for the fit")
        ->expected(2);
  }
  verify->add_option("--fixture", f.fixtures, "Matrix fixture (JSON with a 'matrix' field)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  gpig::Command command = gpig::Command::Gamma;
  if (regret->parsed()) command = gpig::Command::Regret;
  if (spectrum->parsed()) command = gpig::Command::Spectrum;
  if (verify->parsed()) command = gpig::Command::Verify;

  gpig::ExperimentConfig config;
  try {
    config = gpig::config_from_json(command, merged_config(f));
  } catch (const gpig::Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    switch (command) {
      case gpig::Command::Gamma: return cmd_gamma(config);
      case gpig::Command::Regret: return cmd_regret(config);
      case gpig::Command::Spectrum: return cmd_spectrum(config);
      case gpig::Command::Verify: return cmd_verify(config);
    }
  } catch (const gpig::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == gpig::Errc::ConfigError ? kExitConfigError : kExitCheckFailed;
  }
  return 0;
}

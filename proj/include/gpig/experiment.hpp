#pragma once

// Experiment orchestration behind the command-line tool: the γ_T sweep,
// regret benchmarks, spectrum inspection and the verification suite.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpig/bandit.hpp"
#include "gpig/infogain.hpp"
#include "gpig/kernels.hpp"

namespace gpig {

enum class Command { Gamma, Regret, Spectrum, Verify };

struct ExperimentConfig {
  Command command = Command::Gamma;
  nlohmann::json kernel_json;
  KernelSpec kernel;
  double noise = 1.0;
  /// Strictly increasing; regret runs use the last entry.
  std::vector<Index> horizons{64, 128, 256, 512, 1024};
  Index grid_size = 0;  // 0: 512 in 1-d, 64 in 2-d, 16 otherwise
  std::vector<std::uint64_t> seeds{1};
  std::uint64_t master_seed = 0;
  PolicyConfig policy;
  Index num_eigs = 100;
  Index fit_first = 0;  // 0: automatic
  Index fit_last = 0;
  std::vector<std::filesystem::path> fixtures;
  std::filesystem::path out = "out";

  Index resolved_grid_size() const;
};

/// Builds and validates a config from its JSON form; every problem is a
/// ConfigError naming the offending field.
ExperimentConfig config_from_json(Command command, const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Creates the directory and probes that it is writable (ConfigError if not).
void prepare_output_dir(const std::filesystem::path& dir);

/// Least-squares slope of log(values) against log(horizons).
double loglog_slope(const std::vector<Index>& horizons, const std::vector<double>& values);

struct GammaRow {
  Index T = 0;
  double empirical_gamma = 0.0;
  Index D_star = 1;
  double theorem3_bound = 0.0;
  double corollary_bound = 0.0;
};

struct GammaSweepResult {
  std::vector<GammaRow> rows;
  InfoGainTrace trace;
  DecayProfile fitted_profile;
  /// Bounds come from an exact Mercer spectrum (not a Nyström estimate).
  bool certified = false;
  double slope = 0.0;
  bool bounds_hold = true;
  bool cumvar_holds = true;
};

/// Writes gamma.csv, gamma.json, greedy_trace.csv and greedy_trace.json.
GammaSweepResult run_gamma_sweep(const ExperimentConfig& config);

struct RegretBenchResult {
  std::vector<RegretTrace> traces;
  std::vector<RegretSummaryRow> summary;
  bool cumvar_holds = true;
};

/// Writes regret_seed_<seed>.csv per seed, summary.csv and regret.json.
RegretBenchResult run_regret_bench(const ExperimentConfig& config);

struct SpectrumResult {
  Spectrum spectrum;
  DecayFit polynomial;
  DecayFit exponential;
  DecayProfile selected;
  Index fit_first = 0;
  Index fit_last = 0;
};

/// Writes spectrum.csv and spectrum.json.
SpectrumResult run_spectrum(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = true;
  double max_error = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

VerifyReport run_verify(const ExperimentConfig& config);
void print_report(std::ostream& out, const VerifyReport& report);

}  // namespace gpig

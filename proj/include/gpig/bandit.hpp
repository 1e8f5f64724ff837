#pragma once

// GP-UCB and GP-TS on a finite candidate grid, with regret accounting.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gpig/gp.hpp"
#include "gpig/kernels.hpp"
#include "gpig/rng.hpp"

namespace gpig {

enum class Algorithm { UCB, TS };
enum class Setting { Bayesian, Frequentist };

/// Where the frequentist width takes γ_{t-1} from.
enum class GammaSource {
  Theorem3Bound,  // bound at D*, an upper bound on γ_{t-1}
  Empirical,      // the policy's own running information gain
};

struct PolicyConfig {
  Algorithm algorithm = Algorithm::UCB;
  Setting setting = Setting::Bayesian;
  double delta = 0.1;
  double norm_bound = 1.0;   // B
  double noise_scale = 1.0;  // R
  double width_constant = 1.0;
  GammaSource gamma_source = GammaSource::Theorem3Bound;
};

/// Throws ConfigError unless δ ∈ (0,1), width_constant >= 0, and B, R > 0 in
/// the frequentist setting.
void validate(const PolicyConfig& config);

/// α_t. Bayesian: c √(2 log(π²t²/(3δ))). Frequentist:
/// B + R √(2(γ_{t-1} + 1 + log(1/δ))); throws MissingGamma without γ.
double beta_schedule(const PolicyConfig& config, Index t, std::optional<double> gamma_prev = {});

/// argmax_i μ_i + α σ_i, ties to the lowest index.
Index ucb_select(const VectorXd& mean, const VectorXd& variance, double alpha);
Index ucb_select(const GPState& state, double alpha, const PointSet& grid);

/// argmax of one joint draw from N(μ, α² Σ) over the grid, using a pivoted
/// LDLᵀ factor of Σ. α = 0 reduces to argmax μ without drawing.
Index ts_select(const VectorXd& mean, const MatrixXd& covariance, double alpha, Rng& rng);
Index ts_select(const GPState& state, double alpha, const PointSet& grid, std::uint64_t seed);

struct RegretStep {
  Index t = 0;
  Index index = 0;
  VectorXd x;
  double f_x = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double beta = 0.0;
  double variance = 0.0;      // σ²_{t-1}(x_t)
  double observation = 0.0;   // y_t
  double running_gain = 0.0;  // ½ Σ_{s<=t} log(1 + σ²_{s-1}(x_s)/τ)
};

struct RegretTrace {
  std::uint64_t seed = 0;
  Index horizon = 0;
  std::vector<RegretStep> steps;

  double final_regret() const { return steps.empty() ? 0.0 : steps.back().cum_regret; }
  double final_gain() const { return steps.empty() ? 0.0 : steps.back().running_gain; }
  double final_beta() const { return steps.empty() ? 0.0 : steps.back().beta; }
  /// D_T = Σ σ²_{t-1}(x_t).
  double cumulative_variance() const;
};

/// Candidate grid with its prior Gram matrix, shared across runs.
struct PolicyProblem {
  KernelSpec kernel;
  PointSet grid;
  std::shared_ptr<const MatrixXd> prior_gram;
  double noise = 1.0;

  PolicyProblem(KernelSpec kernel, PointSet grid, double noise);
};

/// select → observe (seeded Gaussian noise, √τ Bayesian / R frequentist) →
/// condition, for T rounds. Regret is measured against the grid maximizer.
RegretTrace run_policy(const PolicyConfig& config, const VectorXd& objective_on_grid,
                       const PolicyProblem& problem, Index T, std::uint64_t seed);
RegretTrace run_policy(const PolicyConfig& config, const SampledFunction& objective,
                       const KernelSpec& kernel, double noise, const PointSet& grid, Index T,
                       std::uint64_t seed);

struct RegretSummaryRow {
  Index t = 0;
  double median = 0.0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Per-t statistics of cumulative regret across traces (linear-interpolated
/// quantiles). Throws MismatchedHorizons.
std::vector<RegretSummaryRow> regret_summary(const std::vector<RegretTrace>& traces);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace gpig

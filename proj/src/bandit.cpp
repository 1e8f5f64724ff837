#include "gpig/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "gpig/infogain.hpp"
#include "gpig/numerics.hpp"

namespace gpig {

namespace {

Index argmax_first(const VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// γ_{t-1} from the projected-plus-tail bound at the kernel's optimal projection.
double theorem3_gamma(const KernelSpec& kernel, double noise, Index horizon) {
  if (horizon < 1) return 0.0;
  if (kernel.family != KernelFamily::ExplicitMercer || !kernel.spectrum || !kernel.spectrum->decay)
    throw Error(Errc::MissingGamma,
                "frequentist width with the bound-based gamma needs a Mercer kernel with a decay profile");
  return evaluate_bounds(*kernel.spectrum, *kernel.spectrum->decay, kernel_bound(kernel), noise, horizon)
      .theorem3;
}

}  // namespace

void validate(const PolicyConfig& config) {
  if (!(config.delta > 0.0 && config.delta < 1.0))
    throw Error(Errc::ConfigError, "delta must lie in (0, 1)");
  if (!(config.width_constant >= 0.0))
    throw Error(Errc::ConfigError, "width_constant must be >= 0");
  if (config.setting == Setting::Frequentist) {
    if (!(config.norm_bound > 0.0)) throw Error(Errc::ConfigError, "norm_bound (B) must be > 0");
    if (!(config.noise_scale > 0.0)) throw Error(Errc::ConfigError, "noise_scale (R) must be > 0");
  }
}

double beta_schedule(const PolicyConfig& config, Index t, std::optional<double> gamma_prev) {
  if (t < 1) throw Error(Errc::InvalidArgument, "t must be >= 1");
  const double td = static_cast<double>(t);
  if (config.setting == Setting::Bayesian) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double arg = pi2 * td * td / (3.0 * config.delta);
    return config.width_constant * std::sqrt(2.0 * std::max(std::log(arg), 0.0));
  }
  if (!gamma_prev) throw Error(Errc::MissingGamma, "frequentist width needs gamma_{t-1}");
  return config.norm_bound +
         config.noise_scale * std::sqrt(2.0 * (*gamma_prev + 1.0 + std::log(1.0 / config.delta)));
}

Index ucb_select(const VectorXd& mean, const VectorXd& variance, double alpha) {
  if (mean.size() == 0) throw Error(Errc::EmptyGrid, "ucb_select needs a nonempty grid");
  const VectorXd score = mean + alpha * variance.cwiseMax(0.0).cwiseSqrt();
  return argmax_first(score);
}

Index ucb_select(const GPState& state, double alpha, const PointSet& grid) {
  if (grid.rows() == 0) throw Error(Errc::EmptyGrid, "ucb_select needs a nonempty grid");
  VectorXd mean(grid.rows()), var(grid.rows());
  for (Index i = 0; i < grid.rows(); ++i) {
    const Posterior p = posterior(state, grid.row(i).transpose());
    mean[i] = p.mean;
    var[i] = p.variance;
  }
  return ucb_select(mean, var, alpha);
}

Index ts_select(const VectorXd& mean, const MatrixXd& covariance, double alpha, Rng& rng) {
  if (mean.size() == 0) throw Error(Errc::EmptyGrid, "ts_select needs a nonempty grid");
  if (alpha == 0.0) return argmax_first(mean);
  // Pivoted LDLᵀ handles the rank-deficient posterior covariances that
  // appear once the grid is densely observed; negative pivots from
  // round-off are treated as zero.
  const Eigen::LDLT<MatrixXd> ldlt(covariance.selfadjointView<Eigen::Lower>());
  if (ldlt.info() != Eigen::Success)
    throw Error(Errc::NotPositiveDefinite, "posterior covariance factorization failed");
  const VectorXd z = standard_normal(rng, mean.size());
  VectorXd draw = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  draw = ldlt.matrixL() * draw;
  draw = ldlt.transpositionsP().transpose() * draw;
  return argmax_first(mean + alpha * draw);
}

Index ts_select(const GPState& state, double alpha, const PointSet& grid, std::uint64_t seed) {
  if (grid.rows() == 0) throw Error(Errc::EmptyGrid, "ts_select needs a nonempty grid");
  VectorXd mean(grid.rows());
  for (Index i = 0; i < grid.rows(); ++i) mean[i] = posterior(state, grid.row(i).transpose()).mean;
  Rng rng = make_rng(seed);
  return ts_select(mean, posterior_covariance(state, grid), alpha, rng);
}

double RegretTrace::cumulative_variance() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.variance;
  return total;
}

PolicyProblem::PolicyProblem(KernelSpec kernel_, PointSet grid_, double noise_)
    : kernel(std::move(kernel_)), grid(std::move(grid_)), noise(noise_) {
  if (grid.rows() == 0) throw Error(Errc::EmptyGrid, "policy grid is empty");
  prior_gram = std::make_shared<const MatrixXd>(gram(kernel, grid));
}

RegretTrace run_policy(const PolicyConfig& config, const VectorXd& objective_on_grid,
                       const PolicyProblem& problem, Index T, std::uint64_t seed) {
  if (T < 1) throw Error(Errc::InvalidArgument, "horizon T must be >= 1");
  if (objective_on_grid.size() != problem.grid.rows())
    throw Error(Errc::InvalidArgument, "objective must have one value per grid point");

  const bool thompson = config.algorithm == Algorithm::TS;
  GridPosterior post(problem.prior_gram, problem.grid, problem.noise, thompson);
  Rng noise_rng = make_rng(seed, 0, "observation-noise");
  Rng ts_rng = make_rng(seed, 0, "thompson");
  const double noise_sd =
      config.setting == Setting::Bayesian ? std::sqrt(problem.noise) : config.noise_scale;
  const double best_value = objective_on_grid.maxCoeff();

  RegretTrace trace;
  trace.seed = seed;
  trace.horizon = T;
  trace.steps.reserve(static_cast<std::size_t>(T));
  double cum_regret = 0.0;
  double running_gain = 0.0;

  for (Index t = 1; t <= T; ++t) {
    std::optional<double> gamma_prev;
    if (config.setting == Setting::Frequentist) {
      gamma_prev = config.gamma_source == GammaSource::Empirical
                       ? running_gain
                       : theorem3_gamma(problem.kernel, problem.noise, t - 1);
    }
    const double alpha = beta_schedule(config, t, gamma_prev);
    const Index pick = thompson ? ts_select(post.mean(), post.covariance(), alpha, ts_rng)
                                : ucb_select(post.mean(), post.variance(), alpha);

    const double f_x = objective_on_grid[pick];
    const double y = f_x + noise_sd * standard_normal(noise_rng);
    const double sigma2 = post.observe(pick, y);

    RegretStep step;
    step.t = t;
    step.index = pick;
    step.x = problem.grid.row(pick).transpose();
    step.f_x = f_x;
    step.inst_regret = best_value - f_x;
    cum_regret += step.inst_regret;
    step.cum_regret = cum_regret;
    step.beta = alpha;
    step.variance = sigma2;
    step.observation = y;
    running_gain += 0.5 * std::log1p(sigma2 / problem.noise);
    step.running_gain = running_gain;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

RegretTrace run_policy(const PolicyConfig& config, const SampledFunction& objective,
                       const KernelSpec& kernel, double noise, const PointSet& grid, Index T,
                       std::uint64_t seed) {
  const PolicyProblem problem(kernel, grid, noise);
  return run_policy(config, objective.evaluate(grid), problem, T, seed);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<RegretSummaryRow> regret_summary(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw Error(Errc::InvalidArgument, "regret_summary needs at least one trace");
  const Index T = traces.front().horizon;
  for (const auto& tr : traces)
    if (tr.horizon != T || static_cast<Index>(tr.steps.size()) != T)
      throw Error(Errc::MismatchedHorizons, "all traces must share one horizon");

  std::vector<RegretSummaryRow> rows;
  rows.reserve(static_cast<std::size_t>(T));
  std::vector<double> column(traces.size());
  for (Index t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      column[k] = traces[k].steps[static_cast<std::size_t>(t)].cum_regret;
      sum += column[k];
    }
    RegretSummaryRow row;
    row.t = t + 1;
    row.mean = sum / static_cast<double>(traces.size());
    row.median = quantile(column, 0.5);
    row.q25 = quantile(column, 0.25);
    row.q75 = quantile(column, 0.75);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gpig

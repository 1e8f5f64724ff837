#pragma once

// Exact GP posterior inference and seeded sampling of GP / RKHS functions.

#include <cstdint>
#include <memory>

#include <Eigen/Core>

#include "gpig/kernels.hpp"
#include "gpig/numerics.hpp"
#include "gpig/rng.hpp"

namespace gpig {

/// Posterior given observations (X_t, y_t) with noise variance τ.
/// Immutable: condition() returns a new state.
class GPState {
 public:
  GPState(KernelSpec kernel, double noise);

  /// From-scratch construction (batch factorization).
  static GPState from_data(KernelSpec kernel, double noise, PointSet points, VectorXd responses);

  const KernelSpec& kernel() const { return kernel_; }
  double noise() const { return noise_; }
  Index size() const { return points_.rows(); }
  const PointSet& points() const { return points_; }
  const VectorXd& responses() const { return responses_; }
  /// Factor of K + τI.
  const PosDefFactor<double>& factor() const { return factor_; }
  /// (K + τI)^{-1} y.
  const VectorXd& solved() const { return solved_; }

  friend GPState condition(const GPState& state, PointRef x, double y);

 private:
  KernelSpec kernel_;
  double noise_;
  PointSet points_;
  VectorXd responses_;
  PosDefFactor<double> factor_;
  VectorXd solved_;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// μ_t(x) and σ_t²(x), the latter clamped to [0, k(x,x)]. Variances below
/// -1e-6 before clamping raise NumericalHealth.
Posterior posterior(const GPState& state, PointRef x);

/// Appends (x, y), extending the Cholesky factor in O(t²).
GPState condition(const GPState& state, PointRef x, double y);

/// Posterior covariance k_t(X_i, X_j) over a point set.
MatrixXd posterior_covariance(const GPState& state, const PointSet& points);

/// Posterior restricted to a fixed candidate set, updated by rank-one
/// corrections. Equivalent to GPState queried on the grid, at O(n t) per
/// observation (O(n²) when the full covariance is tracked).
class GridPosterior {
 public:
  GridPosterior(const KernelSpec& kernel, PointSet grid, double noise, bool track_covariance = false);
  GridPosterior(std::shared_ptr<const MatrixXd> prior_gram, PointSet grid, double noise,
                bool track_covariance = false);

  Index size() const { return grid_.rows(); }
  Index observations() const { return count_; }
  double noise() const { return noise_; }
  const PointSet& grid() const { return grid_; }
  const VectorXd& mean() const { return mean_; }
  const VectorXd& variance() const { return variance_; }
  bool tracks_covariance() const { return track_covariance_; }
  /// Posterior covariance over the grid.
  MatrixXd covariance() const;

  /// Observes y at grid index `index`; returns σ²_{t-1}(x_t) before the update.
  double observe(Index index, double y);

 private:
  std::shared_ptr<const MatrixXd> prior_;
  PointSet grid_;
  double noise_;
  bool track_covariance_;
  Index count_ = 0;
  VectorXd mean_;
  VectorXd variance_;
  MatrixXd factors_;  // columns v_s = k_{s-1}(·, x_s) / sqrt(σ²_{s-1}(x_s) + τ)
  MatrixXd covariance_;
};

/// f(x) = Σ_{m<=D} w_m λ_m^{1/2} φ_m(x).
struct SampledFunction {
  std::shared_ptr<const Spectrum> spectrum;
  Index truncation = 0;
  VectorXd weights;
  /// Σ w_m².
  double norm_estimate = 0.0;

  double operator()(PointRef x) const;
  VectorXd evaluate(const PointSet& points) const;
};

/// Draws W_m ~ N(0,1) i.i.d. Throws InsufficientSpectrum if D exceeds the
/// stored spectrum.
SampledFunction sample_gp(std::shared_ptr<const Spectrum> spectrum, Index D, Rng& rng);
SampledFunction sample_gp(std::shared_ptr<const Spectrum> spectrum, Index D, std::uint64_t seed);

/// Uniform direction on the D-sphere scaled to Σ w_m² = B².
SampledFunction sample_rkhs(std::shared_ptr<const Spectrum> spectrum, Index D, double B, Rng& rng);
SampledFunction sample_rkhs(std::shared_ptr<const Spectrum> spectrum, Index D, double B,
                            std::uint64_t seed);

}  // namespace gpig

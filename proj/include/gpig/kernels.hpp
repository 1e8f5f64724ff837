#pragma once

// Covariance functions, Mercer spectra and eigendecay profiles.

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "gpig/error.hpp"

namespace gpig {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One point per row.
using PointSet = Eigen::MatrixXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

/// Axis-aligned box [lower, upper] in R^d.
struct Domain {
  VectorXd lower;
  VectorXd upper;

  static Domain unit(Index dim);

  Index dimension() const { return lower.size(); }
  bool contains(PointRef x, double tol = 1e-12) const;
};

/// Cell-centred tensor grid with `points_per_dim` points along each axis.
PointSet regular_grid(const Domain& domain, Index points_per_dim);

// ---------------------------------------------------------------------------
// Eigendecay profiles

/// λ_m <= C_p m^{-β_p}, β_p > 1.
struct PolynomialDecay {
  double C_p = 1.0;
  double beta_p = 2.0;
};

/// λ_m <= C_{e,1} exp(-C_{e,2} m^{β_e}), all constants > 0.
struct ExponentialDecay {
  double C_e1 = 1.0;
  double C_e2 = 1.0;
  double beta_e = 1.0;
};

using DecayProfile = std::variant<PolynomialDecay, ExponentialDecay>;

/// Throws InvalidProfile unless the profile parameters are in range.
void validate(const DecayProfile& profile);

/// The profile's envelope evaluated at (real) index m >= 1.
double decay_bound(const DecayProfile& profile, double m);

/// Same profile with its leading constant multiplied by `factor`.
DecayProfile scale_profile(const DecayProfile& profile, double factor);

// ---------------------------------------------------------------------------
// Spectra

/// Eigenfeatures φ_1, φ_2, ... of a Mercer expansion.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual Index dimension() const = 0;
  /// Number of features this map can produce.
  virtual Index capacity() const = 0;
  /// Writes φ_1(x) .. φ_count(x) into `out` (size count).
  virtual void evaluate(PointRef x, Index count, Eigen::Ref<VectorXd> out) const = 0;
  /// sup_x Σ_m λ_m φ_m(x)² for the given leading eigenvalues.
  virtual double max_diagonal(const VectorXd& eigenvalues) const = 0;
};

/// Tensorized cosine basis on [0,1]^d: φ(x) = Π_j c_{k_j}(x_j) with c_0 = 1
/// and c_k(x) = √2 cos(kπx). Multi-indices are ordered by total degree, then
/// lexicographically, so d = 1 gives φ_m(x) = √2 cos((m-1)πx) for m >= 2.
class CosineFeatureMap final : public FeatureMap {
 public:
  CosineFeatureMap(Index dim, Index count);

  Index dimension() const override { return dim_; }
  Index capacity() const override { return static_cast<Index>(indices_.size()); }
  void evaluate(PointRef x, Index count, Eigen::Ref<VectorXd> out) const override;
  double max_diagonal(const VectorXd& eigenvalues) const override;

  const std::vector<std::vector<int>>& multi_indices() const { return indices_; }

 private:
  Index dim_;
  std::vector<std::vector<int>> indices_;
};

struct Spectrum {
  /// Nonincreasing, nonnegative.
  VectorXd eigenvalues;
  std::shared_ptr<const FeatureMap> features;
  /// ψ with |φ_m(x)| <= ψ.
  double feature_bound = 1.0;
  std::optional<DecayProfile> decay;
  /// The kernel is exactly the stored sum; eigenvalues beyond size() are 0.
  bool finite_rank = false;

  Index size() const { return eigenvalues.size(); }

  /// φ_1(x) .. φ_count(x).
  VectorXd feature_vector(PointRef x, Index count) const;
  /// Row i holds φ_1(X_i) .. φ_count(X_i).
  MatrixXd feature_matrix(const PointSet& points, Index count) const;
};

/// Validates ordering and (if present) the decay envelope on stored values.
void validate(const Spectrum& spectrum);

// ---------------------------------------------------------------------------
// Kernel specifications

enum class KernelFamily { SquaredExponential, Matern, Constant, ExplicitMercer };

/// How an ExplicitMercer kernel was built, kept so it can be serialized.
struct MercerRecipe {
  std::optional<DecayProfile> profile;
  VectorXd eigenvalues;  // used when profile is empty
  Index truncation = 0;
  bool normalize = false;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double lengthscale = 1.0;
  double nu = 1.5;
  double variance = 1.0;
  Domain domain;
  std::shared_ptr<const Spectrum> spectrum;
  std::optional<MercerRecipe> recipe;

  static KernelSpec squared_exponential(double lengthscale, Domain domain, double variance = 1.0);
  static KernelSpec matern(double nu, double lengthscale, Domain domain, double variance = 1.0);
  static KernelSpec constant(double variance, Domain domain);
  static KernelSpec mercer(std::shared_ptr<const Spectrum> spectrum, Domain domain);
  /// Cosine-basis Mercer kernel from a recipe.
  static KernelSpec mercer(const MercerRecipe& recipe, Index dim = 1);
};

void validate(const KernelSpec& spec);

/// k(x, x'). Throws DomainViolation for points outside the domain.
double eval(const KernelSpec& spec, PointRef x, PointRef y);

/// Gram matrices; every point is domain-checked once.
MatrixXd gram(const KernelSpec& spec, const PointSet& points);
MatrixXd gram(const KernelSpec& spec, const PointSet& rows, const PointSet& cols);
/// k(X_i, y) for every row of X.
VectorXd cross_covariance(const KernelSpec& spec, const PointSet& points, PointRef y);

/// Uniform bound k̄ >= |k(x, x')|.
double kernel_bound(const KernelSpec& spec);

// ---------------------------------------------------------------------------
// Projection onto the leading D features

using KernelFunction = std::function<double(PointRef, PointRef)>;

struct ProjectedSplit {
  KernelFunction projected;   // k_P
  KernelFunction orthogonal;  // k_O = k - k_P
};

/// Splits `full` into the rank-D projection and its remainder. Throws
/// InsufficientSpectrum if the spectrum has fewer than D pairs.
ProjectedSplit projected_split(const KernelSpec& full, std::shared_ptr<const Spectrum> spectrum,
                               Index D);
/// Uses the spectrum's own Mercer sum as the full kernel.
ProjectedSplit projected_split(std::shared_ptr<const Spectrum> spectrum, Index D);

/// [k_P(X_i, X_j)] = Φ Λ Φᵀ.
MatrixXd projected_gram(const Spectrum& spectrum, const PointSet& points, Index D);

/// δ_D = Σ_{m>D} λ_m ψ². Stored eigenvalues are summed directly; beyond them
/// the decay envelope is summed until terms fall below `truncation_tol`,
/// then closed by an integral upper bound. Throws UnboundedTail when there is
/// no profile and the last stored term exceeds the tolerance.
double tail_mass(const Spectrum& spectrum, Index D, double truncation_tol = 1e-10);

/// Smallest D with tail_mass(D) <= tol.
Index truncation_for_tail(const Spectrum& spectrum, double tol);

// ---------------------------------------------------------------------------
// Spectrum constructors

/// Cosine-basis finite-rank spectrum with λ_m equal to the profile envelope.
Spectrum fourier_spectrum(const DecayProfile& profile, Index count, Index dim = 1);
/// Cosine-basis finite-rank spectrum with explicit eigenvalues.
Spectrum fourier_spectrum(const VectorXd& eigenvalues, Index dim = 1);

/// Rescales the profile constant so the truncated cosine kernel has k̄ = 1.
DecayProfile unit_bound_profile(const DecayProfile& profile, Index count, Index dim = 1);

/// Top eigenpairs of W^{1/2} K W^{1/2} on a quadrature grid, with
/// eigenfeatures from the Nyström extension. Throws GridTooSmall if
/// num_eigs exceeds the grid size.
Spectrum nystrom_spectrum(const KernelSpec& spec, const PointSet& grid, const VectorXd& weights,
                          Index num_eigs);
/// Uniform weights 1/n.
Spectrum nystrom_spectrum(const KernelSpec& spec, const PointSet& grid, Index num_eigs);

// ---------------------------------------------------------------------------
// Decay fitting

struct DecayFit {
  DecayProfile profile;
  /// RMS residual of the log-eigenvalue regression.
  double residual = 0.0;
};

/// `first`/`last` are 1-based inclusive eigenvalue indices.
DecayFit fit_polynomial_decay(const VectorXd& eigenvalues, Index first, Index last);
DecayFit fit_exponential_decay(const VectorXd& eigenvalues, Index first, Index last);

/// Picks whichever fit has the smaller residual (polynomial fits need β_p > 1).
DecayProfile fit_decay_profile(const Spectrum& spectrum, Index first, Index last);

}  // namespace gpig

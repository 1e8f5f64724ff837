#pragma once

// Information gain, its greedy maximization over a grid, and the closed-form
// upper bounds on the maximal information gain γ_T.

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gpig/kernels.hpp"

namespace gpig {

/// ½ log det(I + K/τ) for the given observation points; 0 for none.
double info_gain(const KernelSpec& kernel, const PointSet& points, double noise);

struct InfoGainTrace {
  Index horizon = 0;
  double noise = 1.0;
  std::vector<Index> chosen_indices;
  PointSet chosen_points;
  /// σ²_{t-1}(x_t).
  VectorXd step_variance;
  /// ½ log(1 + σ²_{t-1}(x_t)/τ).
  VectorXd step_gain;
  /// Running sum of step_gain; entry t-1 is I(y_t; f) for the first t picks.
  VectorXd cumulative_gain;
  /// info_gain recomputed from scratch on the chosen set.
  std::optional<double> direct_gain;

  std::optional<Index> D_star;
  std::optional<double> theorem3_bound_at_T;
  std::optional<double> corollary_bound_at_T;

  double final_gain() const { return horizon > 0 ? cumulative_gain[horizon - 1] : 0.0; }
};

/// Greedy maximum-variance selection over `grid` for T steps, ties to the
/// lowest index. The result is a lower bound on γ_T restricted to the grid.
/// With `cross_check`, the telescoped gain is compared against info_gain on
/// the chosen set and a mismatch above 1e-6 raises NumericalHealth.
InfoGainTrace greedy_gamma(const KernelSpec& kernel, const PointSet& grid, Index T, double noise,
                           bool cross_check = true);
InfoGainTrace greedy_gamma(const KernelSpec& kernel, std::shared_ptr<const MatrixXd> prior_gram,
                           const PointSet& grid, Index T, double noise, bool cross_check = true);

// ---------------------------------------------------------------------------
// Closed-form bounds

/// ½ D log(1 + k̄T/(τD)) + ½ δ_D T/τ.
double theorem3_bound(Index D, double tail, double k_bar, double noise, Index T);

/// Projection dimension balancing the projected and tail terms for a profile.
Index optimal_D(const DecayProfile& profile, double psi, double k_bar, double noise, Index T);

/// The exponential-decay constant C_{β_e}. For β_e >= 1 this is
/// log(C_{e,1}ψ²/(τC_{e,2})); otherwise
/// log(2C_{e,1}ψ²/(τβ_eC_{e,2})) + (1/β_e - 1)(log((2/C_{e,2})(1/β_e - 1)) - 1).
double c_beta(const ExponentialDecay& profile, double psi, double noise);

double corollary_poly_bound(double C_p, double beta_p, double psi, double k_bar, double noise, Index T);
/// β_e > 1 uses the β_e = 1 expression. A negative inner term
/// (2/C_{e,2})(log T + C_{β_e}) is clamped to zero.
double corollary_exp_bound(double C_e1, double C_e2, double beta_e, double psi, double k_bar,
                           double noise, Index T);
double corollary_bound(const DecayProfile& profile, double psi, double k_bar, double noise, Index T);

struct BoundReport {
  Index D_star = 1;
  double tail = 0.0;
  double theorem3 = 0.0;
  double corollary = 0.0;
};

/// D* from optimal_D, δ_{D*} from tail_mass, and both bounds at horizon T.
BoundReport evaluate_bounds(const Spectrum& spectrum, const DecayProfile& profile, double k_bar,
                            double noise, Index T);

// ---------------------------------------------------------------------------
// Identities behind the projected-plus-tail bound, as executable checks

struct DeterminantPair {
  double lhs = 1.0;  // det(I_D + G_t/τ), G_t = Λ^{1/2} Φᵀ Φ Λ^{1/2}
  double rhs = 1.0;  // det(I_t + K_P/τ)
  double log_lhs = 0.0;
  double log_rhs = 0.0;
};

DeterminantPair check_weinstein_aronszajn(const Spectrum& spectrum, Index D, const PointSet& points,
                                          double noise);

struct DecouplingCheck {
  double full_logdet = 0.0;       // log det(I + K/τ)
  double projected_logdet = 0.0;  // log det(I + K_P/τ)
  double residual_logdet = 0.0;   // log det(I + (I + K_P/τ)^{-1} K_O/τ)
  double projected_bound = 0.0;   // D log(1 + k̄t/(τD))
  double weighted_trace = 0.0;    // tr((I + K_P/τ)^{-1} K_O)
  double orthogonal_trace = 0.0;  // tr(K_O)
  double tail_bound = 0.0;        // t δ_D
};

/// Splits log det(I + K/τ) into projected and residual parts. The residual
/// determinant is computed by LU on the nonsymmetric product.
DecouplingCheck check_decoupling(const KernelSpec& full, const Spectrum& spectrum, Index D,
                                 const PointSet& points, double noise);

/// c₁ = 2 / log(1 + 1/τ).
double c1_constant(double noise);

struct CumulativeVariance {
  double total = 0.0;    // D_T = Σ σ²_{t-1}(x_t)
  double c1_gain = 0.0;  // c₁ I(y_T; f)
};

/// D_T and c₁·gain. The inequality D_T <= c₁ I holds when σ² <= 1.
CumulativeVariance cumvar_bound_check(const VectorXd& variances, double noise, double final_gain);

}  // namespace gpig

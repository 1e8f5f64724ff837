#include "gpig/infogain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "gpig/gp.hpp"
#include "gpig/numerics.hpp"

namespace gpig {

namespace {

void check_noise(double noise) {
  if (!(noise > 0.0)) throw Error(Errc::InvalidArgument, "noise variance tau must be > 0");
}

// ceil that ignores round-off just above an integer.
Index ceil_index(double x) {
  const double r = std::round(x);
  const double c = std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x)) ? r : std::ceil(x);
  return std::max<Index>(1, static_cast<Index>(c));
}

double log_term(double k_bar, double noise, Index T) {
  return std::log1p(k_bar * static_cast<double>(T) / noise);
}

double logdet_identity_plus(const MatrixXd& k, double noise) {
  if (k.rows() == 0) return 0.0;
  MatrixXd m = k / noise;
  m.diagonal().array() += 1.0;
  return logdet(cholesky(m));
}

}  // namespace

double info_gain(const KernelSpec& kernel, const PointSet& points, double noise) {
  check_noise(noise);
  if (points.rows() == 0) return 0.0;
  return 0.5 * logdet_identity_plus(gram(kernel, points), noise);
}

InfoGainTrace greedy_gamma(const KernelSpec& kernel, const PointSet& grid, Index T, double noise,
                           bool cross_check) {
  if (grid.rows() == 0) throw Error(Errc::EmptyGrid, "greedy_gamma needs a nonempty grid");
  return greedy_gamma(kernel, std::make_shared<const MatrixXd>(gram(kernel, grid)), grid, T, noise,
                      cross_check);
}

InfoGainTrace greedy_gamma(const KernelSpec& kernel, std::shared_ptr<const MatrixXd> prior_gram,
                           const PointSet& grid, Index T, double noise, bool cross_check) {
  if (grid.rows() == 0) throw Error(Errc::EmptyGrid, "greedy_gamma needs a nonempty grid");
  if (T < 1) throw Error(Errc::InvalidArgument, "horizon T must be >= 1");
  check_noise(noise);

  GridPosterior post(std::move(prior_gram), grid, noise);
  InfoGainTrace trace;
  trace.horizon = T;
  trace.noise = noise;
  trace.chosen_points.resize(T, grid.cols());
  trace.step_variance.resize(T);
  trace.step_gain.resize(T);
  trace.cumulative_gain.resize(T);

  double running = 0.0;
  for (Index t = 0; t < T; ++t) {
    Index best = 0;
    const VectorXd& var = post.variance();
    for (Index i = 1; i < var.size(); ++i)
      if (var[i] > var[best]) best = i;
    const double sigma2 = post.observe(best, 0.0);
    trace.chosen_indices.push_back(best);
    trace.chosen_points.row(t) = grid.row(best);
    trace.step_variance[t] = sigma2;
    trace.step_gain[t] = 0.5 * std::log1p(sigma2 / noise);
    running += trace.step_gain[t];
    trace.cumulative_gain[t] = running;
  }

  if (cross_check) {
    const double direct = info_gain(kernel, trace.chosen_points, noise);
    trace.direct_gain = direct;
    if (std::abs(direct - running) > 1e-6)
      throw Error(Errc::NumericalHealth, "telescoped gain " + std::to_string(running) +
                                             " disagrees with log-det gain " + std::to_string(direct));
  }
  return trace;
}

// ---------------------------------------------------------------------------

double theorem3_bound(Index D, double tail, double k_bar, double noise, Index T) {
  const double d = static_cast<double>(D);
  const double t = static_cast<double>(T);
  return 0.5 * d * std::log1p(k_bar * t / (noise * d)) + 0.5 * tail * t / noise;
}

double c_beta(const ExponentialDecay& p, double psi, double noise) {
  const double psi2 = psi * psi;
  if (p.beta_e >= 1.0) return std::log(p.C_e1 * psi2 / (noise * p.C_e2));
  const double excess = 1.0 / p.beta_e - 1.0;
  return std::log(2.0 * p.C_e1 * psi2 / (noise * p.beta_e * p.C_e2)) +
         excess * (std::log((2.0 / p.C_e2) * excess) - 1.0);
}

Index optimal_D(const DecayProfile& profile, double psi, double k_bar, double noise, Index T) {
  validate(profile);
  const double t = static_cast<double>(T);
  const double psi2 = psi * psi;
  if (const auto* p = std::get_if<PolynomialDecay>(&profile)) {
    const double inv = 1.0 / p->beta_p;
    return ceil_index(std::pow(p->C_p * psi2 * t, inv) * std::pow(noise, -inv) *
                      std::pow(log_term(k_bar, noise, T), -inv));
  }
  const auto& e = std::get<ExponentialDecay>(profile);
  if (e.beta_e >= 1.0) return ceil_index(std::log(e.C_e1 * psi2 * t / (noise * e.C_e2)) / e.C_e2);
  const double inner = (2.0 / e.C_e2) * (std::log(t) + c_beta(e, psi, noise));
  return ceil_index(std::pow(std::max(inner, 0.0), 1.0 / e.beta_e));
}

double corollary_poly_bound(double C_p, double beta_p, double psi, double k_bar, double noise,
                            Index T) {
  validate(PolynomialDecay{C_p, beta_p});
  const double inv = 1.0 / beta_p;
  const double lt = log_term(k_bar, noise, T);
  const double scaled = std::pow(C_p * psi * psi * static_cast<double>(T) / noise, inv);
  return (scaled * std::pow(lt, -inv) + 1.0) * lt;
}

double corollary_exp_bound(double C_e1, double C_e2, double beta_e, double psi, double k_bar,
                           double noise, Index T) {
  const ExponentialDecay e{C_e1, C_e2, beta_e};
  validate(e);
  const double effective_beta = std::min(beta_e, 1.0);
  const double inner = (2.0 / C_e2) * (std::log(static_cast<double>(T)) + c_beta(e, psi, noise));
  const double d = std::pow(std::max(inner, 0.0), 1.0 / effective_beta);
  return (d + 1.0) * log_term(k_bar, noise, T);
}

double corollary_bound(const DecayProfile& profile, double psi, double k_bar, double noise, Index T) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile))
    return corollary_poly_bound(p->C_p, p->beta_p, psi, k_bar, noise, T);
  const auto& e = std::get<ExponentialDecay>(profile);
  return corollary_exp_bound(e.C_e1, e.C_e2, e.beta_e, psi, k_bar, noise, T);
}

BoundReport evaluate_bounds(const Spectrum& spectrum, const DecayProfile& profile, double k_bar,
                            double noise, Index T) {
  BoundReport report;
  report.D_star = optimal_D(profile, spectrum.feature_bound, k_bar, noise, T);
  if (spectrum.finite_rank) report.D_star = std::min(report.D_star, spectrum.size());
  report.tail = tail_mass(spectrum, report.D_star);
  report.theorem3 = theorem3_bound(report.D_star, report.tail, k_bar, noise, T);
  // A finite-rank kernel has no tail at its full rank.
  if (spectrum.finite_rank && report.D_star < spectrum.size()) {
    const double at_rank = theorem3_bound(spectrum.size(), 0.0, k_bar, noise, T);
    if (at_rank < report.theorem3) {
      report.D_star = spectrum.size();
      report.tail = 0.0;
      report.theorem3 = at_rank;
    }
  }
  report.corollary = corollary_bound(profile, spectrum.feature_bound, k_bar, noise, T);
  return report;
}

// ---------------------------------------------------------------------------

DeterminantPair check_weinstein_aronszajn(const Spectrum& spectrum, Index D, const PointSet& points,
                                          double noise) {
  check_noise(noise);
  if (D < 1 || D > spectrum.size())
    throw Error(Errc::InsufficientSpectrum, "D exceeds the stored spectrum");
  DeterminantPair out;
  if (points.rows() == 0) return out;
  const MatrixXd phi = spectrum.feature_matrix(points, D);
  const VectorXd root = spectrum.eigenvalues.head(D).cwiseSqrt();
  const MatrixXd scaled = phi * root.asDiagonal();  // Φ Λ^{1/2}
  const MatrixXd feature_gram = scaled.transpose() * scaled;
  const MatrixXd kernel_gram = scaled * scaled.transpose();
  out.log_lhs = logdet_identity_plus(feature_gram, noise);
  out.log_rhs = logdet_identity_plus(kernel_gram, noise);
  out.lhs = std::exp(out.log_lhs);
  out.rhs = std::exp(out.log_rhs);
  return out;
}

DecouplingCheck check_decoupling(const KernelSpec& full, const Spectrum& spectrum, Index D,
                                 const PointSet& points, double noise) {
  check_noise(noise);
  if (D < 1 || D > spectrum.size())
    throw Error(Errc::InsufficientSpectrum, "D exceeds the stored spectrum");
  const Index t = points.rows();
  DecouplingCheck out;
  if (t == 0) return out;
  const MatrixXd k = gram(full, points);
  const MatrixXd kp = projected_gram(spectrum, points, D);
  const MatrixXd ko = k - kp;

  MatrixXd a = kp / noise;
  a.diagonal().array() += 1.0;
  const auto a_factor = cholesky(a);
  const MatrixXd a_inv_ko = a_factor.solve(ko);

  MatrixXd residual = a_inv_ko / noise;
  residual.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<MatrixXd> lu(residual);
  double log_abs_det = 0.0;
  for (Index i = 0; i < t; ++i) log_abs_det += std::log(std::abs(lu.matrixLU()(i, i)));

  const double k_bar = kernel_bound(full);
  out.full_logdet = logdet_identity_plus(k, noise);
  out.projected_logdet = logdet(a_factor);
  out.residual_logdet = log_abs_det;
  out.projected_bound =
      static_cast<double>(D) * std::log1p(k_bar * static_cast<double>(t) / (noise * static_cast<double>(D)));
  out.weighted_trace = a_inv_ko.trace();
  out.orthogonal_trace = ko.trace();
  out.tail_bound = static_cast<double>(t) * tail_mass(spectrum, D);
  return out;
}

double c1_constant(double noise) {
  check_noise(noise);
  return 2.0 / std::log1p(1.0 / noise);
}

CumulativeVariance cumvar_bound_check(const VectorXd& variances, double noise, double final_gain) {
  if ((variances.array() < 0.0).any())
    throw Error(Errc::InvalidArgument, "variances must be nonnegative");
  return {variances.sum(), c1_constant(noise) * final_gain};
}

}  // namespace gpig

#include "gpig/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

namespace gpig {

namespace {

constexpr double kPi = std::numbers::pi;

double squared_distance(PointRef x, PointRef y) { return (x - y).squaredNorm(); }

void check_point(const KernelSpec& spec, PointRef x) {
  if (!spec.domain.contains(x))
    throw Error(Errc::DomainViolation, "point outside kernel domain");
}

void check_points(const KernelSpec& spec, const PointSet& points) {
  for (Index i = 0; i < points.rows(); ++i) {
    if (points.cols() != spec.domain.dimension() || !spec.domain.contains(points.row(i).transpose()))
      throw Error(Errc::DomainViolation, "point " + std::to_string(i) + " outside kernel domain");
  }
}

double matern_value(double nu, double scaled_r) {
  // scaled_r = √(2ν) r / l
  if (scaled_r == 0.0) return 1.0;
  if (nu == 1.5) return (1.0 + scaled_r) * std::exp(-scaled_r);
  if (nu == 2.5) return (1.0 + scaled_r + scaled_r * scaled_r / 3.0) * std::exp(-scaled_r);
  const double value =
      std::pow(scaled_r, nu) * std::cyl_bessel_k(nu, scaled_r) / (std::tgamma(nu) * std::pow(2.0, nu - 1.0));
  return std::isfinite(value) ? value : 0.0;
}

double eval_unchecked(const KernelSpec& spec, PointRef x, PointRef y) {
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return spec.variance *
             std::exp(-squared_distance(x, y) / (2.0 * spec.lengthscale * spec.lengthscale));
    case KernelFamily::Matern: {
      const double r = std::sqrt(squared_distance(x, y));
      return spec.variance * matern_value(spec.nu, std::sqrt(2.0 * spec.nu) * r / spec.lengthscale);
    }
    case KernelFamily::Constant:
      return spec.variance;
    case KernelFamily::ExplicitMercer: {
      const Spectrum& s = *spec.spectrum;
      const VectorXd fx = s.feature_vector(x, s.size());
      const VectorXd fy = s.feature_vector(y, s.size());
      return (fx.array() * s.eigenvalues.array() * fy.array()).sum();
    }
  }
  return 0.0;
}

// Closed-form upper bound on ∫_a^∞ envelope(z) dz.
double envelope_integral(const DecayProfile& profile, double a) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile)) {
    return p->C_p * std::pow(a, 1.0 - p->beta_p) / (p->beta_p - 1.0);
  }
  const auto& e = std::get<ExponentialDecay>(profile);
  if (e.beta_e == 1.0) return e.C_e1 * std::exp(-e.C_e2 * a) / e.C_e2;
  const double s = 1.0 / e.beta_e;
  return e.C_e1 * s * std::pow(e.C_e2, -s) *
         boost::math::tgamma(s, e.C_e2 * std::pow(a, e.beta_e));
}

// Envelope is convex on [a, ∞).
bool envelope_convex_from(const DecayProfile& profile, double a) {
  if (std::holds_alternative<PolynomialDecay>(profile)) return true;
  const auto& e = std::get<ExponentialDecay>(profile);
  if (e.beta_e <= 1.0) return true;
  return e.C_e2 * e.beta_e * std::pow(a, e.beta_e) >= e.beta_e - 1.0;
}

// Σ_{m > start} envelope(m), as a tight upper bound.
double envelope_tail(const DecayProfile& profile, Index start, double scale, double tol) {
  constexpr Index kMaxDirectTerms = 10'000'000;
  constexpr Index kMinDirectTerms = 1000;
  double sum = 0.0;
  Index m = start;
  while (m - start < kMaxDirectTerms) {
    const double term = scale * decay_bound(profile, static_cast<double>(m + 1));
    if (term <= tol) break;
    if (m - start >= kMinDirectTerms && envelope_convex_from(profile, static_cast<double>(m) + 0.5)) break;
    sum += term;
    ++m;
  }
  // Midpoint rule overestimates sums of convex functions.
  const double a = envelope_convex_from(profile, static_cast<double>(m) + 0.5)
                       ? static_cast<double>(m) + 0.5
                       : static_cast<double>(m);
  return sum + scale * envelope_integral(profile, std::max(a, 0.5));
}

struct LineFit {
  double intercept;
  double slope;
  double residual;
};

LineFit least_squares(const VectorXd& x, const VectorXd& y) {
  const double xm = x.mean();
  const double ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  const double slope = sxy / sxx;
  const double intercept = ym - slope * xm;
  const VectorXd r = y.array() - (intercept + slope * x.array());
  return {intercept, slope, std::sqrt(r.squaredNorm() / static_cast<double>(x.size()))};
}

void check_fit_range(const VectorXd& eigenvalues, Index first, Index last) {
  if (first < 1 || last > eigenvalues.size() || last - first + 1 < 5)
    throw Error(Errc::InsufficientData, "fit range needs at least 5 stored eigenvalues");
  for (Index m = first; m <= last; ++m)
    if (!(eigenvalues[m - 1] > 0.0))
      throw Error(Errc::InsufficientData, "nonpositive eigenvalue at index " + std::to_string(m));
}

class NystromFeatureMap final : public FeatureMap {
 public:
  NystromFeatureMap(KernelSpec spec, PointSet grid, VectorXd sqrt_weights, MatrixXd vectors,
                    VectorXd values)
      : spec_(std::move(spec)),
        grid_(std::move(grid)),
        sqrt_weights_(std::move(sqrt_weights)),
        vectors_(std::move(vectors)),
        values_(std::move(values)) {}

  Index dimension() const override { return grid_.cols(); }
  Index capacity() const override { return vectors_.cols(); }

  void evaluate(PointRef x, Index count, Eigen::Ref<VectorXd> out) const override {
    const VectorXd kx = cross_covariance(spec_, grid_, x).cwiseProduct(sqrt_weights_);
    const double floor = values_.size() > 0 ? 1e-14 * values_[0] : 0.0;
    for (Index m = 0; m < count; ++m) {
      out[m] = values_[m] > floor ? vectors_.col(m).dot(kx) / values_[m] : 0.0;
    }
  }

  double max_diagonal(const VectorXd& eigenvalues) const override {
    // ψ² Σ λ_m with the empirical ψ over the grid.
    const double psi = (vectors_.array().colwise() / sqrt_weights_.array()).abs().maxCoeff();
    return psi * psi * eigenvalues.sum();
  }

 private:
  KernelSpec spec_;
  PointSet grid_;
  VectorXd sqrt_weights_;
  MatrixXd vectors_;
  VectorXd values_;
};

}  // namespace

// ---------------------------------------------------------------------------

Domain Domain::unit(Index dim) { return {VectorXd::Zero(dim), VectorXd::Ones(dim)}; }

bool Domain::contains(PointRef x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

PointSet regular_grid(const Domain& domain, Index points_per_dim) {
  const Index d = domain.dimension();
  if (points_per_dim < 1) throw Error(Errc::InvalidArgument, "grid needs at least one point per axis");
  Index total = 1;
  for (Index j = 0; j < d; ++j) total *= points_per_dim;
  PointSet grid(total, d);
  const VectorXd step = (domain.upper - domain.lower) / static_cast<double>(points_per_dim);
  for (Index i = 0; i < total; ++i) {
    Index rest = i;
    for (Index j = d - 1; j >= 0; --j) {
      const Index k = rest % points_per_dim;
      rest /= points_per_dim;
      grid(i, j) = domain.lower[j] + (static_cast<double>(k) + 0.5) * step[j];
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------

void validate(const DecayProfile& profile) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile)) {
    if (!(p->beta_p > 1.0)) throw Error(Errc::InvalidProfile, "polynomial decay needs beta_p > 1");
    if (!(p->C_p > 0.0)) throw Error(Errc::InvalidProfile, "polynomial decay needs C_p > 0");
    return;
  }
  const auto& e = std::get<ExponentialDecay>(profile);
  if (!(e.beta_e > 0.0)) throw Error(Errc::InvalidProfile, "exponential decay needs beta_e > 0");
  if (!(e.C_e1 > 0.0) || !(e.C_e2 > 0.0))
    throw Error(Errc::InvalidProfile, "exponential decay needs C_e1, C_e2 > 0");
}

double decay_bound(const DecayProfile& profile, double m) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile)) return p->C_p * std::pow(m, -p->beta_p);
  const auto& e = std::get<ExponentialDecay>(profile);
  return e.C_e1 * std::exp(-e.C_e2 * std::pow(m, e.beta_e));
}

DecayProfile scale_profile(const DecayProfile& profile, double factor) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile))
    return PolynomialDecay{p->C_p * factor, p->beta_p};
  auto e = std::get<ExponentialDecay>(profile);
  e.C_e1 *= factor;
  return e;
}

// ---------------------------------------------------------------------------

CosineFeatureMap::CosineFeatureMap(Index dim, Index count) : dim_(dim) {
  if (dim < 1) throw Error(Errc::InvalidArgument, "cosine basis needs dimension >= 1");
  indices_.reserve(static_cast<std::size_t>(count));
  std::vector<int> current(static_cast<std::size_t>(dim), 0);
  // Enumerate multi-indices of total degree s in lexicographic order.
  for (int degree = 0; static_cast<Index>(indices_.size()) < count; ++degree) {
    std::function<void(Index, int)> fill = [&](Index axis, int remaining) {
      if (static_cast<Index>(indices_.size()) >= count) return;
      if (axis == dim - 1) {
        current[static_cast<std::size_t>(axis)] = remaining;
        indices_.push_back(current);
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        current[static_cast<std::size_t>(axis)] = k;
        fill(axis + 1, remaining - k);
      }
    };
    fill(0, degree);
  }
}

void CosineFeatureMap::evaluate(PointRef x, Index count, Eigen::Ref<VectorXd> out) const {
  if (count > capacity()) throw Error(Errc::InsufficientSpectrum, "cosine basis too short");
  for (Index m = 0; m < count; ++m) {
    double value = 1.0;
    const auto& idx = indices_[static_cast<std::size_t>(m)];
    for (Index j = 0; j < dim_; ++j) {
      const int k = idx[static_cast<std::size_t>(j)];
      if (k != 0) value *= std::numbers::sqrt2 * std::cos(k * kPi * x[j]);
    }
    out[m] = value;
  }
}

double CosineFeatureMap::max_diagonal(const VectorXd& eigenvalues) const {
  // Every feature attains its sup norm at the origin.
  double total = 0.0;
  for (Index m = 0; m < eigenvalues.size(); ++m) {
    const auto& idx = indices_[static_cast<std::size_t>(m)];
    const auto active = std::count_if(idx.begin(), idx.end(), [](int k) { return k != 0; });
    total += eigenvalues[m] * std::pow(2.0, static_cast<double>(active));
  }
  return total;
}

VectorXd Spectrum::feature_vector(PointRef x, Index count) const {
  if (count > size() || count > features->capacity())
    throw Error(Errc::InsufficientSpectrum, "requested more features than stored");
  VectorXd out(count);
  features->evaluate(x, count, out);
  return out;
}

MatrixXd Spectrum::feature_matrix(const PointSet& points, Index count) const {
  if (count > size() || count > features->capacity())
    throw Error(Errc::InsufficientSpectrum, "requested more features than stored");
  MatrixXd phi(points.rows(), count);
  VectorXd row(count);
  for (Index i = 0; i < points.rows(); ++i) {
    features->evaluate(points.row(i).transpose(), count, row);
    phi.row(i) = row.transpose();
  }
  return phi;
}

void validate(const Spectrum& spectrum) {
  if (!spectrum.features) throw Error(Errc::InvalidArgument, "spectrum has no feature map");
  if (spectrum.features->capacity() < spectrum.size())
    throw Error(Errc::InvalidArgument, "feature map shorter than eigenvalue list");
  if (!(spectrum.feature_bound > 0.0)) throw Error(Errc::InvalidArgument, "feature bound must be > 0");
  for (Index m = 0; m < spectrum.size(); ++m) {
    if (spectrum.eigenvalues[m] < 0.0) throw Error(Errc::InvalidArgument, "negative eigenvalue");
    if (m > 0 && spectrum.eigenvalues[m] > spectrum.eigenvalues[m - 1])
      throw Error(Errc::InvalidArgument, "eigenvalues must be nonincreasing");
  }
  if (spectrum.decay) {
    validate(*spectrum.decay);
    for (Index m = 0; m < spectrum.size(); ++m) {
      const double envelope = decay_bound(*spectrum.decay, static_cast<double>(m + 1));
      if (spectrum.eigenvalues[m] > envelope * (1.0 + 1e-12))
        throw Error(Errc::InvalidProfile,
                    "eigenvalue " + std::to_string(m + 1) + " exceeds its decay envelope");
    }
  }
}

// ---------------------------------------------------------------------------

KernelSpec KernelSpec::squared_exponential(double lengthscale, Domain domain, double variance) {
  KernelSpec spec;
  spec.family = KernelFamily::SquaredExponential;
  spec.lengthscale = lengthscale;
  spec.variance = variance;
  spec.domain = std::move(domain);
  validate(spec);
  return spec;
}

KernelSpec KernelSpec::matern(double nu, double lengthscale, Domain domain, double variance) {
  KernelSpec spec;
  spec.family = KernelFamily::Matern;
  spec.nu = nu;
  spec.lengthscale = lengthscale;
  spec.variance = variance;
  spec.domain = std::move(domain);
  validate(spec);
  return spec;
}

KernelSpec KernelSpec::constant(double variance, Domain domain) {
  KernelSpec spec;
  spec.family = KernelFamily::Constant;
  spec.variance = variance;
  spec.domain = std::move(domain);
  validate(spec);
  return spec;
}

KernelSpec KernelSpec::mercer(std::shared_ptr<const Spectrum> spectrum, Domain domain) {
  KernelSpec spec;
  spec.family = KernelFamily::ExplicitMercer;
  spec.spectrum = std::move(spectrum);
  spec.domain = std::move(domain);
  validate(spec);
  spec.variance = kernel_bound(spec);
  return spec;
}

KernelSpec KernelSpec::mercer(const MercerRecipe& recipe, Index dim) {
  std::shared_ptr<const Spectrum> spectrum;
  if (recipe.profile) {
    const DecayProfile profile = recipe.normalize
                                     ? unit_bound_profile(*recipe.profile, recipe.truncation, dim)
                                     : *recipe.profile;
    spectrum = std::make_shared<const Spectrum>(fourier_spectrum(profile, recipe.truncation, dim));
  } else {
    VectorXd values = recipe.eigenvalues;
    if (recipe.normalize) {
      const CosineFeatureMap map(dim, values.size());
      values /= map.max_diagonal(values);
    }
    spectrum = std::make_shared<const Spectrum>(fourier_spectrum(values, dim));
  }
  KernelSpec spec = mercer(std::move(spectrum), Domain::unit(dim));
  spec.recipe = recipe;
  return spec;
}

void validate(const KernelSpec& spec) {
  if (spec.domain.lower.size() != spec.domain.upper.size() || spec.domain.dimension() < 1)
    throw Error(Errc::InvalidArgument, "domain bounds must have equal, positive dimension");
  if (!(spec.domain.lower.array() <= spec.domain.upper.array()).all())
    throw Error(Errc::InvalidArgument, "domain lower bound exceeds upper bound");
  if (!(spec.variance > 0.0)) throw Error(Errc::InvalidArgument, "variance must be > 0");
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      if (!(spec.lengthscale > 0.0)) throw Error(Errc::InvalidArgument, "lengthscale must be > 0");
      break;
    case KernelFamily::Matern:
      if (!(spec.lengthscale > 0.0)) throw Error(Errc::InvalidArgument, "lengthscale must be > 0");
      if (!(spec.nu > 0.5)) throw Error(Errc::InvalidArgument, "Matern smoothness nu must be > 1/2");
      break;
    case KernelFamily::Constant:
      break;
    case KernelFamily::ExplicitMercer:
      if (!spec.spectrum) throw Error(Errc::InvalidArgument, "Mercer kernel needs a spectrum");
      validate(*spec.spectrum);
      if (spec.spectrum->features->dimension() != spec.domain.dimension())
        throw Error(Errc::InvalidArgument, "spectrum and domain dimensions differ");
      break;
  }
}

double eval(const KernelSpec& spec, PointRef x, PointRef y) {
  check_point(spec, x);
  check_point(spec, y);
  return eval_unchecked(spec, x, y);
}

MatrixXd gram(const KernelSpec& spec, const PointSet& points) {
  check_points(spec, points);
  const Index n = points.rows();
  if (spec.family == KernelFamily::ExplicitMercer) {
    const Spectrum& s = *spec.spectrum;
    const MatrixXd phi = s.feature_matrix(points, s.size());
    MatrixXd k = phi * s.eigenvalues.asDiagonal() * phi.transpose();
    return (k + k.transpose()) / 2.0;
  }
  MatrixXd k(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      k(i, j) = eval_unchecked(spec, points.row(i).transpose(), points.row(j).transpose());
      k(j, i) = k(i, j);
    }
  }
  return k;
}

MatrixXd gram(const KernelSpec& spec, const PointSet& rows, const PointSet& cols) {
  check_points(spec, rows);
  check_points(spec, cols);
  if (spec.family == KernelFamily::ExplicitMercer) {
    const Spectrum& s = *spec.spectrum;
    return s.feature_matrix(rows, s.size()) * s.eigenvalues.asDiagonal() *
           s.feature_matrix(cols, s.size()).transpose();
  }
  MatrixXd k(rows.rows(), cols.rows());
  for (Index j = 0; j < cols.rows(); ++j)
    for (Index i = 0; i < rows.rows(); ++i)
      k(i, j) = eval_unchecked(spec, rows.row(i).transpose(), cols.row(j).transpose());
  return k;
}

VectorXd cross_covariance(const KernelSpec& spec, const PointSet& points, PointRef y) {
  check_points(spec, points);
  check_point(spec, y);
  if (spec.family == KernelFamily::ExplicitMercer) {
    const Spectrum& s = *spec.spectrum;
    const VectorXd weighted = s.eigenvalues.cwiseProduct(s.feature_vector(y, s.size()));
    return s.feature_matrix(points, s.size()) * weighted;
  }
  VectorXd k(points.rows());
  for (Index i = 0; i < points.rows(); ++i) k[i] = eval_unchecked(spec, points.row(i).transpose(), y);
  return k;
}

double kernel_bound(const KernelSpec& spec) {
  if (spec.family == KernelFamily::ExplicitMercer)
    return spec.spectrum->features->max_diagonal(spec.spectrum->eigenvalues);
  return spec.variance;
}

// ---------------------------------------------------------------------------

ProjectedSplit projected_split(const KernelSpec& full, std::shared_ptr<const Spectrum> spectrum,
                               Index D) {
  if (!spectrum || D < 0 || spectrum->size() < D)
    throw Error(Errc::InsufficientSpectrum,
                "projection onto " + std::to_string(D) + " features needs that many eigenpairs");
  ProjectedSplit split;
  split.projected = [spectrum, D](PointRef x, PointRef y) {
    if (D == 0) return 0.0;
    const VectorXd fx = spectrum->feature_vector(x, D);
    const VectorXd fy = spectrum->feature_vector(y, D);
    return (fx.array() * spectrum->eigenvalues.head(D).array() * fy.array()).sum();
  };
  split.orthogonal = [full, projected = split.projected](PointRef x, PointRef y) {
    return eval(full, x, y) - projected(x, y);
  };
  return split;
}

ProjectedSplit projected_split(std::shared_ptr<const Spectrum> spectrum, Index D) {
  if (!spectrum) throw Error(Errc::InsufficientSpectrum, "null spectrum");
  const KernelSpec full = KernelSpec::mercer(spectrum, Domain::unit(spectrum->features->dimension()));
  return projected_split(full, std::move(spectrum), D);
}

MatrixXd projected_gram(const Spectrum& spectrum, const PointSet& points, Index D) {
  const MatrixXd phi = spectrum.feature_matrix(points, D);
  return phi * spectrum.eigenvalues.head(D).asDiagonal() * phi.transpose();
}

double tail_mass(const Spectrum& spectrum, Index D, double truncation_tol) {
  if (D < 0) throw Error(Errc::InvalidArgument, "D must be nonnegative");
  const double psi2 = spectrum.feature_bound * spectrum.feature_bound;
  const Index n = spectrum.size();
  double stored = 0.0;
  // Smallest terms first.
  for (Index m = n - 1; m >= D; --m) stored += spectrum.eigenvalues[m] * psi2;
  if (spectrum.finite_rank) return stored;
  if (spectrum.decay) return stored + envelope_tail(*spectrum.decay, std::max(D, n), psi2, truncation_tol);
  if (n == 0 || spectrum.eigenvalues[n - 1] * psi2 > truncation_tol)
    throw Error(Errc::UnboundedTail, "no decay profile and stored eigenvalues have not converged");
  return stored;
}

Index truncation_for_tail(const Spectrum& spectrum, double tol) {
  // tail_mass is nonincreasing in D.
  Index lo = 0;
  Index hi = std::max<Index>(spectrum.size(), 1);
  while (tail_mass(spectrum, hi) > tol) {
    lo = hi;
    hi *= 2;
    if (hi > (Index{1} << 40)) throw Error(Errc::UnboundedTail, "tail never falls below tolerance");
  }
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (tail_mass(spectrum, mid) <= tol)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// ---------------------------------------------------------------------------

Spectrum fourier_spectrum(const DecayProfile& profile, Index count, Index dim) {
  validate(profile);
  if (count < 1) throw Error(Errc::InvalidArgument, "spectrum needs at least one eigenpair");
  VectorXd values(count);
  for (Index m = 0; m < count; ++m) values[m] = decay_bound(profile, static_cast<double>(m + 1));
  Spectrum s = fourier_spectrum(values, dim);
  s.decay = profile;
  return s;
}

Spectrum fourier_spectrum(const VectorXd& eigenvalues, Index dim) {
  if (eigenvalues.size() < 1) throw Error(Errc::InvalidArgument, "spectrum needs at least one eigenpair");
  Spectrum s;
  s.eigenvalues = eigenvalues;
  s.features = std::make_shared<const CosineFeatureMap>(dim, eigenvalues.size());
  s.feature_bound = std::pow(std::numbers::sqrt2, static_cast<double>(dim));
  s.finite_rank = true;
  validate(s);
  return s;
}

DecayProfile unit_bound_profile(const DecayProfile& profile, Index count, Index dim) {
  validate(profile);
  VectorXd values(count);
  for (Index m = 0; m < count; ++m) values[m] = decay_bound(profile, static_cast<double>(m + 1));
  const CosineFeatureMap map(dim, count);
  return scale_profile(profile, 1.0 / map.max_diagonal(values));
}

Spectrum nystrom_spectrum(const KernelSpec& spec, const PointSet& grid, const VectorXd& weights,
                          Index num_eigs) {
  const Index n = grid.rows();
  if (num_eigs > n)
    throw Error(Errc::GridTooSmall,
                std::to_string(num_eigs) + " eigenpairs requested from a " + std::to_string(n) + "-point grid");
  if (weights.size() != n || !(weights.array() > 0.0).all())
    throw Error(Errc::InvalidArgument, "quadrature weights must be positive, one per grid point");
  const VectorXd sqrt_w = weights.cwiseSqrt();
  const MatrixXd weighted = sqrt_w.asDiagonal() * gram(spec, grid) * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) throw Error(Errc::NumericalHealth, "eigendecomposition failed");

  // Eigen returns ascending order.
  VectorXd values(num_eigs);
  MatrixXd vectors(n, num_eigs);
  for (Index m = 0; m < num_eigs; ++m) {
    values[m] = std::max(solver.eigenvalues()[n - 1 - m], 0.0);
    vectors.col(m) = solver.eigenvectors().col(n - 1 - m);
  }
  for (Index m = 1; m < num_eigs; ++m) values[m] = std::min(values[m], values[m - 1]);

  Spectrum s;
  s.eigenvalues = values;
  s.feature_bound =
      num_eigs > 0 ? (vectors.array().colwise() / sqrt_w.array()).abs().maxCoeff() : 1.0;
  s.features = std::make_shared<const NystromFeatureMap>(spec, grid, sqrt_w, vectors, values);
  return s;
}

Spectrum nystrom_spectrum(const KernelSpec& spec, const PointSet& grid, Index num_eigs) {
  const VectorXd weights = VectorXd::Constant(grid.rows(), 1.0 / static_cast<double>(grid.rows()));
  return nystrom_spectrum(spec, grid, weights, num_eigs);
}

// ---------------------------------------------------------------------------

DecayFit fit_polynomial_decay(const VectorXd& eigenvalues, Index first, Index last) {
  check_fit_range(eigenvalues, first, last);
  const Index count = last - first + 1;
  VectorXd log_m(count), log_l(count);
  for (Index i = 0; i < count; ++i) {
    log_m[i] = std::log(static_cast<double>(first + i));
    log_l[i] = std::log(eigenvalues[first + i - 1]);
  }
  const LineFit fit = least_squares(log_m, log_l);
  const double beta = -fit.slope;
  double C = 0.0;
  for (Index i = 0; i < count; ++i) C = std::max(C, std::exp(log_l[i] + beta * log_m[i]));
  return {PolynomialDecay{C, beta}, fit.residual};
}

DecayFit fit_exponential_decay(const VectorXd& eigenvalues, Index first, Index last) {
  check_fit_range(eigenvalues, first, last);
  const Index count = last - first + 1;
  VectorXd log_l(count);
  for (Index i = 0; i < count; ++i) log_l[i] = std::log(eigenvalues[first + i - 1]);

  std::optional<DecayFit> best;
  for (int step = 1; step <= 20; ++step) {
    const double beta = 0.1 * step;
    VectorXd powers(count);
    for (Index i = 0; i < count; ++i) powers[i] = std::pow(static_cast<double>(first + i), beta);
    const LineFit fit = least_squares(powers, log_l);
    const double rate = -fit.slope;
    if (!(rate > 0.0)) continue;
    if (best && !(fit.residual < best->residual)) continue;
    double C = 0.0;
    for (Index i = 0; i < count; ++i) C = std::max(C, std::exp(log_l[i] + rate * powers[i]));
    best = DecayFit{ExponentialDecay{C, rate, beta}, fit.residual};
  }
  if (!best) throw Error(Errc::InsufficientData, "eigenvalues are not decaying over the fit range");
  return *best;
}

DecayProfile fit_decay_profile(const Spectrum& spectrum, Index first, Index last) {
  const DecayFit poly = fit_polynomial_decay(spectrum.eigenvalues, first, last);
  std::optional<DecayFit> expo;
  try {
    expo = fit_exponential_decay(spectrum.eigenvalues, first, last);
  } catch (const Error&) {
  }
  const bool poly_valid = std::get<PolynomialDecay>(poly.profile).beta_p > 1.0;
  if (expo && (!poly_valid || expo->residual < poly.residual)) return expo->profile;
  if (!poly_valid) throw Error(Errc::InsufficientData, "no valid decay profile fits the range");
  return poly.profile;
}

}  // namespace gpig

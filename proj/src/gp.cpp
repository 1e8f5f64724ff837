#include "gpig/gp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gpig {

namespace {

constexpr double kHealthFloor = -1e-6;

double clamp_variance(double raw, double prior) {
  if (raw < kHealthFloor)
    throw Error(Errc::NumericalHealth, "posterior variance " + std::to_string(raw) + " is negative");
  return std::clamp(raw, 0.0, prior);
}

void check_noise(double noise) {
  if (!(noise > 0.0)) throw Error(Errc::InvalidArgument, "noise variance tau must be > 0");
}

}  // namespace

GPState::GPState(KernelSpec kernel, double noise)
    : kernel_(std::move(kernel)),
      noise_(noise),
      points_(0, kernel_.domain.dimension()),
      responses_(0),
      solved_(0) {
  check_noise(noise);
  factor_.lower.resize(0, 0);
}

GPState GPState::from_data(KernelSpec kernel, double noise, PointSet points, VectorXd responses) {
  if (points.rows() != responses.size())
    throw Error(Errc::InvalidArgument, "one response per point required");
  GPState state(std::move(kernel), noise);
  MatrixXd k = gram(state.kernel_, points);
  k.diagonal().array() += noise;
  state.factor_ = cholesky(k);
  state.solved_ = state.factor_.solve(responses);
  state.points_ = std::move(points);
  state.responses_ = std::move(responses);
  return state;
}

Posterior posterior(const GPState& state, PointRef x) {
  const double prior = eval(state.kernel(), x, x);
  if (state.size() == 0) return {0.0, prior};
  const VectorXd kx = cross_covariance(state.kernel(), state.points(), x);
  const VectorXd v = state.factor().half_solve(kx);
  return {kx.dot(state.solved()), clamp_variance(prior - v.squaredNorm(), prior)};
}

GPState condition(const GPState& state, PointRef x, double y) {
  const double kxx = eval(state.kernel_, x, x);
  const VectorXd kx = state.size() > 0 ? cross_covariance(state.kernel_, state.points_, x)
                                       : VectorXd(0);
  GPState next = state;
  next.factor_ = extend_factor(state.factor_, kx, kxx + state.noise_);
  const Index t = state.size();
  next.points_.conservativeResize(t + 1, Eigen::NoChange);
  next.points_.row(t) = x.transpose();
  next.responses_.conservativeResize(t + 1);
  next.responses_[t] = y;
  next.solved_ = next.factor_.solve(next.responses_);
  return next;
}

MatrixXd posterior_covariance(const GPState& state, const PointSet& points) {
  MatrixXd prior = gram(state.kernel(), points);
  if (state.size() == 0) return prior;
  const MatrixXd cross = gram(state.kernel(), state.points(), points);
  const MatrixXd v = state.factor().half_solve(cross);
  prior.noalias() -= v.transpose() * v;
  return prior;
}

// ---------------------------------------------------------------------------

GridPosterior::GridPosterior(const KernelSpec& kernel, PointSet grid, double noise,
                             bool track_covariance)
    : GridPosterior(std::make_shared<const MatrixXd>(gram(kernel, grid)), grid, noise,
                    track_covariance) {}

GridPosterior::GridPosterior(std::shared_ptr<const MatrixXd> prior_gram, PointSet grid,
                             double noise, bool track_covariance)
    : prior_(std::move(prior_gram)),
      grid_(std::move(grid)),
      noise_(noise),
      track_covariance_(track_covariance) {
  check_noise(noise);
  if (grid_.rows() == 0) throw Error(Errc::EmptyGrid, "candidate set is empty");
  if (prior_->rows() != grid_.rows() || prior_->cols() != grid_.rows())
    throw Error(Errc::InvalidArgument, "prior Gram matrix does not match the grid");
  mean_ = VectorXd::Zero(grid_.rows());
  variance_ = prior_->diagonal();
  if (track_covariance_) covariance_ = *prior_;
}

MatrixXd GridPosterior::covariance() const {
  if (track_covariance_) return covariance_;
  MatrixXd cov = *prior_;
  if (count_ > 0) cov.noalias() -= factors_.leftCols(count_) * factors_.leftCols(count_).transpose();
  return cov;
}

double GridPosterior::observe(Index index, double y) {
  if (index < 0 || index >= size()) throw Error(Errc::InvalidArgument, "grid index out of range");
  const double before = variance_[index];
  const double s = before + noise_;
  VectorXd column;
  if (track_covariance_) {
    column = covariance_.col(index);
  } else {
    column = prior_->col(index);
    if (count_ > 0) column.noalias() -= factors_.leftCols(count_) * factors_.row(index).head(count_).transpose();
  }

  mean_ += column * ((y - mean_[index]) / s);
  if (track_covariance_) {
    covariance_.noalias() -= column * (column.transpose() / s);
  } else {
    if (factors_.cols() <= count_) factors_.conservativeResize(size(), std::max<Index>(16, 2 * count_));
    factors_.col(count_) = column / std::sqrt(s);
  }
  variance_ -= column.cwiseAbs2() / s;
  for (Index i = 0; i < size(); ++i) variance_[i] = clamp_variance(variance_[i], (*prior_)(i, i));
  ++count_;
  return before;
}

// ---------------------------------------------------------------------------

double SampledFunction::operator()(PointRef x) const {
  const VectorXd phi = spectrum->feature_vector(x, truncation);
  return (weights.array() * spectrum->eigenvalues.head(truncation).array().sqrt() * phi.array()).sum();
}

VectorXd SampledFunction::evaluate(const PointSet& points) const {
  const VectorXd scaled =
      weights.cwiseProduct(spectrum->eigenvalues.head(truncation).cwiseSqrt());
  return spectrum->feature_matrix(points, truncation) * scaled;
}

namespace {

void check_truncation(const std::shared_ptr<const Spectrum>& spectrum, Index D) {
  if (!spectrum || D < 1 || D > spectrum->size())
    throw Error(Errc::InsufficientSpectrum,
                "sampling with D = " + std::to_string(D) + " needs that many stored eigenpairs");
}

}  // namespace

SampledFunction sample_gp(std::shared_ptr<const Spectrum> spectrum, Index D, Rng& rng) {
  check_truncation(spectrum, D);
  SampledFunction f;
  f.spectrum = std::move(spectrum);
  f.truncation = D;
  f.weights = standard_normal(rng, D);
  f.norm_estimate = f.weights.squaredNorm();
  return f;
}

SampledFunction sample_gp(std::shared_ptr<const Spectrum> spectrum, Index D, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_gp(std::move(spectrum), D, rng);
}

SampledFunction sample_rkhs(std::shared_ptr<const Spectrum> spectrum, Index D, double B, Rng& rng) {
  check_truncation(spectrum, D);
  if (!(B > 0.0)) throw Error(Errc::InvalidArgument, "RKHS norm bound B must be > 0");
  VectorXd direction = standard_normal(rng, D);
  while (direction.norm() == 0.0) direction = standard_normal(rng, D);
  SampledFunction f;
  f.spectrum = std::move(spectrum);
  f.truncation = D;
  f.weights = direction * (B / direction.norm());
  f.norm_estimate = f.weights.squaredNorm();
  return f;
}

SampledFunction sample_rkhs(std::shared_ptr<const Spectrum> spectrum, Index D, double B,
                            std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_rkhs(std::move(spectrum), D, B, rng);
}

}  // namespace gpig

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

#include "gpig/bandit.hpp"
#include "gpig/error.hpp"
#include "gpig/infogain.hpp"

using namespace gpig;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

PolicyConfig bayesian_ucb() {
  PolicyConfig c;
  c.algorithm = Algorithm::UCB;
  c.setting = Setting::Bayesian;
  return c;
}

RegretTrace fake_trace(std::vector<double> cum) {
  RegretTrace tr;
  tr.horizon = static_cast<Index>(cum.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < cum.size(); ++i) {
    RegretStep s;
    s.t = static_cast<Index>(i + 1);
    s.inst_regret = cum[i] - prev;
    s.cum_regret = cum[i];
    prev = cum[i];
    tr.steps.push_back(s);
  }
  return tr;
}

}  // namespace

TEST_CASE("frequentist width") {
  PolicyConfig c;
  c.setting = Setting::Frequentist;
  c.norm_bound = 1.0;
  c.noise_scale = 1.0;
  c.delta = 1.0;
  CHECK(beta_schedule(c, 1, 0.0) == doctest::Approx(1.0 + std::sqrt(2.0)));
  c.delta = 0.1;
  double previous = 0.0;
  for (double g : {0.0, 0.5, 2.0, 10.0}) {
    const double w = beta_schedule(c, 5, g);
    CHECK(w >= previous);
    previous = w;
  }
  PolicyConfig tighter = c;
  tighter.delta = 0.01;
  CHECK(beta_schedule(tighter, 5, 1.0) >= beta_schedule(c, 5, 1.0));
  CHECK_THROWS_AS(beta_schedule(c, 5, std::nullopt), Error);
}

TEST_CASE("bayesian width") {
  PolicyConfig c = bayesian_ucb();
  c.width_constant = 1.0;
  c.delta = std::numbers::pi * std::numbers::pi / (3.0 * std::numbers::e);
  CHECK(beta_schedule(c, 1, std::nullopt) == doctest::Approx(std::sqrt(2.0)));
  c.delta = 0.1;
  CHECK(beta_schedule(c, 10, std::nullopt) > beta_schedule(c, 2, std::nullopt));
}

TEST_CASE("policy config validation") {
  PolicyConfig c;
  c.delta = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  c.delta = 0.5;
  c.setting = Setting::Frequentist;
  c.norm_bound = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("ucb_select") {
  const VectorXd mu = vec({0.1, 0.5, 0.3});
  const VectorXd var = vec({1.0, 0.01, 0.04});
  CHECK(ucb_select(mu, var, 1.0) == 0);
  CHECK(ucb_select(mu, var, 0.0) == 1);
  CHECK(ucb_select((mu.array() + 7.0).matrix(), var, 1.0) == 0);
  CHECK(ucb_select(VectorXd(3 * mu), VectorXd(9 * var), 1.0) == 0);
  CHECK_THROWS_AS(ucb_select(VectorXd(0), VectorXd(0), 1.0), Error);

  const auto k = KernelSpec::squared_exponential(0.2, Domain::unit(1));
  CHECK(ucb_select(GPState(k, 0.1), 2.0, regular_grid(Domain::unit(1), 9)) == 0);
}

TEST_CASE("ts_select degenerate cases") {
  Rng rng = make_rng(41);
  CHECK(ts_select(vec({0.1, 0.5, 0.3}), MatrixXd::Identity(3, 3), 0.0, rng) == 1);
  const auto one = KernelSpec::constant(1.0, Domain::unit(1));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(ts_select(GPState(one, 0.1), 1.0, regular_grid(Domain::unit(1), 6), seed) == 0);
  const auto k = KernelSpec::squared_exponential(0.3, Domain::unit(1));
  CHECK(ts_select(GPState(k, 0.1), 1.0, regular_grid(Domain::unit(1), 6), 5) ==
        ts_select(GPState(k, 0.1), 1.0, regular_grid(Domain::unit(1), 6), 5));
}

TEST_CASE("ts_select selection frequencies match a direct simulation") {
  const VectorXd mu = vec({0.3, 0.1, 0.0});
  MatrixXd cov(3, 3);
  cov << 1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 0.6;

  // Oracle: 10⁶ joint draws through an independent generator and factor.
  const Eigen::MatrixXd L = Eigen::LLT<MatrixXd>(cov).matrixL();
  std::mt19937 gen(2024);
  std::normal_distribution<double> normal;
  const int oracle_n = 1000000;
  int wins = 0;
  for (int i = 0; i < oracle_n; ++i) {
    const Eigen::Vector3d z(normal(gen), normal(gen), normal(gen));
    const Eigen::Vector3d f = mu + L * z;
    Index best = 0;
    for (Index j = 1; j < 3; ++j)
      if (f[j] > f[best]) best = j;
    wins += best == 0;
  }
  const double p = static_cast<double>(wins) / oracle_n;

  const int n = 10000;
  int hits = 0;
  for (int s = 0; s < n; ++s) {
    Rng rng = make_rng(static_cast<std::uint64_t>(s));
    hits += ts_select(mu, cov, 1.0, rng) == 0;
  }
  const double freq = static_cast<double>(hits) / n;
  CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("run_policy on a constant objective has zero regret") {
  const auto k = KernelSpec::squared_exponential(0.2, Domain::unit(1));
  const PolicyProblem problem(k, regular_grid(Domain::unit(1), 32), 0.05);
  for (Algorithm a : {Algorithm::UCB, Algorithm::TS}) {
    PolicyConfig c = bayesian_ucb();
    c.algorithm = a;
    const auto tr = run_policy(c, VectorXd::Constant(32, 0.7), problem, 30, 3);
    CHECK(tr.final_regret() == 0.0);
  }
}

TEST_CASE("noiseless two-armed UCB") {
  const auto k = KernelSpec::squared_exponential(0.05, Domain::unit(1));
  PointSet grid(2, 1);
  grid << 0.0, 1.0;
  const PolicyProblem problem(k, grid, 1e-8);
  const auto tr = run_policy(bayesian_ucb(), vec({1.0, 0.0}), problem, 20, 9);
  CHECK(tr.steps[0].index == 0);
  CHECK(tr.steps[1].index == 1);
  for (std::size_t t = 2; t < tr.steps.size(); ++t) CHECK(tr.steps[t].index == 0);
  for (std::size_t t = 1; t < tr.steps.size(); ++t) CHECK(tr.steps[t].cum_regret == doctest::Approx(1.0));
}

TEST_CASE("run_policy traces") {
  const auto spec = std::make_shared<const Spectrum>(
      fourier_spectrum(unit_bound_profile(PolynomialDecay{1.0, 2.0}, 128), 128));
  const auto k = KernelSpec::mercer(spec, Domain::unit(1));
  const PointSet grid = regular_grid(Domain::unit(1), 64);
  const PolicyProblem problem(k, grid, 0.01);
  const VectorXd f = sample_gp(spec, 128, 17).evaluate(grid);

  SUBCASE("determinism and bookkeeping") {
    for (Algorithm a : {Algorithm::UCB, Algorithm::TS}) {
      PolicyConfig c = bayesian_ucb();
      c.algorithm = a;
      const auto one = run_policy(c, f, problem, 60, 5);
      const auto two = run_policy(c, f, problem, 60, 5);
      REQUIRE(one.steps.size() == 60);
      double running = 0.0;
      for (std::size_t t = 0; t < 60; ++t) {
        CHECK(one.steps[t].index == two.steps[t].index);
        CHECK(one.steps[t].observation == two.steps[t].observation);
        CHECK(one.steps[t].inst_regret >= 0.0);
        running += one.steps[t].inst_regret;
        CHECK(std::abs(one.steps[t].cum_regret - running) <= 1e-10);
      }
      const double c1 = c1_constant(0.01);
      CHECK(one.cumulative_variance() <= c1 * one.final_gain() + 1e-10);
    }
  }
  SUBCASE("zero width makes UCB and TS identical") {
    PolicyConfig u = bayesian_ucb();
    u.width_constant = 0.0;
    PolicyConfig t = u;
    t.algorithm = Algorithm::TS;
    const auto a = run_policy(u, f, problem, 40, 8);
    const auto b = run_policy(t, f, problem, 40, 8);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a.steps[i].index == b.steps[i].index);
  }
  SUBCASE("frequentist widths") {
    PolicyConfig c;
    c.setting = Setting::Frequentist;
    c.noise_scale = 0.1;
    const VectorXd g = sample_rkhs(spec, 128, 1.0, 4).evaluate(grid);
    const auto theorem = run_policy(c, g, problem, 20, 1);
    c.gamma_source = GammaSource::Empirical;
    const auto empirical = run_policy(c, g, problem, 20, 1);
    CHECK(theorem.steps[0].beta == doctest::Approx(empirical.steps[0].beta));
    for (std::size_t i = 1; i < 20; ++i) CHECK(empirical.steps[i].beta >= empirical.steps[i - 1].beta);
    CHECK(theorem.final_beta() >= empirical.final_beta());

    const PolicyProblem se(KernelSpec::squared_exponential(0.2, Domain::unit(1)), grid, 0.01);
    c.gamma_source = GammaSource::Theorem3Bound;
    CHECK_THROWS_AS(run_policy(c, g, se, 5, 1), Error);
  }
}

TEST_CASE("regret summary") {
  {
    const auto rows = regret_summary({fake_trace({0.5, 1.0, 2.0})});
    CHECK(rows[2].median == 2.0);
    CHECK(rows[2].mean == 2.0);
    CHECK(rows[1].q25 == 1.0);
  }
  {
    const auto rows = regret_summary({fake_trace({1.0, 2.0}), fake_trace({1.0, 4.0})});
    CHECK(rows[1].median == 3.0);
    CHECK(rows[1].mean == 3.0);
  }
  {
    const auto a = fake_trace({1.0, 5.0}), b = fake_trace({0.0, 2.0}), c = fake_trace({2.0, 3.0});
    CHECK(regret_summary({a, b, c})[1].median == regret_summary({c, a, b})[1].median);
  }
  CHECK_THROWS_AS(regret_summary({fake_trace({1.0}), fake_trace({1.0, 2.0})}), Error);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
}

#include "gpig/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "gpig/gp.hpp"
#include "gpig/io.hpp"
#include "gpig/numerics.hpp"
#include "gpig/rng.hpp"

namespace gpig {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kBoundSlack = 1e-8;

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
  throw Error(Errc::ConfigError, field + ": " + message);
}

template <typename T>
T get_field(const json& j, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    config_error(field, "has the wrong type");
  }
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Gamma: return "gamma";
    case Command::Regret: return "regret";
    case Command::Spectrum: return "spectrum";
    case Command::Verify: return "verify";
  }
  return "";
}

json default_kernel_json() {
  return {{"family", "mercer"},
          {"profile", {{"type", "polynomial"}, {"C_p", 1.0}, {"beta_p", 2.0}}},
          {"truncation", 1024},
          {"normalize", true}};
}

// Files written by one command; removed again if the command fails.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  void write(const std::string& name, const std::string& contents) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::ConfigError, "out: cannot write " + path.string());
    written_.push_back(path);
    out << contents;
  }

  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

// Number of leading eigenvalues above round-off.
Index numerical_rank(const VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0) return 0;
  const double floor = 1e-12 * eigenvalues[0];
  Index rank = 0;
  while (rank < eigenvalues.size() && eigenvalues[rank] > floor) ++rank;
  return rank;
}

// Fit range [3, numerical rank].
std::pair<Index, Index> auto_fit_range(const VectorXd& eigenvalues) {
  return {std::min<Index>(3, eigenvalues.size()), numerical_rank(eigenvalues)};
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Index ExperimentConfig::resolved_grid_size() const {
  if (grid_size > 0) return grid_size;
  switch (kernel.domain.dimension()) {
    case 1: return 512;
    case 2: return 64;
    default: return 16;
  }
}

ExperimentConfig config_from_json(Command command, const json& j) {
  ExperimentConfig c;
  c.command = command;
  c.kernel_json = j.contains("kernel") ? j.at("kernel") : default_kernel_json();
  c.kernel = kernel_from_json(c.kernel_json);

  c.noise = get_field(j, "tau", c.noise);
  if (!(c.noise > 0.0)) config_error("tau", "must be > 0");

  if (j.contains("horizons")) {
    c.horizons = get_field(j, "horizons", c.horizons);
  } else if (j.contains("horizon")) {
    c.horizons = {get_field(j, "horizon", Index{1})};
  } else if (command == Command::Regret) {
    c.horizons = {500};
  }
  if (c.horizons.empty()) config_error("horizons", "must not be empty");
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    if (c.horizons[i] < 1) config_error("horizons", "every horizon must be >= 1");
    if (i > 0 && c.horizons[i] <= c.horizons[i - 1]) config_error("horizons", "must be strictly increasing");
  }

  c.grid_size = get_field(j, "grid_size", c.grid_size);
  if (c.grid_size < 0) config_error("grid_size", "must be positive");
  c.seeds = get_field(j, "seeds", c.seeds);
  if (c.seeds.empty()) config_error("seeds", "must not be empty");
  c.master_seed = get_field(j, "seed", c.master_seed);

  const std::string algo = get_field<std::string>(j, "algo", "ucb");
  if (algo == "ucb") c.policy.algorithm = Algorithm::UCB;
  else if (algo == "ts") c.policy.algorithm = Algorithm::TS;
  else config_error("algo", "must be 'ucb' or 'ts'");
  const std::string setting = get_field<std::string>(j, "setting", "bayesian");
  if (setting == "bayesian") c.policy.setting = Setting::Bayesian;
  else if (setting == "frequentist") c.policy.setting = Setting::Frequentist;
  else config_error("setting", "must be 'bayesian' or 'frequentist'");
  const std::string gamma_source = get_field<std::string>(j, "gamma_source", "theorem3");
  if (gamma_source == "theorem3") c.policy.gamma_source = GammaSource::Theorem3Bound;
  else if (gamma_source == "empirical") c.policy.gamma_source = GammaSource::Empirical;
  else config_error("gamma_source", "must be 'theorem3' or 'empirical'");
  c.policy.delta = get_field(j, "delta", c.policy.delta);
  if (!(c.policy.delta > 0.0 && c.policy.delta < 1.0)) config_error("delta", "must lie in (0, 1)");
  c.policy.norm_bound = get_field(j, "norm_bound", c.policy.norm_bound);
  if (!(c.policy.norm_bound > 0.0)) config_error("norm_bound", "must be > 0");
  c.policy.noise_scale = get_field(j, "noise_scale", c.policy.noise_scale);
  if (!(c.policy.noise_scale > 0.0)) config_error("noise_scale", "must be > 0");
  c.policy.width_constant = get_field(j, "width_constant", c.policy.width_constant);
  if (!(c.policy.width_constant >= 0.0)) config_error("width_constant", "must be >= 0");

  c.num_eigs = get_field(j, "num_eigs", c.num_eigs);
  if (c.num_eigs < 1) config_error("num_eigs", "must be >= 1");
  if (j.contains("fit_range")) {
    const auto range = get_field(j, "fit_range", std::vector<Index>{});
    if (range.size() != 2 || range[0] < 1 || range[1] < range[0] + 4)
      config_error("fit_range", "must be [first, last] with at least 5 indices, first >= 1");
    c.fit_first = range[0];
    c.fit_last = range[1];
  }
  for (const auto& f : get_field(j, "fixtures", std::vector<std::string>{})) c.fixtures.emplace_back(f);
  c.out = get_field<std::string>(j, "out", c.out.string());
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["command"] = command_name(c.command);
  j["kernel"] = c.kernel_json;
  j["tau"] = c.noise;
  j["horizons"] = c.horizons;
  j["grid_size"] = c.resolved_grid_size();
  j["seeds"] = c.seeds;
  j["seed"] = c.master_seed;
  if (c.command == Command::Regret) {
    j["algo"] = c.policy.algorithm == Algorithm::UCB ? "ucb" : "ts";
    j["setting"] = c.policy.setting == Setting::Bayesian ? "bayesian" : "frequentist";
    j["gamma_source"] = c.policy.gamma_source == GammaSource::Theorem3Bound ? "theorem3" : "empirical";
    j["delta"] = c.policy.delta;
    j["norm_bound"] = c.policy.norm_bound;
    j["noise_scale"] = c.policy.noise_scale;
    j["width_constant"] = c.policy.width_constant;
  }
  if (c.command == Command::Spectrum || c.command == Command::Gamma) {
    j["num_eigs"] = c.num_eigs;
    if (c.fit_first > 0) j["fit_range"] = {c.fit_first, c.fit_last};
  }
  return j;
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) config_error("out", "cannot create directory " + dir.string());
  const fs::path probe = dir / ".gpig_write_probe";
  {
    std::ofstream out(probe);
    if (!out) config_error("out", "directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

double loglog_slope(const std::vector<Index>& horizons, const std::vector<double>& values) {
  if (horizons.size() < 2 || horizons.size() != values.size()) return 0.0;
  const auto n = static_cast<Index>(horizons.size());
  VectorXd x(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = std::log(static_cast<double>(horizons[static_cast<std::size_t>(i)]));
    y[i] = std::log(values[static_cast<std::size_t>(i)]);
  }
  const double xm = x.mean(), ym = y.mean();
  return ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
}

// ---------------------------------------------------------------------------
// gamma

GammaSweepResult run_gamma_sweep(const ExperimentConfig& config) {
  prepare_output_dir(config.out);
  OutputSet outputs(config.out);
  const KernelSpec& kernel = config.kernel;
  const PointSet grid = regular_grid(kernel.domain, config.resolved_grid_size());
  const Index t_max = config.horizons.back();
  const double k_bar = kernel_bound(kernel);

  GammaSweepResult result;
  result.trace = greedy_gamma(kernel, grid, t_max, config.noise);

  // Exact spectrum for Mercer kernels, Nyström estimate otherwise.
  std::shared_ptr<const Spectrum> spectrum;
  DecayProfile profile;
  if (kernel.family == KernelFamily::ExplicitMercer && kernel.spectrum->decay) {
    spectrum = kernel.spectrum;
    profile = *spectrum->decay;
    result.certified = true;
    result.fitted_profile = profile;
    if (spectrum->size() >= 5)
      result.fitted_profile = fit_decay_profile(*spectrum, 1, std::min<Index>(spectrum->size(), 50));
  } else {
    Spectrum estimate = nystrom_spectrum(kernel, grid, std::min(config.num_eigs, grid.rows()));
    auto [first, last] = config.fit_first > 0 ? std::pair{config.fit_first, config.fit_last}
                                              : auto_fit_range(estimate.eigenvalues);
    last = std::min(last, estimate.size());
    if (config.fit_first == 0 && last - first + 1 < 5) {
      // Numerically finite rank: keep the positive eigenvalues and cover
      // them with an exponential envelope.
      estimate.eigenvalues.conservativeResize(std::max<Index>(numerical_rank(estimate.eigenvalues), 1));
      estimate.finite_rank = true;
      double c = 0.0;
      for (Index m = 0; m < estimate.size(); ++m)
        c = std::max(c, estimate.eigenvalues[m] * std::exp(static_cast<double>(m + 1)));
      profile = ExponentialDecay{std::max(c, 1e-300), 1.0, 1.0};
    } else {
      profile = fit_decay_profile(estimate, first, last);
    }
    estimate.decay = profile;
    spectrum = std::make_shared<const Spectrum>(std::move(estimate));
    result.fitted_profile = profile;
  }

  std::vector<double> gammas;
  for (Index T : config.horizons) {
    const BoundReport b = evaluate_bounds(*spectrum, profile, k_bar, config.noise, T);
    GammaRow row{T, result.trace.cumulative_gain[T - 1], b.D_star, b.theorem3, b.corollary};
    gammas.push_back(row.empirical_gamma);
    if (result.certified &&
        (row.empirical_gamma > row.theorem3_bound + kBoundSlack ||
         row.empirical_gamma > row.corollary_bound + kBoundSlack))
      result.bounds_hold = false;
    result.rows.push_back(row);
  }
  result.trace.D_star = result.rows.back().D_star;
  result.trace.theorem3_bound_at_T = result.rows.back().theorem3_bound;
  result.trace.corollary_bound_at_T = result.rows.back().corollary_bound;
  result.slope = loglog_slope(config.horizons, gammas);

  const CumulativeVariance cv =
      cumvar_bound_check(result.trace.step_variance, config.noise, result.trace.final_gain());
  const bool cumvar_applicable = k_bar <= 1.0 + 1e-12;
  result.cumvar_holds = !cumvar_applicable || cv.total <= cv.c1_gain + kBoundSlack;

  outputs.write("gamma.csv", render([&](std::ostream& os) {
    os << "T,empirical_gamma,D_star,theorem3_bound,corollary_bound\n";
    for (const auto& r : result.rows)
      os << r.T << ',' << format_double(r.empirical_gamma) << ',' << r.D_star << ','
         << format_double(r.theorem3_bound) << ',' << format_double(r.corollary_bound) << '\n';
  }));
  outputs.write("greedy_trace.csv", render([&](std::ostream& os) { write_infogain_csv(os, result.trace); }));

  json sidecar;
  sidecar["kernel"] = config.kernel_json;
  sidecar["tau"] = config.noise;
  sidecar["D_star"] = *result.trace.D_star;
  sidecar["theorem3_bound"] = *result.trace.theorem3_bound_at_T;
  sidecar["corollary_bound"] = *result.trace.corollary_bound_at_T;
  outputs.write("greedy_trace.json", sidecar.dump(2) + "\n");

  json summary;
  summary["config"] = config_to_json(config);
  summary["k_bar"] = k_bar;
  summary["psi"] = spectrum->feature_bound;
  summary["bound_profile"] = profile_to_json(profile);
  summary["fitted_profile"] = profile_to_json(result.fitted_profile);
  summary["certified"] = result.certified;
  summary["loglog_slope"] = result.slope;
  summary["bounds_hold"] = result.bounds_hold;
  summary["cumulative_variance"] = {{"D_T", cv.total},
                                    {"c1_gain", cv.c1_gain},
                                    {"applicable", cumvar_applicable},
                                    {"holds", result.cumvar_holds}};
  outputs.write("gamma.json", summary.dump(2) + "\n");
  outputs.commit();
  return result;
}

// ---------------------------------------------------------------------------
// regret

RegretBenchResult run_regret_bench(const ExperimentConfig& config) {
  validate(config.policy);
  prepare_output_dir(config.out);
  OutputSet outputs(config.out);
  const KernelSpec& kernel = config.kernel;
  const Index T = config.horizons.back();
  const PolicyProblem problem(kernel, regular_grid(kernel.domain, config.resolved_grid_size()),
                              config.noise);
  const double k_bar = kernel_bound(kernel);

  std::shared_ptr<const Spectrum> spectrum;
  Index truncation = 0;
  if (kernel.family == KernelFamily::ExplicitMercer) {
    spectrum = kernel.spectrum;
    truncation = std::min(spectrum->size(), std::max<Index>(1, truncation_for_tail(*spectrum, 1e-6 * k_bar)));
  } else {
    spectrum = std::make_shared<const Spectrum>(nystrom_spectrum(kernel, problem.grid, problem.grid.rows()));
    truncation = spectrum->size();
  }

  RegretBenchResult result;
  json per_trace = json::array();
  const double c1 = c1_constant(config.noise);
  for (std::uint64_t seed : config.seeds) {
    Rng objective_rng = make_rng(config.master_seed, seed, "objective");
    const SampledFunction objective =
        config.policy.setting == Setting::Bayesian
            ? sample_gp(spectrum, truncation, objective_rng)
            : sample_rkhs(spectrum, truncation, config.policy.norm_bound, objective_rng);
    RegretTrace trace = run_policy(config.policy, objective.evaluate(problem.grid), problem, T,
                                   stream_seed(config.master_seed, seed, "policy"));
    trace.seed = seed;

    const double gamma_hat = trace.final_gain();
    const double alpha_T = trace.final_beta();
    const double dT = trace.cumulative_variance();
    if (k_bar <= 1.0 + 1e-12 && dT > c1 * gamma_hat + kBoundSlack) result.cumvar_holds = false;
    per_trace.push_back({{"seed", seed},
                         {"final_regret", trace.final_regret()},
                         {"alpha_T", alpha_T},
                         {"gamma_hat_T", gamma_hat},
                         {"cumulative_variance", dT},
                         {"c1_gain", c1 * gamma_hat},
                         {"comparator_width", alpha_T * std::sqrt(static_cast<double>(T) * gamma_hat)},
                         {"chain_bound", 2.0 * alpha_T * std::sqrt(static_cast<double>(T) * c1 * gamma_hat)}});
    outputs.write("regret_seed_" + std::to_string(seed) + ".csv",
                  render([&](std::ostream& os) { write_regret_csv(os, trace); }));
    result.traces.push_back(std::move(trace));
  }
  result.summary = regret_summary(result.traces);
  outputs.write("summary.csv", render([&](std::ostream& os) { write_summary_csv(os, result.summary); }));

  json sidecar;
  sidecar["config"] = config_to_json(config);
  sidecar["objective_truncation"] = truncation;
  sidecar["k_bar"] = k_bar;
  sidecar["c1"] = c1;
  sidecar["traces"] = per_trace;
  sidecar["cumvar_holds"] = result.cumvar_holds;
  outputs.write("regret.json", sidecar.dump(2) + "\n");
  outputs.commit();
  return result;
}

// ---------------------------------------------------------------------------
// spectrum

SpectrumResult run_spectrum(const ExperimentConfig& config) {
  prepare_output_dir(config.out);
  OutputSet outputs(config.out);
  const PointSet grid = regular_grid(config.kernel.domain, config.resolved_grid_size());
  SpectrumResult result;
  result.spectrum = nystrom_spectrum(config.kernel, grid, std::min(config.num_eigs, grid.rows()));
  if (config.fit_first > 0) {
    result.fit_first = config.fit_first;
    result.fit_last = std::min(config.fit_last, result.spectrum.size());
  } else {
    std::tie(result.fit_first, result.fit_last) = auto_fit_range(result.spectrum.eigenvalues);
  }
  result.polynomial = fit_polynomial_decay(result.spectrum.eigenvalues, result.fit_first, result.fit_last);
  result.exponential = fit_exponential_decay(result.spectrum.eigenvalues, result.fit_first, result.fit_last);
  result.selected = fit_decay_profile(result.spectrum, result.fit_first, result.fit_last);

  outputs.write("spectrum.csv", render([&](std::ostream& os) {
    os << "m,eigenvalue\n";
    for (Index m = 0; m < result.spectrum.size(); ++m)
      os << (m + 1) << ',' << format_double(result.spectrum.eigenvalues[m]) << '\n';
  }));
  json sidecar;
  sidecar["config"] = config_to_json(config);
  sidecar["psi"] = result.spectrum.feature_bound;
  sidecar["fit_range"] = {result.fit_first, result.fit_last};
  sidecar["polynomial"] = {{"profile", profile_to_json(result.polynomial.profile)},
                           {"residual", result.polynomial.residual}};
  sidecar["exponential"] = {{"profile", profile_to_json(result.exponential.profile)},
                            {"residual", result.exponential.residual}};
  sidecar["selected"] = profile_to_json(result.selected);
  outputs.write("spectrum.json", sidecar.dump(2) + "\n");
  outputs.commit();
  return result;
}

// ---------------------------------------------------------------------------
// verify

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void print_report(std::ostream& out, const VerifyReport& report) {
  for (const auto& c : report.checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(34) << c.name
        << " max_err=" << std::scientific << std::setprecision(3) << c.max_error << std::defaultfloat;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  const auto failed = std::count_if(report.checks.begin(), report.checks.end(),
                                    [](const CheckResult& c) { return !c.passed; });
  out << report.checks.size() - static_cast<std::size_t>(failed) << '/' << report.checks.size()
      << " checks passed\n";
}

namespace {

MatrixXd random_pd(Rng& rng, Index n) {
  MatrixXd b(n, n);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = standard_normal(rng);
  MatrixXd a = b * b.transpose();
  a.diagonal().array() += 0.1;
  return a;
}

PointSet random_points(Rng& rng, Index n, Index d) {
  PointSet x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, 0.0, 1.0);
  return x;
}

CheckResult run_check(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    CheckResult r = body();
    r.name = name;
    return r;
  } catch (const Error& e) {
    return {name, false, 0.0, std::string(to_string(e.code()))};
  } catch (const std::exception& e) {
    return {name, false, 0.0, e.what()};
  }
}

}  // namespace

VerifyReport run_verify(const ExperimentConfig& config) {
  VerifyReport report;
  const std::uint64_t master = config.master_seed;
  auto add = [&](const std::string& name, const std::function<CheckResult()>& body) {
    report.checks.push_back(run_check(name, body));
  };

  add("cholesky_reconstruction", [&] {
    Rng rng = make_rng(master, 1, "verify");
    CheckResult r;
    for (int k = 0; k < 1000; ++k) {
      const MatrixXd a = random_pd(rng, 1 + k % 20);
      const auto f = cholesky(a);
      MatrixXd target = a;
      target.diagonal().array() += f.jitter_used;
      r.max_error = std::max(r.max_error, (f.reconstruct() - target).norm() / target.norm());
    }
    r.passed = r.max_error <= 1e-10;
    return r;
  });

  add("logdet_vs_eigenvalues", [&] {
    Rng rng = make_rng(master, 2, "verify");
    CheckResult r;
    for (int k = 0; k < 1000; ++k) {
      const MatrixXd a = random_pd(rng, 1 + k % 20);
      const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
      const double oracle = eig.eigenvalues().array().log().sum();
      r.max_error = std::max(r.max_error, relative_error(logdet(cholesky(a)), oracle));
    }
    r.passed = r.max_error <= 1e-8;
    return r;
  });

  add("logdet_trace_bound", [&] {
    Rng rng = make_rng(master, 3, "verify");
    CheckResult r;
    double worst_slack = -1e300;
    for (int k = 0; k < 1000; ++k) {
      const auto [ld, bound] = logdet_trace_bound(random_pd(rng, 1 + k % 20));
      worst_slack = std::max(worst_slack, ld - bound);
    }
    r.max_error = std::max(worst_slack, 0.0);
    r.passed = worst_slack <= 1e-12;
    return r;
  });

  add("extend_factor_vs_full", [&] {
    Rng rng = make_rng(master, 4, "verify");
    CheckResult r;
    for (int k = 0; k < 50; ++k) {
      const Index n = 2 + k % 19;
      const MatrixXd a = random_pd(rng, n);
      PosDefFactor<double> f = cholesky(a.topLeftCorner(1, 1));
      for (Index i = 1; i < n; ++i) f = extend_factor(f, a.col(i).head(i), a(i, i));
      const auto full = cholesky(a);
      r.max_error = std::max(r.max_error, (f.lower - full.lower).norm() / full.lower.norm());
    }
    r.passed = r.max_error <= 1e-9;
    return r;
  });

  add("weinstein_aronszajn", [&] {
    Rng rng = make_rng(master, 5, "verify");
    const auto spectrum =
        std::make_shared<const Spectrum>(fourier_spectrum(PolynomialDecay{1.0, 2.0}, 32));
    CheckResult r;
    for (int k = 0; k < 100; ++k) {
      const Index D = 1 + k % 12;
      const PointSet x = random_points(rng, 1 + k % 25, 1);
      const double tau = uniform(rng, 0.05, 2.0);
      const auto wa = check_weinstein_aronszajn(*spectrum, D, x, tau);
      r.max_error = std::max(r.max_error, std::abs(wa.lhs - wa.rhs) / std::max(wa.lhs, 1.0));
    }
    r.passed = r.max_error <= 1e-8;
    return r;
  });

  add("decoupling_and_trace_bounds", [&] {
    Rng rng = make_rng(master, 6, "verify");
    const KernelSpec kernel = KernelSpec::mercer(
        MercerRecipe{PolynomialDecay{1.0, 2.0}, {}, 64, true});
    CheckResult r;
    bool ok = true;
    for (int k = 0; k < 50; ++k) {
      const Index D = 1 + k % 10;
      const PointSet x = random_points(rng, 2 + k % 30, 1);
      const double tau = uniform(rng, 0.1, 2.0);
      const auto d = check_decoupling(kernel, *kernel.spectrum, D, x, tau);
      r.max_error = std::max(
          r.max_error, relative_error(d.full_logdet, d.projected_logdet + d.residual_logdet));
      ok = ok && d.projected_logdet <= d.projected_bound + 1e-10 &&
           d.weighted_trace <= d.orthogonal_trace + 1e-10 && d.orthogonal_trace <= d.tail_bound + 1e-10 &&
           d.residual_logdet <= d.tail_bound / tau + 1e-10;
    }
    r.passed = ok && r.max_error <= 1e-8;
    if (!ok) r.detail = "a trace or log-det inequality failed";
    return r;
  });

  add("posterior_vs_inverse", [&] {
    Rng rng = make_rng(master, 7, "verify");
    CheckResult r;
    for (int k = 0; k < 200; ++k) {
      const Index d = 1 + k % 2;
      const Index t = 1 + k % 50;
      const KernelSpec kernel =
          KernelSpec::squared_exponential(uniform(rng, 0.1, 1.0), Domain::unit(d));
      const double tau = uniform(rng, 0.01, 1.0);
      const PointSet x = random_points(rng, t, d);
      VectorXd y(t);
      for (Index i = 0; i < t; ++i) y[i] = standard_normal(rng);
      const GPState state = GPState::from_data(kernel, tau, x, y);
      MatrixXd reg = gram(kernel, x);
      reg.diagonal().array() += tau;
      const MatrixXd inv = reg.inverse();
      for (int q = 0; q < 5; ++q) {
        const VectorXd xq = random_points(rng, 1, d).row(0).transpose();
        const VectorXd kx = cross_covariance(kernel, x, xq);
        const Posterior p = posterior(state, xq);
        r.max_error = std::max({r.max_error, std::abs(p.mean - kx.dot(inv * y)),
                                std::abs(p.variance - std::max(0.0, eval(kernel, xq, xq) - kx.dot(inv * kx)))});
      }
    }
    r.passed = r.max_error <= 1e-8;
    return r;
  });

  add("incremental_vs_batch", [&] {
    Rng rng = make_rng(master, 8, "verify");
    CheckResult r;
    for (int k = 0; k < 20; ++k) {
      const KernelSpec kernel = KernelSpec::matern(2.5, uniform(rng, 0.1, 0.5), Domain::unit(1));
      const double tau = uniform(rng, 0.01, 1.0);
      const PointSet x = random_points(rng, 10, 1);
      VectorXd y(10);
      GPState state(kernel, tau);
      for (Index i = 0; i < 10; ++i) {
        y[i] = standard_normal(rng);
        state = condition(state, x.row(i).transpose(), y[i]);
      }
      const GPState batch = GPState::from_data(kernel, tau, x, y);
      for (int q = 0; q < 10; ++q) {
        const VectorXd xq = random_points(rng, 1, 1).row(0).transpose();
        const Posterior a = posterior(state, xq), b = posterior(batch, xq);
        r.max_error = std::max({r.max_error, std::abs(a.mean - b.mean), std::abs(a.variance - b.variance)});
      }
    }
    r.passed = r.max_error <= 1e-8;
    return r;
  });

  std::vector<InfoGainTrace> greedy_traces;
  add("telescoping_identity", [&] {
    CheckResult r;
    const std::vector<KernelSpec> kernels{
        KernelSpec::squared_exponential(0.1, Domain::unit(1)),
        KernelSpec::matern(1.5, 0.2, Domain::unit(1)),
        KernelSpec::mercer(MercerRecipe{PolynomialDecay{1.0, 2.0}, {}, 256, true}),
    };
    for (const auto& kernel : kernels) {
      auto trace = greedy_gamma(kernel, regular_grid(kernel.domain, 128), 100, 1.0, false);
      const double direct = info_gain(kernel, trace.chosen_points, 1.0);
      r.max_error = std::max(r.max_error, std::abs(direct - trace.final_gain()));
      greedy_traces.push_back(std::move(trace));
    }
    r.passed = r.max_error <= 1e-6;
    return r;
  });

  add("cumulative_variance_c1", [&] {
    CheckResult r;
    if (greedy_traces.empty()) throw Error(Errc::InvalidArgument, "no greedy traces available");
    double worst = -1e300;
    for (const auto& trace : greedy_traces) {
      const auto cv = cumvar_bound_check(trace.step_variance, trace.noise, trace.final_gain());
      worst = std::max(worst, cv.total - cv.c1_gain);
    }
    r.max_error = std::max(worst, 0.0);
    r.passed = worst <= 1e-8;
    return r;
  });

  add("tail_mass_monotone", [&] {
    CheckResult r;
    const std::vector<DecayProfile> profiles{PolynomialDecay{1.0, 1.5}, PolynomialDecay{2.0, 3.0},
                                             ExponentialDecay{1.0, 0.5, 1.0},
                                             ExponentialDecay{1.0, 1.0, 0.5}};
    bool ok = true;
    for (const auto& p : profiles) {
      Spectrum s = fourier_spectrum(p, 16);
      s.finite_rank = false;
      double previous = tail_mass(s, 0);
      for (Index D = 1; D <= 200; ++D) {
        const double current = tail_mass(s, D);
        if (current > previous + 1e-15) {
          ok = false;
          r.max_error = std::max(r.max_error, current - previous);
        }
        previous = current;
      }
      ok = ok && tail_mass(s, 100000) < 1e-2 * tail_mass(s, 0);
    }
    r.passed = ok;
    return r;
  });

  add("sample_gp_covariance", [&] {
    CheckResult r;
    const auto spectrum =
        std::make_shared<const Spectrum>(fourier_spectrum(PolynomialDecay{1.0, 2.0}, 8));
    const auto split = projected_split(spectrum, 8);
    Rng rng = make_rng(master, 12, "verify");
    const PointSet pts = random_points(rng, 2, 1);
    const VectorXd a = pts.row(0).transpose(), b = pts.row(1).transpose();
    constexpr int kSamples = 100000;
    VectorXd fa(kSamples), fb(kSamples);
    for (int s = 0; s < kSamples; ++s) {
      const auto f = sample_gp(spectrum, 8, stream_seed(master, static_cast<std::uint64_t>(s), "mc"));
      fa[s] = f(a);
      fb[s] = f(b);
    }
    const VectorXd prod = (fa.array() - fa.mean()) * (fb.array() - fb.mean());
    const double cov = prod.sum() / (kSamples - 1);
    const double se = std::sqrt((prod.array() - prod.mean()).square().sum() / (kSamples - 1) / kSamples);
    const double target = split.projected(a, b);
    r.max_error = std::abs(cov - target);
    r.passed = r.max_error <= 3.0 * se;
    r.detail = "3 s.e. = " + format_double(3.0 * se);
    return r;
  });

  for (const auto& fixture : config.fixtures) {
    add("fixture:" + fixture.filename().string(), [&] {
      std::ifstream in(fixture);
      if (!in) throw Error(Errc::ConfigError, "cannot open fixture " + fixture.string());
      const json j = json::parse(in);
      const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw Error(Errc::InvalidArgument, "fixture matrix is not square");
        for (std::size_t k = 0; k < rows.size(); ++k)
          m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
      }
      const auto f = cholesky(m);
      CheckResult r;
      MatrixXd target = (m + m.transpose()) / 2.0;
      target.diagonal().array() += f.jitter_used;
      r.max_error = (f.reconstruct() - target).norm() / target.norm();
      const auto [ld, bound] = logdet_trace_bound(m);
      r.passed = r.max_error <= 1e-10 && ld <= bound + 1e-12;
      return r;
    });
  }
  return report;
}

}  // namespace gpig

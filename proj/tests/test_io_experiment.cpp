#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gpig/error.hpp"
#include "gpig/experiment.hpp"
#include "gpig/io.hpp"

using namespace gpig;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpig_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

json finite_rank_kernel(int rank) {
  return {{"family", "mercer"},
          {"profile", {{"type", "exponential"}, {"C_e1", 1.0}, {"C_e2", 1.0}, {"beta_e", 1.0}}},
          {"truncation", rank},
          {"normalize", true}};
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()})
    CHECK(parse_double(format_double(x)) == x);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  VectorXd p(3);
  p << 0.25, 1.0 / 7.0, 0.0;
  CHECK(split_point(join_point(p)) == p);
}

TEST_CASE("kernel JSON round-trip") {
  const std::vector<json> specs{
      {{"family", "se"}, {"lengthscale", 0.3}, {"variance", 2.0}},
      {{"family", "matern"}, {"nu", 2.5}, {"lengthscale", 0.2},
       {"domain", {{"lower", {0.0, -1.0}}, {"upper", {1.0, 1.0}}}}},
      {{"family", "constant"}, {"variance", 0.5}},
      {{"family", "mercer"}, {"profile", {{"type", "polynomial"}, {"C_p", 1.0}, {"beta_p", 3.0}}},
       {"truncation", 50}},
      {{"family", "mercer"}, {"eigenvalues", {1.0, 0.25}}},
  };
  for (const auto& j : specs) {
    const KernelSpec k = kernel_from_json(j);
    const KernelSpec again = kernel_from_json(kernel_to_json(k));
    CHECK(kernel_to_json(again) == kernel_to_json(k));
    const VectorXd x = VectorXd::Constant(k.domain.dimension(), 0.3);
    const VectorXd y = VectorXd::Constant(k.domain.dimension(), 0.6);
    CHECK(eval(again, x, y) == eval(k, x, y));
  }
  CHECK(error_code([] { kernel_from_json({{"family", "rbf"}}); }) == Errc::ConfigError);
  CHECK(error_code([] { kernel_from_json({{"family", "matern"}, {"nu", 0.5}}); }) == Errc::ConfigError);
  CHECK(error_code([] {
          kernel_from_json({{"family", "mercer"}, {"profile", {{"type", "polynomial"}, {"beta_p", 1.0}}}});
        }) == Errc::ConfigError);
  CHECK(error_code([] {
          kernel_from_json({{"family", "mercer"}, {"profile", {{"type", "exponential"}, {"beta_e", 0.0}}}});
        }) == Errc::ConfigError);
}

TEST_CASE("config validation names the field") {
  const auto message = [](const json& j) {
    try {
      config_from_json(Command::Regret, j);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ConfigError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"tau", 0.0}}).find("tau") != std::string::npos);
  CHECK(message({{"tau", -1.0}}).find("tau") != std::string::npos);
  CHECK(message({{"delta", 1.0}}).find("delta") != std::string::npos);
  CHECK(message({{"delta", 0.0}}).find("delta") != std::string::npos);
  CHECK(message({{"horizons", {10, 10}}}).find("horizons") != std::string::npos);
  CHECK(message({{"algo", "eps-greedy"}}).find("algo") != std::string::npos);
  CHECK(message({{"grid_size", -2}}).find("grid_size") != std::string::npos);
  CHECK(!message({{"kernel", {{"family", "mercer"}, {"profile", {{"type", "polynomial"}, {"beta_p", 0.5}}}}}})
             .empty());

  const ExperimentConfig c = config_from_json(Command::Regret, json::object());
  CHECK(c.horizons == std::vector<Index>{500});
  CHECK(config_from_json(Command::Gamma, json::object()).horizons ==
        std::vector<Index>{64, 128, 256, 512, 1024});
  CHECK(c.resolved_grid_size() == 512);
}

TEST_CASE("unwritable output directory is rejected before any work") {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  ExperimentConfig c = config_from_json(Command::Gamma, json::object());
  c.out = blocker / "sub";
  CHECK(error_code([&] { run_gamma_sweep(c); }) == Errc::ConfigError);
  fs::remove(blocker);
}

TEST_CASE("gamma sweep on a constant kernel") {
  ExperimentConfig c = config_from_json(
      Command::Gamma, {{"kernel", {{"family", "constant"}}}, {"horizons", {1, 2, 4}}, {"grid_size", 16}});
  c.out = scratch("gamma_const");
  const auto r = run_gamma_sweep(c);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].empirical_gamma == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(r.rows[1].empirical_gamma == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
  CHECK(r.rows[2].empirical_gamma == doctest::Approx(0.5 * std::log(5.0)).epsilon(1e-12));
  CHECK(fs::exists(c.out / "gamma.csv"));
  CHECK(fs::exists(c.out / "gamma.json"));
  CHECK(fs::exists(c.out / "greedy_trace.csv"));
  CHECK(fs::exists(c.out / "greedy_trace.json"));
}

TEST_CASE("gamma sweep on a rank-3 kernel") {
  ExperimentConfig c = config_from_json(
      Command::Gamma, {{"kernel", finite_rank_kernel(3)}, {"horizons", {8, 64, 512}}, {"grid_size", 128}});
  c.out = scratch("gamma_rank3");
  const auto r = run_gamma_sweep(c);
  CHECK(r.certified);
  CHECK(r.bounds_hold);
  CHECK(r.cumvar_holds);
  const double k_bar = kernel_bound(c.kernel);
  CHECK(k_bar == doctest::Approx(1.0));
  for (const auto& row : r.rows) {
    CHECK(row.D_star == 3);
    CHECK(row.theorem3_bound == 1.5 * std::log1p(k_bar * static_cast<double>(row.T) / 3.0));
  }

  // The CSV re-parses to the same values.
  const CsvTable t = read_csv(c.out / "gamma.csv");
  CHECK(t.header == std::vector<std::string>{"T", "empirical_gamma", "D_star", "theorem3_bound", "corollary_bound"});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(parse_double(t.rows[i][1]) == r.rows[i].empirical_gamma);
    CHECK(parse_double(t.rows[i][3]) == r.rows[i].theorem3_bound);
    CHECK(parse_double(t.rows[i][4]) == r.rows[i].corollary_bound);
  }
  const InfoGainTrace back = read_infogain_csv(c.out / "greedy_trace.csv", c.noise);
  CHECK(back.cumulative_gain == r.trace.cumulative_gain);
  CHECK(back.step_gain == r.trace.step_gain);
  CHECK(back.chosen_points == r.trace.chosen_points);
  const json side = json::parse(slurp(c.out / "gamma.json"));
  CHECK(side.at("config").at("horizons") == json({8, 64, 512}));
  CHECK(side.contains("fitted_profile"));
  CHECK(side.at("loglog_slope").get<double>() == r.slope);
}

TEST_CASE("polynomial gamma sweep satisfies both bounds") {
  ExperimentConfig c = config_from_json(Command::Gamma, {{"horizons", {16, 64, 256}}, {"grid_size", 256}});
  c.out = scratch("gamma_poly");
  const auto r = run_gamma_sweep(c);
  CHECK(r.certified);
  for (const auto& row : r.rows) {
    CHECK(row.empirical_gamma <= row.theorem3_bound + 1e-8);
    CHECK(row.empirical_gamma <= row.corollary_bound + 1e-8);
  }
}

TEST_CASE("gamma sweep on a Nystrom spectrum is uncertified") {
  ExperimentConfig c = config_from_json(
      Command::Gamma,
      {{"kernel", {{"family", "matern"}, {"nu", 1.5}, {"lengthscale", 0.2}}}, {"horizons", {16, 32}}, {"grid_size", 128}});
  c.out = scratch("gamma_matern");
  const auto r = run_gamma_sweep(c);
  CHECK_FALSE(r.certified);
  CHECK(r.rows.size() == 2);
}

TEST_CASE("regret bench") {
  SUBCASE("single step") {
    ExperimentConfig c = config_from_json(Command::Regret, {{"horizon", 1}, {"seeds", {1}}, {"grid_size", 32}});
    c.out = scratch("regret_one");
    const auto r = run_regret_bench(c);
    REQUIRE(r.traces.size() == 1);
    REQUIRE(r.traces[0].steps.size() == 1);
    CHECK(r.traces[0].steps[0].cum_regret == r.traces[0].steps[0].inst_regret);
    const RegretTrace back = read_regret_csv(c.out / "regret_seed_1.csv");
    CHECK(back.steps.size() == 1);
    CHECK(back.steps[0].cum_regret == r.traces[0].steps[0].cum_regret);
  }
  SUBCASE("constant kernel has zero regret") {
    ExperimentConfig c = config_from_json(
        Command::Regret,
        {{"kernel", {{"family", "constant"}}}, {"horizon", 20}, {"seeds", {1, 2}}, {"grid_size", 16}});
    c.out = scratch("regret_const");
    for (const auto& tr : run_regret_bench(c).traces)
      for (const auto& s : tr.steps) CHECK(s.cum_regret == 0.0);
  }
  SUBCASE("same master seed gives byte-identical files") {
    const json j{{"horizon", 40}, {"seeds", {3, 4}}, {"grid_size", 64}, {"seed", 11}, {"algo", "ts"}};
    ExperimentConfig a = config_from_json(Command::Regret, j);
    ExperimentConfig b = a;
    a.out = scratch("regret_a");
    b.out = scratch("regret_b");
    const auto ra = run_regret_bench(a);
    run_regret_bench(b);
    for (const char* name : {"regret_seed_3.csv", "regret_seed_4.csv", "summary.csv", "regret.json"})
      CHECK(slurp(a.out / name) == slurp(b.out / name));
    const auto summary = read_summary_csv(a.out / "summary.csv");
    REQUIRE(summary.size() == ra.summary.size());
    CHECK(summary.back().median == ra.summary.back().median);
    CHECK(summary.back().q75 == ra.summary.back().q75);
    const RegretTrace back = read_regret_csv(a.out / "regret_seed_3.csv");
    for (std::size_t t = 0; t < back.steps.size(); ++t) {
      CHECK(back.steps[t].f_x == ra.traces[0].steps[t].f_x);
      CHECK(back.steps[t].beta == ra.traces[0].steps[t].beta);
      CHECK(back.steps[t].x == ra.traces[0].steps[t].x);
    }
    const json side = json::parse(slurp(a.out / "regret.json"));
    CHECK(side.at("traces").size() == 2);
    CHECK(side.at("traces")[0].contains("comparator_width"));
  }
  SUBCASE("different master seeds differ") {
    ExperimentConfig a = config_from_json(Command::Regret, {{"horizon", 10}, {"grid_size", 32}, {"seed", 1}});
    ExperimentConfig b = config_from_json(Command::Regret, {{"horizon", 10}, {"grid_size", 32}, {"seed", 2}});
    a.out = scratch("regret_s1");
    b.out = scratch("regret_s2");
    run_regret_bench(a);
    run_regret_bench(b);
    CHECK(slurp(a.out / "regret_seed_1.csv") != slurp(b.out / "regret_seed_1.csv"));
  }
}

TEST_CASE("spectrum command") {
  ExperimentConfig c = config_from_json(
      Command::Spectrum,
      {{"kernel", {{"family", "se"}, {"lengthscale", 0.2}}}, {"grid_size", 400}, {"num_eigs", 20}, {"fit_range", {3, 15}}});
  c.out = scratch("spectrum");
  const auto r = run_spectrum(c);
  CHECK(std::holds_alternative<ExponentialDecay>(r.selected));
  CHECK(r.exponential.residual < r.polynomial.residual);
  const CsvTable t = read_csv(c.out / "spectrum.csv");
  REQUIRE(t.rows.size() == 20);
  CHECK(parse_double(t.rows[4][1]) == r.spectrum.eigenvalues[4]);
  CHECK(fs::exists(c.out / "spectrum.json"));
}

TEST_CASE("verify report") {
  ExperimentConfig c = config_from_json(Command::Verify, json::object());
  const VerifyReport report = run_verify(c);
  CHECK(report.checks.size() >= 7);
  CHECK(report.all_passed());
  std::ostringstream os;
  print_report(os, report);
  CHECK(os.str().find("FAIL") == std::string::npos);
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3.0, 6.0, 12.0, 24.0}) == doctest::Approx(1.0));
  CHECK(loglog_slope({10, 100}, {1.0, std::sqrt(10.0)}) == doctest::Approx(0.5));
}

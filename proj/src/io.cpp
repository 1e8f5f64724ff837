#include "gpig/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gpig {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(Errc::InvalidArgument, "cannot parse number '" + std::string(text) + "'");
  return value;
}

namespace {

Index parse_index(std::string_view text) {
  long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(Errc::InvalidArgument, "cannot parse integer '" + std::string(text) + "'");
  return static_cast<Index>(value);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

VectorXd vector_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw Error(Errc::ConfigError, std::string(field) + " must be an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

void expect_header(const CsvTable& table, const std::vector<std::string>& header,
                   const std::filesystem::path& path) {
  if (table.header != header)
    throw Error(Errc::InvalidArgument, "unexpected CSV header in " + path.string());
}

}  // namespace

std::string join_point(const VectorXd& x) {
  std::string out;
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) out += ';';
    out += format_double(x[i]);
  }
  return out;
}

VectorXd split_point(std::string_view text) {
  const auto parts = split(text, ';');
  VectorXd x(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) x[static_cast<Index>(i)] = parse_double(parts[i]);
  return x;
}

// ---------------------------------------------------------------------------

json profile_to_json(const DecayProfile& profile) {
  if (const auto* p = std::get_if<PolynomialDecay>(&profile))
    return {{"type", "polynomial"}, {"C_p", p->C_p}, {"beta_p", p->beta_p}};
  const auto& e = std::get<ExponentialDecay>(profile);
  return {{"type", "exponential"}, {"C_e1", e.C_e1}, {"C_e2", e.C_e2}, {"beta_e", e.beta_e}};
}

DecayProfile profile_from_json(const json& j) {
  const std::string type = j.value("type", "");
  DecayProfile profile;
  if (type == "polynomial") {
    profile = PolynomialDecay{j.value("C_p", 1.0), j.value("beta_p", 2.0)};
  } else if (type == "exponential") {
    profile = ExponentialDecay{j.value("C_e1", 1.0), j.value("C_e2", 1.0), j.value("beta_e", 1.0)};
  } else {
    throw Error(Errc::ConfigError, "profile.type must be 'polynomial' or 'exponential'");
  }
  try {
    validate(profile);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, std::string("profile: ") + e.what());
  }
  return profile;
}

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["domain"] = {{"lower", vector_to_json(spec.domain.lower)},
                 {"upper", vector_to_json(spec.domain.upper)}};
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      j["family"] = "se";
      j["lengthscale"] = spec.lengthscale;
      j["variance"] = spec.variance;
      break;
    case KernelFamily::Matern:
      j["family"] = "matern";
      j["lengthscale"] = spec.lengthscale;
      j["nu"] = spec.nu;
      j["variance"] = spec.variance;
      break;
    case KernelFamily::Constant:
      j["family"] = "constant";
      j["variance"] = spec.variance;
      break;
    case KernelFamily::ExplicitMercer: {
      if (!spec.recipe)
        throw Error(Errc::InvalidArgument, "Mercer kernel without a recipe cannot be serialized");
      j["family"] = "mercer";
      if (spec.recipe->profile)
        j["profile"] = profile_to_json(*spec.recipe->profile);
      else
        j["eigenvalues"] = vector_to_json(spec.recipe->eigenvalues);
      j["truncation"] = spec.recipe->truncation;
      j["normalize"] = spec.recipe->normalize;
      break;
    }
  }
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "kernel must be a JSON object");
  const std::string family = j.value("family", "");
  Index dim = j.value("dimension", Index{1});
  Domain domain = Domain::unit(dim);
  if (j.contains("domain")) {
    domain.lower = vector_from_json(j.at("domain").at("lower"), "kernel.domain.lower");
    domain.upper = vector_from_json(j.at("domain").at("upper"), "kernel.domain.upper");
    dim = domain.dimension();
  }
  const auto wrap = [](auto&& build) {
    try {
      return build();
    } catch (const Error& e) {
      if (e.code() == Errc::ConfigError) throw;
      throw Error(Errc::ConfigError, std::string("kernel: ") + e.what());
    }
  };
  if (family == "se")
    return wrap([&] {
      return KernelSpec::squared_exponential(j.value("lengthscale", 1.0), domain, j.value("variance", 1.0));
    });
  if (family == "matern")
    return wrap([&] {
      return KernelSpec::matern(j.value("nu", 1.5), j.value("lengthscale", 1.0), domain,
                                j.value("variance", 1.0));
    });
  if (family == "constant")
    return wrap([&] { return KernelSpec::constant(j.value("variance", 1.0), domain); });
  if (family == "mercer") {
    if (!(domain.lower.isZero() && (domain.upper.array() == 1.0).all()))
      throw Error(Errc::ConfigError, "kernel.domain must be the unit cube for mercer kernels");
    MercerRecipe recipe;
    recipe.normalize = j.value("normalize", false);
    if (j.contains("profile")) {
      recipe.profile = profile_from_json(j.at("profile"));
      recipe.truncation = j.value("truncation", Index{1024});
      if (recipe.truncation < 1) throw Error(Errc::ConfigError, "kernel.truncation must be >= 1");
    } else if (j.contains("eigenvalues")) {
      recipe.eigenvalues = vector_from_json(j.at("eigenvalues"), "kernel.eigenvalues");
      recipe.truncation = recipe.eigenvalues.size();
    } else {
      throw Error(Errc::ConfigError, "mercer kernel needs 'profile' or 'eigenvalues'");
    }
    return wrap([&] { return KernelSpec::mercer(recipe, dim); });
  }
  throw Error(Errc::ConfigError, "kernel.family must be one of se, matern, constant, mercer");
}

// ---------------------------------------------------------------------------

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) table.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split(line, ','));
    if (table.rows.back().size() != table.header.size())
      throw Error(Errc::InvalidArgument, "ragged CSV row in " + path.string());
  }
  return table;
}

void write_infogain_csv(std::ostream& out, const InfoGainTrace& trace) {
  out << "t,chosen_point,step_gain,cumulative_gain\n";
  for (Index t = 0; t < trace.horizon; ++t) {
    out << (t + 1) << ',' << join_point(trace.chosen_points.row(t).transpose()) << ','
        << format_double(trace.step_gain[t]) << ',' << format_double(trace.cumulative_gain[t]) << '\n';
  }
}

InfoGainTrace read_infogain_csv(const std::filesystem::path& path, double noise) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"t", "chosen_point", "step_gain", "cumulative_gain"}, path);
  InfoGainTrace trace;
  trace.noise = noise;
  trace.horizon = static_cast<Index>(table.rows.size());
  trace.step_gain.resize(trace.horizon);
  trace.cumulative_gain.resize(trace.horizon);
  for (Index t = 0; t < trace.horizon; ++t) {
    const auto& row = table.rows[static_cast<std::size_t>(t)];
    const VectorXd x = split_point(row[1]);
    if (t == 0) trace.chosen_points.resize(trace.horizon, x.size());
    trace.chosen_points.row(t) = x.transpose();
    trace.step_gain[t] = parse_double(row[2]);
    trace.cumulative_gain[t] = parse_double(row[3]);
  }
  // σ² recovered from the step gain.
  trace.step_variance = (2.0 * trace.step_gain.array()).exp().array() - 1.0;
  trace.step_variance *= noise;
  return trace;
}

void write_regret_csv(std::ostream& out, const RegretTrace& trace) {
  out << "seed,t,x,f_x,inst_regret,cum_regret,beta_t\n";
  for (const auto& s : trace.steps) {
    out << trace.seed << ',' << s.t << ',' << join_point(s.x) << ',' << format_double(s.f_x) << ','
        << format_double(s.inst_regret) << ',' << format_double(s.cum_regret) << ','
        << format_double(s.beta) << '\n';
  }
}

RegretTrace read_regret_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"seed", "t", "x", "f_x", "inst_regret", "cum_regret", "beta_t"}, path);
  RegretTrace trace;
  for (const auto& row : table.rows) {
    trace.seed = static_cast<std::uint64_t>(std::stoull(row[0]));
    RegretStep s;
    s.t = parse_index(row[1]);
    s.x = split_point(row[2]);
    s.f_x = parse_double(row[3]);
    s.inst_regret = parse_double(row[4]);
    s.cum_regret = parse_double(row[5]);
    s.beta = parse_double(row[6]);
    trace.steps.push_back(std::move(s));
  }
  trace.horizon = static_cast<Index>(trace.steps.size());
  return trace;
}

void write_summary_csv(std::ostream& out, const std::vector<RegretSummaryRow>& rows) {
  out << "t,median,mean,q25,q75\n";
  for (const auto& r : rows) {
    out << r.t << ',' << format_double(r.median) << ',' << format_double(r.mean) << ','
        << format_double(r.q25) << ',' << format_double(r.q75) << '\n';
  }
}

std::vector<RegretSummaryRow> read_summary_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  expect_header(table, {"t", "median", "mean", "q25", "q75"}, path);
  std::vector<RegretSummaryRow> rows;
  for (const auto& row : table.rows) {
    rows.push_back({parse_index(row[0]), parse_double(row[1]), parse_double(row[2]),
                    parse_double(row[3]), parse_double(row[4])});
  }
  return rows;
}

}  // namespace gpig

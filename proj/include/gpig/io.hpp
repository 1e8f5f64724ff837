#pragma once

// JSON kernel specifications and CSV trace files.
//
// Doubles are written in shortest round-trip form, so re-parsing any file
// reproduces the in-memory values exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gpig/bandit.hpp"
#include "gpig/infogain.hpp"
#include "gpig/kernels.hpp"

namespace gpig {

std::string format_double(double value);
double parse_double(std::string_view text);

/// Coordinates joined with ';'.
std::string join_point(const VectorXd& x);
VectorXd split_point(std::string_view text);

nlohmann::json profile_to_json(const DecayProfile& profile);
DecayProfile profile_from_json(const nlohmann::json& j);

/// {"family": "se"|"matern"|"constant"|"mercer", "lengthscale", "nu",
///  "variance", "domain": {"lower": [...], "upper": [...]}}; Mercer kernels
/// carry "profile" or "eigenvalues", "truncation" and "normalize".
nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

/// Header row plus data rows, comma separated, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Columns: t, chosen_point, step_gain, cumulative_gain.
void write_infogain_csv(std::ostream& out, const InfoGainTrace& trace);
InfoGainTrace read_infogain_csv(const std::filesystem::path& path, double noise);

/// Columns: seed, t, x, f_x, inst_regret, cum_regret, beta_t.
void write_regret_csv(std::ostream& out, const RegretTrace& trace);
RegretTrace read_regret_csv(const std::filesystem::path& path);

/// Columns: t, median, mean, q25, q75.
void write_summary_csv(std::ostream& out, const std::vector<RegretSummaryRow>& rows);
std::vector<RegretSummaryRow> read_summary_csv(const std::filesystem::path& path);

}  // namespace gpig

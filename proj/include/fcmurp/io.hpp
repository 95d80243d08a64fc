#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcmurp/instgen.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/stochsolve.hpp"

namespace fcmurp::io {

inline constexpr int kFormatVersion = 1;

/// Unreadable, malformed or wrong-kind document.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

struct QuadrantDocument {
  QuadrantMap map;
  FuelDistribution distribution;
};

[[nodiscard]] std::string instance_to_json(const Instance& instance);
[[nodiscard]] Instance instance_from_json(const std::string& text);

[[nodiscard]] std::string quadrants_to_json(const QuadrantDocument& doc);
[[nodiscard]] QuadrantDocument quadrants_from_json(const std::string& text);

[[nodiscard]] std::string scenarios_to_json(const ScenarioSet& set);
[[nodiscard]] ScenarioSet scenarios_from_json(const std::string& text);

[[nodiscard]] std::string solution_to_json(const RouteSet& routes, double cost);
[[nodiscard]] RouteSet solution_from_json(const std::string& text);

[[nodiscard]] std::string report_to_json(const SaaReport& report);
[[nodiscard]] SaaReport report_from_json(const std::string& text);

/// Fills the gaps of `base` with the estimates present in `extra` (same
/// evaluation sample required) and recomputes VSS.
[[nodiscard]] SaaReport merge_reports(const SaaReport& base, const SaaReport& extra);

/// `instance,EV,EEV,EEV_sd,LB,LB_sd,UB,UB_sd,H,H_sd,VSS,VSS_pct`; _sd is
/// the square root of the estimate's dispersion. Missing values are empty.
[[nodiscard]] std::string csv_header();
[[nodiscard]] std::string csv_row(const SaaReport& report);
/// Plain-text table row: value with (sd) in parentheses.
[[nodiscard]] std::string text_table(const std::vector<SaaReport>& reports);

}  // namespace fcmurp::io

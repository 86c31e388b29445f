#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ptme/design.hpp"
#include "ptme/gradients.hpp"
#include "ptme/metrics.hpp"
#include "ptme/screening.hpp"

namespace ptme {

// Fixed-width significant-digit formatting so equal inputs always serialize
// to identical bytes.
std::string fmt_double(double x, int significant = 12);

// Writes to a sibling temp file and renames into place; a failed run leaves
// no partial output behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::json metrics_to_json(const MetricsReport& report);
nlohmann::json filter_to_json(const FilterVerdict& verdict);
std::string filter_to_text(const FilterVerdict& verdict);

nlohmann::json gradient_report_to_json(const GradientReport& report);
std::string per_pair_heatmap_csv(const GradientReport& report);

nlohmann::json trajectory_summary_json(const TrajectoryRecord& record);
std::string trajectory_trace_csv(const TrajectoryRecord& record);
std::string fasta_entry(const TrajectoryRecord& record);

nlohmann::json screening_report_to_json(const ScreeningReport& report);
std::string ranking_csv(const ScreeningReport& report);
std::string histogram_csv(const ScreeningReport& report);

}  // namespace ptme

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmat/stats.hpp"
#include "ragmat/textmetrics.hpp"

namespace ragmat::report {

/// Round half away from zero to two decimals.
double round2(double x);

/// "4.13 (1.17)"
std::string format_cell(double mean, double sd);

struct ReadabilitySummary {
  std::string config_label;
  std::size_t n = 0;
  double fres_mean = 0.0;
  double fres_sd = 0.0;
  std::string grade_label;  // band of fres_mean
  double words = 0.0;
  double syllables = 0.0;
  double sentences = 0.0;
};

/// Per-label means, in first-appearance order.
std::vector<ReadabilitySummary> summarize_readability(
    const std::vector<textmetrics::ReadabilityRow>& rows);

/// RAGFS vs NRAG readability per model (labels "<MODEL>_RAGFS"/"<MODEL>_NRAG").
struct ReadabilityComparison {
  std::string model;
  std::string label_a;
  std::string label_b;
  stats::WelchResult result;
};

std::vector<ReadabilityComparison> compare_ragfs_nrag(
    const std::vector<textmetrics::ReadabilityRow>& rows);

struct Reports {
  std::string table2_csv;
  std::optional<std::string> table3_csv;  // absent when there is no readability data
  nlohmann::json anova;
  nlohmann::json icc;
  nlohmann::json radar;
  std::string markdown;
  std::vector<std::string> notices;
};

/// Summaries fix the config order. Readability rows, when present, must
/// cover exactly the same labels (LabelMismatch otherwise).
Reports render_reports(const std::vector<stats::ConfigSummary>& summaries,
                       const std::vector<textmetrics::ReadabilityRow>& readability_rows,
                       const std::map<stats::Category, stats::AnovaResult>& anovas,
                       const std::map<stats::Category, stats::IccResult>& iccs);

}  // namespace ragmat::report

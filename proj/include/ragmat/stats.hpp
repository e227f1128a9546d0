#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragmat/ratings.hpp"

namespace ragmat::stats {

enum class Category { redundancy, accuracy, completeness };

inline constexpr std::array<Category, 3> kCategories = {Category::redundancy, Category::accuracy,
                                                        Category::completeness};

std::string_view to_string(Category c);
int score_of(const ratings::Scores& s, Category c);

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1). Zero for n < 2.
double sample_sd(std::span<const double> xs);

struct CategoryStats {
  double mean = 0.0;
  double sd = 0.0;
};

struct ConfigSummary {
  std::string config_label;
  std::size_t n = 0;  // records pooled over raters
  std::array<CategoryStats, 3> categories{};
  double total_score = 0.0;  // sum of the three category means
  bool sd_undefined = false;  // n == 1, sds reported as 0

  const CategoryStats& operator[](Category c) const {
    return categories[static_cast<std::size_t>(c)];
  }
};

/// One summary per config label (sorted by label). Throws EmptyGroup.
std::vector<ConfigSummary> summarize(const std::vector<ratings::LikertRecord>& records);

struct Group {
  std::string label;
  std::vector<double> values;
};

struct AnovaResult {
  double f_stat = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;
  bool degenerate = false;  // every observation identical; F reported as 0, p as 1
};

/// Classic between/within decomposition with the F upper tail for p.
/// Needs >= 2 non-empty groups and at least one group with >= 2 values
/// (InsufficientData otherwise).
AnovaResult one_way_anova(const std::vector<Group>& groups);

struct IccResult {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_subjects = 0;
  std::size_t n_raters = 0;
};

/// ICC(2,1): two-way random effects, absolute agreement, single rater, with
/// the F-based 95% interval of Shrout and Fleiss. Rows are subjects, columns
/// raters; rows with any NaN are dropped. Needs >= 5 complete rows
/// (InsufficientData); all-constant data throws DegenerateInput. Estimate and
/// bounds are clamped to [-1, 1].
IccResult icc_two_way(const std::vector<std::vector<double>>& ratings, double alpha = 0.05);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch's unequal-variance t test (a minus b), two-sided p.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// Per category, ANOVA over config groups of individual rater scores.
std::map<Category, AnovaResult> anova_by_category(const std::vector<ratings::LikertRecord>& records);

/// Per category, ICC over subjects (profile, config) x raters (sorted ids).
/// Categories that cannot be computed are absent from the map.
std::map<Category, IccResult> icc_by_category(const std::vector<ratings::LikertRecord>& records);

}  // namespace ragmat::stats

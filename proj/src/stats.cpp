#include "ragmat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ragmat/error.hpp"
#include "ragmat/special_functions.hpp"

namespace ragmat::stats {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::redundancy: return "redundancy";
    case Category::accuracy: return "accuracy";
    case Category::completeness: return "completeness";
  }
  return "redundancy";
}

int score_of(const ratings::Scores& s, Category c) {
  switch (c) {
    case Category::redundancy: return s.redundancy;
    case Category::accuracy: return s.accuracy;
    case Category::completeness: return s.completeness;
  }
  return 0;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<ConfigSummary> summarize(const std::vector<ratings::LikertRecord>& records) {
  if (records.empty()) throw EmptyGroup("no score records to summarize");
  std::map<std::string, std::array<std::vector<double>, 3>> by_label;
  for (const auto& r : records) {
    auto& cols = by_label[r.config_label];
    for (auto c : kCategories) {
      cols[static_cast<std::size_t>(c)].push_back(score_of(r.scores, c));
    }
  }
  std::vector<ConfigSummary> out;
  for (const auto& [label, cols] : by_label) {
    ConfigSummary s;
    s.config_label = label;
    s.n = cols[0].size();
    s.sd_undefined = s.n < 2;
    for (std::size_t i = 0; i < 3; ++i) {
      s.categories[i] = {mean(cols[i]), sample_sd(cols[i])};
      s.total_score += s.categories[i].mean;
    }
    out.push_back(std::move(s));
  }
  return out;
}

AnovaResult one_way_anova(const std::vector<Group>& groups) {
  if (groups.size() < 2) throw InsufficientData("ANOVA needs at least two groups");
  std::size_t total = 0;
  bool has_pair = false;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.values.empty()) throw InsufficientData("ANOVA group '" + g.label + "' is empty");
    has_pair = has_pair || g.values.size() >= 2;
    total += g.values.size();
    for (double v : g.values) grand_sum += v;
  }
  if (!has_pair) throw InsufficientData("ANOVA needs a group with at least two observations");

  const double grand_mean = grand_sum / static_cast<double>(total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g.values);
    ss_between += static_cast<double>(g.values.size()) * (m - grand_mean) * (m - grand_mean);
    for (double v : g.values) ss_within += (v - m) * (v - m);
  }

  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = total - groups.size();
  if (ss_within == 0.0) {
    if (ss_between == 0.0) {
      r.degenerate = true;
      r.f_stat = 0.0;
      r.p_value = 1.0;
    } else {
      r.f_stat = std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  const double ms_between = ss_between / static_cast<double>(r.df_between);
  const double ms_within = ss_within / static_cast<double>(r.df_within);
  r.f_stat = ms_between / ms_within;
  r.p_value = f_upper_tail(r.f_stat, static_cast<double>(r.df_between),
                           static_cast<double>(r.df_within));
  return r;
}

IccResult icc_two_way(const std::vector<std::vector<double>>& ratings, double alpha) {
  std::vector<const std::vector<double>*> rows;
  std::size_t k = 0;
  for (const auto& row : ratings) {
    if (k == 0) k = row.size();
    if (row.size() != k) throw InsufficientData("ICC rating rows have different lengths");
    if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
      rows.push_back(&row);
    }
  }
  const std::size_t n = rows.size();
  if (k < 2) throw InsufficientData("ICC needs at least two raters");
  if (n < 5) throw InsufficientData("ICC needs at least 5 complete subjects, got " + std::to_string(n));

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0);
  std::vector<double> col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = (*rows[i])[j];
      row_mean[i] += v / kd;
      col_mean[j] += v / nd;
      grand += v;
    }
  }
  grand /= nd * kd;

  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += kd * (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < k; ++j) ss_cols += nd * (col_mean[j] - grand) * (col_mean[j] - grand);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double resid = (*rows[i])[j] - row_mean[i] - col_mean[j] + grand;
      ss_error += resid * resid;
    }
  }
  const double ms_rows = ss_rows / (nd - 1.0);
  const double ms_cols = ss_cols / (kd - 1.0);
  const double ms_error = ss_error / ((nd - 1.0) * (kd - 1.0));

  IccResult r;
  r.n_subjects = n;
  r.n_raters = k;

  const double denom = ms_rows + (kd - 1.0) * ms_error + kd * (ms_cols - ms_error) / nd;
  if (denom <= 0.0) throw DegenerateInput("ICC undefined: ratings have no variance");

  // Relative to the overall scale, residual and rater effects vanish: perfect agreement.
  const double scale = std::max({ms_rows, ms_cols, 1.0});
  if (ms_error <= 1e-14 * scale && ms_cols <= 1e-14 * scale) {
    r.estimate = r.ci_low = r.ci_high = 1.0;
    return r;
  }

  const double icc = (ms_rows - ms_error) / denom;

  // Shrout & Fleiss (1979) approximate interval for ICC(2,1).
  const double a = kd * icc / (nd * (1.0 - icc));
  const double b = 1.0 + kd * icc * (nd - 1.0) / (nd * (1.0 - icc));
  const double v_num = (a * ms_cols + b * ms_error) * (a * ms_cols + b * ms_error);
  const double v_den = (a * ms_cols) * (a * ms_cols) / (kd - 1.0) +
                       (b * ms_error) * (b * ms_error) / ((nd - 1.0) * (kd - 1.0));
  const double v = v_num / v_den;
  const double f_star_upper = f_quantile(1.0 - alpha / 2.0, nd - 1.0, v);
  const double f_star_lower = f_quantile(1.0 - alpha / 2.0, v, nd - 1.0);
  const double c = kd * ms_cols + (kd * nd - kd - nd) * ms_error;
  double low = nd * (ms_rows - f_star_upper * ms_error) / (f_star_upper * c + nd * ms_rows);
  double high = nd * (f_star_lower * ms_rows - ms_error) / (c + nd * f_star_lower * ms_rows);

  r.estimate = std::clamp(icc, -1.0, 1.0);
  if (!std::isfinite(low)) low = -1.0;
  if (!std::isfinite(high)) high = 1.0;
  r.ci_low = std::clamp(std::min(low, r.estimate), -1.0, 1.0);
  r.ci_high = std::clamp(std::max(high, r.estimate), -1.0, 1.0);
  return r;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw InsufficientData("Welch t needs at least two observations per sample");
  }
  for (auto xs : {a, b}) {
    for (double x : xs) {
      if (!std::isfinite(x)) throw DegenerateInput("Welch t input has a non-finite value");
    }
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double sa = sample_sd(a);
  const double sb = sample_sd(b);
  const double va = sa * sa / na;
  const double vb = sb * sb / nb;

  WelchResult r;
  if (va + vb == 0.0) {
    if (ma == mb) throw DegenerateInput("Welch t undefined: both samples constant and equal");
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = t_two_sided(r.t, r.df);
  return r;
}

std::map<Category, AnovaResult> anova_by_category(const std::vector<ratings::LikertRecord>& records) {
  std::map<std::string, std::array<std::vector<double>, 3>> by_label;
  for (const auto& r : records) {
    for (auto c : kCategories) {
      by_label[r.config_label][static_cast<std::size_t>(c)].push_back(score_of(r.scores, c));
    }
  }
  std::map<Category, AnovaResult> out;
  for (auto c : kCategories) {
    std::vector<Group> groups;
    for (const auto& [label, cols] : by_label) {
      groups.push_back({label, cols[static_cast<std::size_t>(c)]});
    }
    out[c] = one_way_anova(groups);
  }
  return out;
}

std::map<Category, IccResult> icc_by_category(const std::vector<ratings::LikertRecord>& records) {
  std::set<std::string> raters;
  std::map<std::pair<std::string, std::string>, std::map<std::string, ratings::Scores>> subjects;
  for (const auto& r : records) {
    raters.insert(r.rater_id);
    subjects[{r.profile_id, r.config_label}][r.rater_id] = r.scores;
  }
  std::map<Category, IccResult> out;
  if (raters.size() < 2) return out;
  for (auto c : kCategories) {
    std::vector<std::vector<double>> matrix;
    for (const auto& [_, by_rater] : subjects) {
      std::vector<double> row;
      for (const auto& rater : raters) {
        auto it = by_rater.find(rater);
        row.push_back(it == by_rater.end() ? std::numeric_limits<double>::quiet_NaN()
                                           : static_cast<double>(score_of(it->second, c)));
      }
      matrix.push_back(std::move(row));
    }
    try {
      out[c] = icc_two_way(matrix);
    } catch (const InsufficientData&) {
    } catch (const DegenerateInput&) {
    }
  }
  return out;
}

}  // namespace ragmat::stats

#include "ragmat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::report {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

namespace {

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(x));
  return buf;
}

}  // namespace

std::string format_cell(double mean, double sd) { return fixed2(mean) + " (" + fixed2(sd) + ")"; }

std::vector<ReadabilitySummary> summarize_readability(
    const std::vector<textmetrics::ReadabilityRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const textmetrics::ReadabilityRow*>> groups;
  for (const auto& r : rows) {
    auto& g = groups[r.config_label];
    if (g.empty()) order.push_back(r.config_label);
    g.push_back(&r);
  }
  std::vector<ReadabilitySummary> out;
  for (const auto& label : order) {
    const auto& g = groups[label];
    std::vector<double> fres;
    ReadabilitySummary s;
    s.config_label = label;
    s.n = g.size();
    for (const auto* r : g) {
      fres.push_back(r->fres);
      s.words += static_cast<double>(r->counts.num_words);
      s.syllables += static_cast<double>(r->counts.num_syllables);
      s.sentences += static_cast<double>(r->counts.num_sentences);
    }
    const double n = static_cast<double>(s.n);
    s.words /= n;
    s.syllables /= n;
    s.sentences /= n;
    s.fres_mean = stats::mean(fres);
    s.fres_sd = stats::sample_sd(fres);
    s.grade_label = textmetrics::grade_label(s.fres_mean);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ReadabilityComparison> compare_ragfs_nrag(
    const std::vector<textmetrics::ReadabilityRow>& rows) {
  std::map<std::string, std::vector<double>> by_label;
  for (const auto& r : rows) by_label[r.config_label].push_back(r.fres);
  std::vector<ReadabilityComparison> out;
  constexpr std::string_view kSuffix = "_RAGFS";
  for (const auto& [label, values] : by_label) {
    if (label.size() <= kSuffix.size() ||
        label.compare(label.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
      continue;
    }
    const auto model = label.substr(0, label.size() - kSuffix.size());
    auto other = by_label.find(model + "_NRAG");
    if (other == by_label.end() || values.size() < 2 || other->second.size() < 2) continue;
    try {
      out.push_back({model, label, other->first, stats::welch_t(values, other->second)});
    } catch (const Error&) {
    }
  }
  return out;
}

Reports render_reports(const std::vector<stats::ConfigSummary>& summaries,
                       const std::vector<textmetrics::ReadabilityRow>& readability_rows,
                       const std::map<stats::Category, stats::AnovaResult>& anovas,
                       const std::map<stats::Category, stats::IccResult>& iccs) {
  Reports out;
  const auto readability = summarize_readability(readability_rows);

  if (!readability.empty()) {
    std::set<std::string> a;
    std::set<std::string> b;
    for (const auto& s : summaries) a.insert(s.config_label);
    for (const auto& r : readability) b.insert(r.config_label);
    if (a != b) {
      std::string diff;
      for (const auto& l : a) if (!b.count(l)) diff += " " + l + "(no readability)";
      for (const auto& l : b) if (!a.count(l)) diff += " " + l + "(no scores)";
      throw LabelMismatch("score and readability labels differ:" + diff);
    }
  }
  std::map<std::string, const ReadabilitySummary*> read_by_label;
  for (const auto& r : readability) read_by_label[r.config_label] = &r;

  // Table 2
  std::string md = "# Evaluation report\n\n## Likert scores\n\n";
  md += "| Model | Redundancy | Accuracy | Completeness | Total |\n|---|---|---|---|---|\n";
  out.table2_csv = "config_label,redundancy,accuracy,completeness,total_score\n";
  for (const auto& s : summaries) {
    std::string row = csv::escape(s.config_label);
    std::string mdrow = "| " + s.config_label;
    for (auto c : stats::kCategories) {
      const auto cell = format_cell(s[c].mean, s[c].sd);
      row += "," + cell;
      mdrow += " | " + cell;
    }
    row += "," + fixed2(s.total_score);
    mdrow += " | " + fixed2(s.total_score) + " |";
    out.table2_csv += row + "\n";
    md += mdrow + "\n";
  }

  // Table 3
  md += "\n## Readability\n\n";
  if (readability.empty()) {
    out.notices.push_back("no readability data; readability table omitted");
    md += "_No readability data was supplied; this section is omitted._\n";
  } else {
    std::string t3 = "config_label,fk_readability,fk_grade,num_words,num_syllables,num_sentences\n";
    md += "| Model | FK Readability | FK Grade | Num Words | Num Syllables | Num Sentences |\n"
          "|---|---|---|---|---|---|\n";
    for (const auto& s : summaries) {
      const auto& r = *read_by_label.at(s.config_label);
      const auto cell = format_cell(r.fres_mean, r.fres_sd);
      t3 += csv::escape(r.config_label) + "," + cell + "," + r.grade_label + "," + fixed2(r.words) +
            "," + fixed2(r.syllables) + "," + fixed2(r.sentences) + "\n";
      md += "| " + r.config_label + " | " + cell + " | " + r.grade_label + " | " + fixed2(r.words) +
            " | " + fixed2(r.syllables) + " | " + fixed2(r.sentences) + " |\n";
    }
    out.table3_csv = std::move(t3);
  }

  // Inferential statistics
  out.anova = nlohmann::json::object();
  md += "\n## ANOVA by category\n\n";
  for (const auto& [c, a] : anovas) {
    out.anova[std::string(stats::to_string(c))] = {{"f_stat", std::isfinite(a.f_stat) ? nlohmann::json(a.f_stat) : nlohmann::json("inf")},
                                                   {"df_between", a.df_between},
                                                   {"df_within", a.df_within},
                                                   {"p_value", a.p_value},
                                                   {"degenerate", a.degenerate}};
    char buf[160];
    std::snprintf(buf, sizeof buf, "- %s: F(%zu, %zu) = %.2f, p = %.4g%s\n",
                  std::string(stats::to_string(c)).c_str(), a.df_between, a.df_within, a.f_stat,
                  a.p_value, a.degenerate ? " (all observations identical)" : "");
    md += buf;
  }
  out.icc = nlohmann::json::object();
  md += "\n## Inter-rater reliability, ICC(2,1)\n\n";
  for (auto c : stats::kCategories) {
    auto it = iccs.find(c);
    const std::string name(stats::to_string(c));
    if (it == iccs.end()) {
      out.notices.push_back("ICC for " + name + " not computable (need two raters and 5 complete subjects)");
      md += "- " + name + ": not computable\n";
      continue;
    }
    const auto& r = it->second;
    out.icc[name] = {{"form", "ICC(2,1)"},
                     {"estimate", r.estimate},
                     {"ci95", {r.ci_low, r.ci_high}},
                     {"n_subjects", r.n_subjects},
                     {"n_raters", r.n_raters}};
    md += "- " + name + ": " + fixed2(r.estimate) + " [" + fixed2(r.ci_low) + ", " +
          fixed2(r.ci_high) + "]\n";
  }

  // Radar data: Likert axes as-is, readability min-max scaled over configs.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : readability) {
    lo = std::min(lo, r.fres_mean);
    hi = std::max(hi, r.fres_mean);
  }
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : summaries) {
    double scaled = 0.0;
    if (auto it = read_by_label.find(s.config_label); it != read_by_label.end()) {
      scaled = hi > lo ? (it->second->fres_mean - lo) / (hi - lo) : 1.0;
    }
    series.push_back({{"label", s.config_label},
                      {"values",
                       {s[stats::Category::redundancy].mean, s[stats::Category::accuracy].mean,
                        s[stats::Category::completeness].mean, scaled}},
                      {"total_score", s.total_score}});
  }
  out.radar = {{"axes", {"redundancy", "accuracy", "completeness", "readability"}},
               {"readability_scaling", readability.empty() ? "none (no readability data)"
                                                           : "min-max over configurations"},
               {"series", series}};

  if (!out.notices.empty()) {
    md += "\n## Notices\n\n";
    for (const auto& n : out.notices) md += "- " + n + "\n";
  }
  out.markdown = std::move(md);
  return out;
}

}  // namespace ragmat::report

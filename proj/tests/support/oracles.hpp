#pragma once

// Reference implementations used only as test oracles. Each is written from
// the textbook definition, independently of the library code, and p-values
// come from boost::math distributions rather than the library's own
// incomplete beta.

#include <string>
#include <vector>

#include "ragmat/corpus.hpp"

namespace ragmat::testing {

struct OracleHit {
  std::string doc_id;
  std::string section_id;
  double distance = 0.0;
};

struct OracleChunk {
  std::string doc_id;
  std::string section_id;
  std::vector<double> vector;
};

/// All distances, min per section, filter, sort by (distance, doc, section), cut.
std::vector<OracleHit> brute_force_search(const std::vector<OracleChunk>& chunks,
                                          const std::vector<double>& query, std::size_t k,
                                          double max_distance);

struct OracleAnova {
  double f = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 1.0;
};
OracleAnova reference_anova(const std::vector<std::vector<double>>& groups);

struct OracleWelch {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};
OracleWelch reference_welch(const std::vector<double>& a, const std::vector<double>& b);

struct OracleIcc {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};
/// ICC(2,1) with the Shrout-Fleiss interval; F quantiles from boost::math.
OracleIcc reference_icc21(const std::vector<std::vector<double>>& m);

}  // namespace ragmat::testing

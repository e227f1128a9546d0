#include "fixtures.hpp"

#include <atomic>
#include <random>

#ifndef RAGMAT_FIXTURES_DIR
#error "RAGMAT_FIXTURES_DIR must be defined"
#endif

namespace ragmat::testing {

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(RAGMAT_FIXTURES_DIR) / relative;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("ragmat-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<ratings::LikertRecord> histogram_records(const std::string& label,
                                                     const std::vector<int>& counts,
                                                     int category) {
  std::vector<ratings::LikertRecord> out;
  int id = 0;
  for (int score = 1; score <= static_cast<int>(counts.size()); ++score) {
    for (int i = 0; i < counts[static_cast<std::size_t>(score - 1)]; ++i, ++id) {
      ratings::Scores s{3, 3, 3};
      if (category == 0) s.redundancy = score;
      if (category == 1) s.accuracy = score;
      if (category == 2) s.completeness = score;
      out.push_back({"r" + std::to_string(id % 2 + 1), "p" + std::to_string(id / 2), label, s});
    }
  }
  return out;
}

const std::vector<std::string>& published_labels() {
  static const std::vector<std::string> labels = {
      "GPT-3.5-TURBO_RAGFS", "GPT-3.5-TURBO_RAGNFS", "GPT-4O-MINI_RAGFS", "GPT-4O-MINI_RAGNFS",
      "GPT-4O-MINI_NRAG",    "GPT-4O_RAGFS",         "GPT-4O_NRAG",       "GPT-4_RAGFS",
      "GPT-4_RAGNFS",        "GPT-4_NRAG"};
  return labels;
}

std::vector<pipeline::GeneratedMaterial> synthetic_run(std::size_t n_profiles,
                                                       const std::vector<std::string>& labels) {
  std::vector<pipeline::GeneratedMaterial> run;
  for (std::size_t p = 0; p < n_profiles; ++p) {
    for (std::size_t l = 0; l < labels.size(); ++l) {
      pipeline::GeneratedMaterial m;
      m.run_id = "run-fixture";
      m.profile_id = "patient-" + std::to_string(p);
      m.config_label = labels[l];
      m.bundle_hash = "h" + std::to_string(p * 100 + l);
      m.text = "**Tips:**\n1. Bend your knees. Output " + std::to_string(p) + "/" + std::to_string(l) + ".";
      m.created_at = "2024-01-01T00:00:00.000Z";
      m.profile_summary = "Patient profile\nWork status: office worker " + std::to_string(p);
      run.push_back(std::move(m));
    }
  }
  return run;
}

}  // namespace ragmat::testing

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ragmat/pipeline.hpp"
#include "ragmat/ratings.hpp"

namespace ragmat::testing {

std::filesystem::path fixture_path(const std::string& relative);

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Likert scores whose histogram over 1..5 is `counts`, spread over raters
/// "r1".."rN" on synthetic profiles, all under `label`. Only `category`
/// varies; the other two categories hold 3.
std::vector<ratings::LikertRecord> histogram_records(const std::string& label,
                                                     const std::vector<int>& counts,
                                                     int category);

/// The ten configuration labels scored in the published evaluation.
const std::vector<std::string>& published_labels();

/// One material per (profile, label); texts carry no label or model strings.
std::vector<pipeline::GeneratedMaterial> synthetic_run(std::size_t n_profiles,
                                                       const std::vector<std::string>& labels);

}  // namespace ragmat::testing

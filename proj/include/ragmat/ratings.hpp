#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmat/pipeline.hpp"

namespace ragmat::ratings {

struct Scores {
  int redundancy = 0;
  int accuracy = 0;
  int completeness = 0;

  friend bool operator==(const Scores&, const Scores&) = default;
};

/// Throws ScoreOutOfRange unless every score is in 1..5.
void validate(const Scores& scores);

struct LikertRecord {
  std::string rater_id;
  std::string profile_id;
  std::string config_label;
  Scores scores;

  friend bool operator==(const LikertRecord&, const LikertRecord&) = default;
};

struct RecordKey {
  std::string rater_id;
  std::string profile_id;
  std::string config_label;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

inline RecordKey key_of(const LikertRecord& r) { return {r.rater_id, r.profile_id, r.config_label}; }

struct AuditEntry {
  std::string timestamp;
  Scores scores;
};

/// Latest score per (rater, profile, config) plus the full submission history.
/// One writer, many readers. With a journal path every submission is appended
/// as a JSON line and replayed on construction.
class ScoreStore {
 public:
  ScoreStore() = default;
  explicit ScoreStore(std::filesystem::path journal);

  void record(const LikertRecord& record);

  std::vector<LikertRecord> records() const;  // sorted by key
  std::vector<AuditEntry> audit(const RecordKey& key) const;
  std::optional<LikertRecord> find(const RecordKey& key) const;
  std::size_t size() const;

 private:
  void apply(const LikertRecord& record, std::string timestamp);

  std::optional<std::filesystem::path> journal_;
  mutable std::shared_mutex mutex_;
  std::map<RecordKey, LikertRecord> latest_;
  std::map<RecordKey, std::vector<AuditEntry>> audit_;
};

inline constexpr std::string_view kCsvHeader =
    "rater_id,profile_id,config_label,redundancy,accuracy,completeness";

std::string to_csv(const std::vector<LikertRecord>& records);

/// Throws MalformedRow(line_no, ...) and DuplicateKey.
std::vector<LikertRecord> parse_scores_csv(std::string_view text);
std::vector<LikertRecord> import_scores(const std::filesystem::path& csv_path);
void export_scores(const ScoreStore& store, const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Blinded review sessions

struct ReviewItem {
  std::string item_token;
  std::string material_text;
  std::string profile_summary;
};

struct ReviewSession {
  std::string session_id;
  std::string rater_id;
  std::int64_t seed = 0;
  std::vector<ReviewItem> items;
  std::size_t progress = 0;
};

/// Client-facing session JSON. Carries no model or configuration identifiers.
nlohmann::json to_client_json(const ReviewSession& session);
nlohmann::json to_client_json(const ReviewItem& item, std::size_t position, std::size_t total);

/// Materials from one run plus the server-side token map.
class ReviewService {
 public:
  ReviewService(std::vector<pipeline::GeneratedMaterial> run, std::vector<std::string> default_include,
                std::shared_ptr<ScoreStore> store);

  /// Deterministic in (run content, include, rater_id, seed); recreating an
  /// existing session returns it with its progress. Throws UnknownConfigLabel.
  ReviewSession build_session(const std::string& rater_id, std::int64_t seed,
                              std::vector<std::string> include = {});

  /// nullopt when the session is exhausted.
  std::optional<std::pair<ReviewItem, std::size_t>> next_item(const std::string& session_id);

  /// Returns the number of scored items in the session afterwards.
  std::size_t record_score(const std::string& session_id, const std::string& item_token,
                           const Scores& scores);

  ReviewSession session(const std::string& session_id) const;
  const std::string& run_hash() const noexcept { return run_hash_; }
  ScoreStore& store() noexcept { return *store_; }
  const std::vector<std::string>& default_include() const noexcept { return default_include_; }

 private:
  struct Target {
    std::string profile_id;
    std::string config_label;
  };
  struct SessionState {
    ReviewSession session;
    std::map<std::string, Target> tokens;
    std::map<std::string, bool> scored;
    std::mutex write_mutex;
  };

  SessionState& state(const std::string& session_id) const;

  std::vector<pipeline::GeneratedMaterial> run_;
  std::vector<std::string> default_include_;
  std::shared_ptr<ScoreStore> store_;
  std::string run_hash_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

/// Free-function form: a one-off session over `run`.
ReviewSession build_review_session(const std::vector<pipeline::GeneratedMaterial>& run,
                                   const std::vector<std::string>& include,
                                   const std::string& rater_id, std::int64_t seed);

}  // namespace ragmat::ratings

#include "ragmat/ratings.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::ratings {

void validate(const Scores& s) {
  auto check = [](int v, const char* name) {
    if (v < 1 || v > 5) {
      throw ScoreOutOfRange(std::string(name) + " must be in 1..5, got " + std::to_string(v));
    }
  };
  check(s.redundancy, "redundancy");
  check(s.accuracy, "accuracy");
  check(s.completeness, "completeness");
}

// ---------------------------------------------------------------------------
// ScoreStore

namespace {

nlohmann::json journal_line(const LikertRecord& r, const std::string& ts) {
  return {{"timestamp", ts},
          {"rater_id", r.rater_id},
          {"profile_id", r.profile_id},
          {"config_label", r.config_label},
          {"redundancy", r.scores.redundancy},
          {"accuracy", r.scores.accuracy},
          {"completeness", r.scores.completeness}};
}

}  // namespace

ScoreStore::ScoreStore(std::filesystem::path journal) : journal_(std::move(journal)) {
  for (const auto& line : read_lines(*journal_)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;  // torn tail
    }
    LikertRecord r{j.at("rater_id"), j.at("profile_id"), j.at("config_label"),
                   {j.at("redundancy"), j.at("accuracy"), j.at("completeness")}};
    validate(r.scores);
    apply(r, j.value("timestamp", ""));
  }
}

void ScoreStore::apply(const LikertRecord& record, std::string timestamp) {
  const auto key = key_of(record);
  latest_[key] = record;
  audit_[key].push_back({std::move(timestamp), record.scores});
}

void ScoreStore::record(const LikertRecord& record) {
  validate(record.scores);
  const auto ts = utc_timestamp();
  std::unique_lock lock(mutex_);
  if (journal_) {
    if (journal_->has_parent_path()) std::filesystem::create_directories(journal_->parent_path());
    std::ofstream out(*journal_, std::ios::binary | std::ios::app);
    out << journal_line(record, ts).dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append to " + journal_->string());
  }
  apply(record, ts);
}

std::vector<LikertRecord> ScoreStore::records() const {
  std::shared_lock lock(mutex_);
  std::vector<LikertRecord> out;
  out.reserve(latest_.size());
  for (const auto& [_, r] : latest_) out.push_back(r);
  return out;
}

std::vector<AuditEntry> ScoreStore::audit(const RecordKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = audit_.find(key);
  return it == audit_.end() ? std::vector<AuditEntry>{} : it->second;
}

std::optional<LikertRecord> ScoreStore::find(const RecordKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = latest_.find(key);
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::size_t ScoreStore::size() const {
  std::shared_lock lock(mutex_);
  return latest_.size();
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const std::vector<LikertRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv::escape(r.rater_id) + ',' + csv::escape(r.profile_id) + ',' +
           csv::escape(r.config_label) + ',' + std::to_string(r.scores.redundancy) + ',' +
           std::to_string(r.scores.accuracy) + ',' + std::to_string(r.scores.completeness) + '\n';
  }
  return out;
}

namespace {

int parse_score(const std::string& field, std::size_t line_no, const char* name) {
  const auto t = trim(field);
  int v = 0;
  std::size_t used = 0;
  try {
    v = std::stoi(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw MalformedRow("line " + std::to_string(line_no) + ": " + name + " is not an integer");
  }
  if (v < 1 || v > 5) {
    throw MalformedRow("line " + std::to_string(line_no) + ": " + name + "=" + std::to_string(v) +
                       " outside 1..5");
  }
  return v;
}

}  // namespace

std::vector<LikertRecord> parse_scores_csv(std::string_view text) {
  auto lines = split(text, '\n');
  std::vector<LikertRecord> out;
  std::set<RecordKey> keys;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t line_no = i + 1;
    if (!header_seen) {
      if (trim(line) != kCsvHeader) {
        throw MalformedRow("line " + std::to_string(line_no) + ": expected header '" +
                           std::string(kCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = csv::parse_line(line);
    if (f.size() != 6) {
      throw MalformedRow("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                         std::to_string(f.size()));
    }
    LikertRecord r{f[0], f[1], f[2],
                   {parse_score(f[3], line_no, "redundancy"), parse_score(f[4], line_no, "accuracy"),
                    parse_score(f[5], line_no, "completeness")}};
    if (r.rater_id.empty() || r.profile_id.empty() || r.config_label.empty()) {
      throw MalformedRow("line " + std::to_string(line_no) + ": empty identifier");
    }
    if (!keys.insert(key_of(r)).second) {
      throw DuplicateKey("line " + std::to_string(line_no) + ": " + r.rater_id + "/" +
                         r.profile_id + "/" + r.config_label);
    }
    out.push_back(std::move(r));
  }
  if (!header_seen) throw MalformedRow("line 1: missing header");
  return out;
}

std::vector<LikertRecord> import_scores(const std::filesystem::path& csv_path) {
  return parse_scores_csv(read_file(csv_path));
}

void export_scores(const ScoreStore& store, const std::filesystem::path& csv_path) {
  write_file_atomic(csv_path, to_csv(store.records()));
}

// ---------------------------------------------------------------------------
// Sessions

nlohmann::json to_client_json(const ReviewItem& item, std::size_t position, std::size_t total) {
  return {{"item_token", item.item_token},
          {"material_text", item.material_text},
          {"profile_summary", item.profile_summary},
          {"position", position},
          {"total", total}};
}

nlohmann::json to_client_json(const ReviewSession& session) {
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < session.items.size(); ++i) {
    items.push_back(to_client_json(session.items[i], i + 1, session.items.size()));
  }
  return {{"session_id", session.session_id},
          {"rater_id", session.rater_id},
          {"seed", session.seed},
          {"total", session.items.size()},
          {"progress", session.progress},
          {"items", items}};
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in [0, bound) by rejection.
std::uint64_t bounded(std::uint64_t& state, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = 0;
  do {
    x = splitmix64(state);
  } while (x >= limit);
  return x % bound;
}

std::string hash_run(const std::vector<pipeline::GeneratedMaterial>& run) {
  std::vector<std::string> parts;
  parts.reserve(run.size());
  for (const auto& m : run) {
    parts.push_back(nlohmann::json::array({m.profile_id, m.config_label, m.text}).dump());
  }
  std::sort(parts.begin(), parts.end());
  std::string all;
  for (const auto& p : parts) all += p + "\n";
  return sha256_hex(all);
}

std::vector<const pipeline::GeneratedMaterial*> select(
    const std::vector<pipeline::GeneratedMaterial>& run, const std::vector<std::string>& include) {
  if (include.empty()) throw UnknownConfigLabel("include list is empty");
  std::set<std::string> wanted(include.begin(), include.end());
  std::map<std::pair<std::string, std::string>, const pipeline::GeneratedMaterial*> latest;
  std::set<std::string> present;
  for (const auto& m : run) {
    present.insert(m.config_label);
    if (wanted.count(m.config_label) != 0) latest[{m.profile_id, m.config_label}] = &m;
  }
  for (const auto& label : wanted) {
    if (present.count(label) == 0) throw UnknownConfigLabel(label);
  }
  std::vector<const pipeline::GeneratedMaterial*> out;
  out.reserve(latest.size());
  for (const auto& [_, m] : latest) out.push_back(m);  // canonical (profile, label) order
  return out;
}

std::string session_material(const std::string& run_hash, std::vector<std::string> include,
                             const std::string& rater_id, std::int64_t seed) {
  std::sort(include.begin(), include.end());
  include.erase(std::unique(include.begin(), include.end()), include.end());
  nlohmann::json j = {run_hash, include, rater_id, seed};
  return j.dump();
}

struct Built {
  ReviewSession session;
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> tokens;
};

Built build(const std::vector<pipeline::GeneratedMaterial>& run, const std::string& run_hash,
            const std::vector<std::string>& include, const std::string& rater_id,
            std::int64_t seed) {
  auto chosen = select(run, include);
  const auto material = session_material(run_hash, include, rater_id, seed);
  const auto digest = sha256_hex(material);
  std::uint64_t state = std::stoull(digest.substr(0, 16), nullptr, 16);
  for (std::size_t i = chosen.size(); i > 1; --i) {
    std::swap(chosen[i - 1], chosen[bounded(state, i)]);
  }

  Built b;
  b.session.session_id = "s-" + digest.substr(16, 16);
  b.session.rater_id = rater_id;
  b.session.seed = seed;
  for (const auto* m : chosen) {
    const auto token =
        "t-" + sha256_hex(b.session.session_id + "\n" + m->profile_id + "\n" + m->config_label)
                   .substr(0, 20);
    b.session.items.push_back({token, m->text, m->profile_summary});
    b.tokens.push_back({token, {m->profile_id, m->config_label}});
  }
  return b;
}

}  // namespace

ReviewSession build_review_session(const std::vector<pipeline::GeneratedMaterial>& run,
                                   const std::vector<std::string>& include,
                                   const std::string& rater_id, std::int64_t seed) {
  return build(run, hash_run(run), include, rater_id, seed).session;
}

ReviewService::ReviewService(std::vector<pipeline::GeneratedMaterial> run,
                             std::vector<std::string> default_include,
                             std::shared_ptr<ScoreStore> store)
    : run_(std::move(run)),
      default_include_(std::move(default_include)),
      store_(store ? std::move(store) : std::make_shared<ScoreStore>()),
      run_hash_(hash_run(run_)) {
  if (default_include_.empty()) {
    std::set<std::string> labels;
    for (const auto& m : run_) labels.insert(m.config_label);
    default_include_.assign(labels.begin(), labels.end());
  }
}

ReviewSession ReviewService::build_session(const std::string& rater_id, std::int64_t seed,
                                           std::vector<std::string> include) {
  if (trim(rater_id).empty()) throw std::invalid_argument("rater_id must not be empty");
  if (include.empty()) include = default_include_;
  auto built = build(run_, run_hash_, include, rater_id, seed);

  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(built.session.session_id);
  if (it == sessions_.end()) {
    auto st = std::make_unique<SessionState>();
    for (auto& [token, target] : built.tokens) {
      const bool done = store_->find({rater_id, target.first, target.second}).has_value();
      st->tokens[token] = {target.first, target.second};
      st->scored[token] = done;
      if (done) ++built.session.progress;
    }
    st->session = std::move(built.session);
    it = sessions_.emplace(st->session.session_id, std::move(st)).first;
  }
  std::lock_guard write(it->second->write_mutex);
  return it->second->session;
}

ReviewService::SessionState& ReviewService::state(const std::string& session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw UnknownSession(session_id);
  return *it->second;
}

ReviewSession ReviewService::session(const std::string& session_id) const {
  auto& st = state(session_id);
  std::lock_guard write(st.write_mutex);
  return st.session;
}

std::optional<std::pair<ReviewItem, std::size_t>> ReviewService::next_item(
    const std::string& session_id) {
  auto& st = state(session_id);
  std::lock_guard write(st.write_mutex);
  for (std::size_t i = 0; i < st.session.items.size(); ++i) {
    const auto& item = st.session.items[i];
    if (!st.scored.at(item.item_token)) return std::make_pair(item, i + 1);
  }
  return std::nullopt;
}

std::size_t ReviewService::record_score(const std::string& session_id,
                                        const std::string& item_token, const Scores& scores) {
  auto& st = state(session_id);
  validate(scores);
  std::lock_guard write(st.write_mutex);
  auto it = st.tokens.find(item_token);
  if (it == st.tokens.end()) throw UnknownItemToken(item_token);
  store_->record({st.session.rater_id, it->second.profile_id, it->second.config_label, scores});
  auto& done = st.scored.at(item_token);
  if (!done) {
    done = true;
    ++st.session.progress;
  }
  return st.session.progress;
}

}  // namespace ragmat::ratings

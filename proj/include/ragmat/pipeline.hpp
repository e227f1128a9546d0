#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmat/embedder.hpp"
#include "ragmat/endpoint.hpp"
#include "ragmat/vectorstore.hpp"

namespace ragmat::pipeline {

enum class Mode { RAGFS, RAGNFS, NRAG };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

inline constexpr std::string_view kInstruction =
    "please create patient education materials written at a 6th-grade level Flesch-Kincaid "
    "Grade Level";

inline constexpr std::string_view kContextOpen = "<CONTEXT>";
inline constexpr std::string_view kContextClose = "</CONTEXT>";

inline constexpr std::array<std::string_view, 7> kBeliefKeys = {
    "exercise", "desk_posture", "lifting_technique", "physical_therapists",
    "injections", "imaging", "bed_rest"};

struct PatientProfile {
  std::string profile_id;
  std::string work_status;
  std::string daily_activity_level;
  std::string exercise_routine;
  std::map<std::string, std::string> beliefs;  // exactly kBeliefKeys
};

PatientProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PatientProfile& p);

/// Reads a JSON array of profiles; ids must be unique.
std::vector<PatientProfile> load_profiles(const std::filesystem::path& path);

/// Human-readable summary used in prompts and shown to reviewers.
std::string render_profile(const PatientProfile& profile);

struct GenerationConfig {
  std::string model_id;
  Mode mode = Mode::RAGFS;
  double temperature = 0.0;
  std::size_t k = vectorstore::kDefaultTopK;
  double max_distance = vectorstore::kDefaultMaxDistance;
  std::string label;  // "MODEL_MODE"
};

/// "gpt-4o" + RAGFS -> "GPT-4O_RAGFS".
std::string default_label(std::string_view model_id, Mode mode);

GenerationConfig config_from_json(const nlohmann::json& j);
std::vector<GenerationConfig> load_configs(const std::filesystem::path& path);

struct FewShotExample {
  std::string prompt;
  std::string output;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

/// The two worked examples (safe lifting, desk ergonomics) in fixed order.
const std::vector<FewShotExample>& default_few_shot_examples();

std::string default_system_prompt();

struct ContextPassage {
  std::string source;  // "title: heading"
  std::string body;

  friend bool operator==(const ContextPassage&, const ContextPassage&) = default;
};

struct PromptBundle {
  std::string system_prompt;
  std::vector<FewShotExample> few_shot_examples;
  std::vector<ContextPassage> retrieved_context;
  std::string user_query;
  Mode mode = Mode::NRAG;
};

nlohmann::json to_json(const PromptBundle& bundle);

/// SHA-256 over the canonical JSON form of the bundle.
std::string bundle_hash(const PromptBundle& bundle);

/// Profile summary followed by the grade-level instruction.
std::string build_user_query(const PatientProfile& profile);

/// Throws ModeContextMismatch when `hits` is empty for a RAG mode or
/// non-empty for NRAG.
PromptBundle assemble_prompt(const PatientProfile& profile,
                             const std::vector<vectorstore::SectionHit>& hits, Mode mode,
                             const std::string& system_prompt = default_system_prompt());

struct ChatMessage {
  std::string role;
  std::string content;
};

/// system (+ CONTEXT block), few-shot user/assistant pairs, final user query.
std::vector<ChatMessage> build_messages(const PromptBundle& bundle);

nlohmann::json chat_request(const PromptBundle& bundle, const GenerationConfig& config);

struct ChatCompletion {
  std::string text;
  nlohmann::json metadata = nlohmann::json::object();
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatCompletion complete(const nlohmann::json& request) = 0;
};

/// POST /v1/chat/completions. Throws EndpointError, EmptyCompletion.
class HttpChatBackend final : public ChatBackend {
 public:
  HttpChatBackend(EndpointConfig endpoint, std::shared_ptr<RequestBudget> budget);
  ChatCompletion complete(const nlohmann::json& request) override;

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<RequestBudget> budget_;
};

/// Returns the final user message unchanged. Offline dry runs.
class EchoChatBackend final : public ChatBackend {
 public:
  ChatCompletion complete(const nlohmann::json& request) override;
};

std::unique_ptr<ChatBackend> make_chat_backend(const EndpointConfig& endpoint,
                                               std::shared_ptr<RequestBudget> budget = nullptr);

struct GeneratedMaterial {
  std::string run_id;
  std::string profile_id;
  std::string config_label;
  std::string bundle_hash;
  std::string text;
  std::string created_at;
  nlohmann::json endpoint_metadata = nlohmann::json::object();
  std::string profile_summary;
};

nlohmann::json to_json(const GeneratedMaterial& m);
GeneratedMaterial material_from_json(const nlohmann::json& j);

/// Skips unparseable lines (e.g. a torn final write).
std::vector<GeneratedMaterial> load_run(const std::filesystem::path& path);

GeneratedMaterial generate(const PromptBundle& bundle, const GenerationConfig& config,
                           ChatBackend& backend);
GeneratedMaterial generate(const PromptBundle& bundle, const GenerationConfig& config,
                           const EndpointConfig& endpoint);

struct PairFailure {
  std::string profile_id;
  std::string config_label;
  std::string error;
};

struct RunArtifacts {
  std::string run_id;
  std::filesystem::path out_path;
  std::vector<GeneratedMaterial> records;  // everything in out_path after the run
  std::vector<PairFailure> failures;
  std::size_t generated = 0;
  std::size_t skipped = 0;
  std::size_t retrievals = 0;
};

struct RunOptions {
  std::optional<std::string> run_id;
  std::size_t parallelism = 4;
  std::string system_prompt = default_system_prompt();
};

/// Generate every (profile, config) pair not already present in out_path and
/// append one JSON line per success. Index/embedder may be null when every
/// config is NRAG. Throws ExperimentFailed if every attempted pair fails.
RunArtifacts run_experiment(const std::vector<PatientProfile>& profiles,
                            const std::vector<GenerationConfig>& configs,
                            const vectorstore::Index* index, embedder::Embedder* embedder,
                            ChatBackend& chat, const std::filesystem::path& out_path,
                            const RunOptions& options = {});

}  // namespace ragmat::pipeline

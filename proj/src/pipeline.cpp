#include "ragmat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::pipeline {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::RAGFS: return "RAGFS";
    case Mode::RAGNFS: return "RAGNFS";
    case Mode::NRAG: return "NRAG";
  }
  return "NRAG";
}

std::optional<Mode> parse_mode(std::string_view text) {
  const auto upper = to_upper_ascii(text);
  if (upper == "RAGFS") return Mode::RAGFS;
  if (upper == "RAGNFS") return Mode::RAGNFS;
  if (upper == "NRAG") return Mode::NRAG;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Profiles and configurations

PatientProfile profile_from_json(const nlohmann::json& j) {
  PatientProfile p;
  try {
    p.profile_id = j.at("profile_id").get<std::string>();
    p.work_status = j.at("work_status").get<std::string>();
    p.daily_activity_level = j.at("daily_activity_level").get<std::string>();
    p.exercise_routine = j.at("exercise_routine").get<std::string>();
    const auto& beliefs = j.at("beliefs");
    for (auto key : kBeliefKeys) {
      const std::string k(key);
      if (!beliefs.contains(k)) {
        throw std::invalid_argument("profile " + p.profile_id + " is missing belief '" + k + "'");
      }
      p.beliefs[k] = beliefs.at(k).get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed patient profile: ") + e.what());
  }
  if (trim(p.profile_id).empty()) throw std::invalid_argument("profile_id must not be empty");
  return p;
}

nlohmann::json to_json(const PatientProfile& p) {
  return {{"profile_id", p.profile_id},
          {"work_status", p.work_status},
          {"daily_activity_level", p.daily_activity_level},
          {"exercise_routine", p.exercise_routine},
          {"beliefs", p.beliefs}};
}

std::vector<PatientProfile> load_profiles(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  if (!j.is_array()) throw std::invalid_argument(path.string() + ": expected a JSON array");
  std::vector<PatientProfile> out;
  std::set<std::string> ids;
  for (const auto& item : j) {
    auto p = profile_from_json(item);
    if (!ids.insert(p.profile_id).second) {
      throw std::invalid_argument("duplicate profile_id " + p.profile_id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string belief_title(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '_', ' ');
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

}  // namespace

std::string render_profile(const PatientProfile& profile) {
  std::string out = "Patient profile\n";
  out += "Work status: " + profile.work_status + "\n";
  out += "Daily activity level: " + profile.daily_activity_level + "\n";
  out += "Exercise routine: " + profile.exercise_routine + "\n";
  out += "Beliefs and attitudes:";
  for (auto key : kBeliefKeys) {
    out += "\n- " + belief_title(key) + ": " + profile.beliefs.at(std::string(key));
  }
  return out;
}

std::string default_label(std::string_view model_id, Mode mode) {
  return to_upper_ascii(model_id) + "_" + std::string(to_string(mode));
}

GenerationConfig config_from_json(const nlohmann::json& j) {
  GenerationConfig c;
  try {
    c.model_id = j.at("model_id").get<std::string>();
    const auto mode_text = j.at("mode").get<std::string>();
    const auto mode = parse_mode(mode_text);
    if (!mode) throw std::invalid_argument("unknown mode '" + mode_text + "'");
    c.mode = *mode;
    c.temperature = j.value("temperature", 0.0);
    c.k = j.value("k", vectorstore::kDefaultTopK);
    c.max_distance = j.value("max_distance", vectorstore::kDefaultMaxDistance);
    c.label = j.value("label", default_label(c.model_id, c.mode));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed generation config: ") + e.what());
  }
  if (c.model_id.empty()) throw std::invalid_argument("model_id must not be empty");
  if (c.temperature < 0.0) throw std::invalid_argument(c.label + ": temperature must be >= 0");
  if (c.k < 1) throw std::invalid_argument(c.label + ": k must be >= 1");
  if (c.max_distance < 0.0 || c.max_distance > 2.0) {
    throw std::invalid_argument(c.label + ": max_distance must lie in [0, 2]");
  }
  return c;
}

std::vector<GenerationConfig> load_configs(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  if (!j.is_array()) throw std::invalid_argument(path.string() + ": expected a JSON array");
  std::vector<GenerationConfig> out;
  std::set<std::string> labels;
  for (const auto& item : j) {
    auto c = config_from_json(item);
    if (!labels.insert(c.label).second) throw std::invalid_argument("duplicate label " + c.label);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt assembly

nlohmann::json to_json(const PromptBundle& bundle) {
  nlohmann::json shots = nlohmann::json::array();
  for (const auto& ex : bundle.few_shot_examples) {
    shots.push_back({{"prompt", ex.prompt}, {"output", ex.output}});
  }
  nlohmann::json context = nlohmann::json::array();
  for (const auto& p : bundle.retrieved_context) {
    context.push_back({{"source", p.source}, {"body", p.body}});
  }
  return {{"mode", to_string(bundle.mode)},
          {"system_prompt", bundle.system_prompt},
          {"few_shot_examples", shots},
          {"retrieved_context", context},
          {"user_query", bundle.user_query}};
}

std::string bundle_hash(const PromptBundle& bundle) { return sha256_hex(to_json(bundle).dump()); }

std::string build_user_query(const PatientProfile& profile) {
  return render_profile(profile) + "\n\nUsing the patient profile above, " +
         std::string(kInstruction) + ".";
}

PromptBundle assemble_prompt(const PatientProfile& profile,
                             const std::vector<vectorstore::SectionHit>& hits, Mode mode,
                             const std::string& system_prompt) {
  if (mode == Mode::NRAG && !hits.empty()) {
    throw ModeContextMismatch("NRAG prompts take no retrieved sections");
  }
  if (mode != Mode::NRAG && hits.empty()) {
    throw ModeContextMismatch(std::string(to_string(mode)) + " needs at least one retrieved section");
  }
  PromptBundle b;
  b.mode = mode;
  b.system_prompt = system_prompt;
  if (mode == Mode::RAGFS) b.few_shot_examples = default_few_shot_examples();
  for (const auto& h : hits) {
    std::string source = h.section.title;
    if (!h.section.heading.empty()) source += ": " + h.section.heading;
    b.retrieved_context.push_back({std::move(source), h.section.body});
  }
  b.user_query = build_user_query(profile);
  return b;
}

std::vector<ChatMessage> build_messages(const PromptBundle& bundle) {
  std::string system = bundle.system_prompt;
  if (!bundle.retrieved_context.empty()) {
    system += "\n\n";
    system += kContextOpen;
    system += "\n";
    for (std::size_t i = 0; i < bundle.retrieved_context.size(); ++i) {
      const auto& p = bundle.retrieved_context[i];
      system += "[" + std::to_string(i + 1) + "] " + p.source + "\n" + p.body + "\n\n";
    }
    system += kContextClose;
  }
  std::vector<ChatMessage> messages;
  messages.push_back({"system", std::move(system)});
  for (const auto& ex : bundle.few_shot_examples) {
    messages.push_back({"user", ex.prompt});
    messages.push_back({"assistant", ex.output});
  }
  messages.push_back({"user", bundle.user_query});
  return messages;
}

nlohmann::json chat_request(const PromptBundle& bundle, const GenerationConfig& config) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : build_messages(bundle)) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return {{"model", config.model_id}, {"temperature", config.temperature}, {"messages", messages}};
}

// ---------------------------------------------------------------------------
// Chat backends

HttpChatBackend::HttpChatBackend(EndpointConfig endpoint, std::shared_ptr<RequestBudget> budget)
    : endpoint_(std::move(endpoint)), budget_(std::move(budget)) {}

ChatCompletion HttpChatBackend::complete(const nlohmann::json& request) {
  auto response = post_json(endpoint_, "/v1/chat/completions", request, budget_.get());
  const auto& body = response.body;
  std::string text;
  std::string finish_reason;
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const auto& choice = body["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      text = choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      finish_reason = choice["finish_reason"].get<std::string>();
    }
  }
  if (trim(text).empty()) throw EmptyCompletion("model returned no content");
  ChatCompletion out;
  out.text = std::move(text);
  out.metadata = {{"backend", "http"},
                  {"model", body.value("model", request.value("model", ""))},
                  {"usage", body.value("usage", nlohmann::json::object())},
                  {"finish_reason", finish_reason},
                  {"latency_ms", response.latency.count()},
                  {"attempts", response.attempts}};
  return out;
}

ChatCompletion EchoChatBackend::complete(const nlohmann::json& request) {
  const auto& messages = request.at("messages");
  if (messages.empty()) throw EmptyCompletion("echo backend received no messages");
  ChatCompletion out;
  out.text = messages.back().at("content").get<std::string>();
  out.metadata = {{"backend", "echo"}, {"model", request.value("model", "")}};
  return out;
}

std::unique_ptr<ChatBackend> make_chat_backend(const EndpointConfig& endpoint,
                                               std::shared_ptr<RequestBudget> budget) {
  if (endpoint.base_url.rfind("echo://", 0) == 0) return std::make_unique<EchoChatBackend>();
  if (!endpoint.is_remote()) {
    throw std::invalid_argument("unsupported chat endpoint: " + endpoint.base_url);
  }
  return std::make_unique<HttpChatBackend>(endpoint, std::move(budget));
}

// ---------------------------------------------------------------------------
// Materials

nlohmann::json to_json(const GeneratedMaterial& m) {
  return {{"run_id", m.run_id},
          {"profile_id", m.profile_id},
          {"config_label", m.config_label},
          {"bundle_hash", m.bundle_hash},
          {"text", m.text},
          {"created_at", m.created_at},
          {"endpoint_metadata", m.endpoint_metadata},
          {"profile_summary", m.profile_summary}};
}

GeneratedMaterial material_from_json(const nlohmann::json& j) {
  GeneratedMaterial m;
  m.run_id = j.at("run_id").get<std::string>();
  m.profile_id = j.at("profile_id").get<std::string>();
  m.config_label = j.at("config_label").get<std::string>();
  m.bundle_hash = j.value("bundle_hash", "");
  m.text = j.at("text").get<std::string>();
  m.created_at = j.value("created_at", "");
  m.endpoint_metadata = j.value("endpoint_metadata", nlohmann::json::object());
  m.profile_summary = j.value("profile_summary", "");
  return m;
}

std::vector<GeneratedMaterial> load_run(const std::filesystem::path& path) {
  std::vector<GeneratedMaterial> out;
  for (const auto& line : read_lines(path)) {
    try {
      out.push_back(material_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception&) {
      continue;
    }
  }
  return out;
}

GeneratedMaterial generate(const PromptBundle& bundle, const GenerationConfig& config,
                           ChatBackend& backend) {
  const auto request = chat_request(bundle, config);
  auto completion = backend.complete(request);
  if (trim(completion.text).empty()) throw EmptyCompletion("model returned no content");
  GeneratedMaterial m;
  m.config_label = config.label;
  m.bundle_hash = bundle_hash(bundle);
  m.text = std::move(completion.text);
  m.created_at = utc_timestamp();
  m.endpoint_metadata = std::move(completion.metadata);
  m.endpoint_metadata["temperature"] = config.temperature;
  return m;
}

GeneratedMaterial generate(const PromptBundle& bundle, const GenerationConfig& config,
                           const EndpointConfig& endpoint) {
  auto backend = make_chat_backend(endpoint);
  return generate(bundle, config, *backend);
}

// ---------------------------------------------------------------------------
// Experiment runner

namespace {

std::string fresh_run_id() {
  static std::atomic<unsigned> counter{0};
  const auto ticks = std::chrono::steady_clock::now().time_since_epoch().count();
  return "run-" + sha256_hex(utc_timestamp() + std::to_string(ticks) + std::to_string(counter++))
                      .substr(0, 12);
}

}  // namespace

RunArtifacts run_experiment(const std::vector<PatientProfile>& profiles,
                            const std::vector<GenerationConfig>& configs,
                            const vectorstore::Index* index, embedder::Embedder* embedder,
                            ChatBackend& chat, const std::filesystem::path& out_path,
                            const RunOptions& options) {
  if (profiles.empty() || configs.empty()) {
    throw std::invalid_argument("run_experiment needs at least one profile and one config");
  }
  const bool needs_retrieval = std::any_of(configs.begin(), configs.end(),
                                           [](const auto& c) { return c.mode != Mode::NRAG; });
  if (needs_retrieval && (index == nullptr || embedder == nullptr)) {
    throw std::invalid_argument("RAG configurations need an index and an embedder");
  }

  RunArtifacts art;
  art.out_path = out_path;
  const auto existing = load_run(out_path);
  std::set<std::pair<std::string, std::string>> done;
  for (const auto& m : existing) done.emplace(m.profile_id, m.config_label);
  art.run_id = options.run_id.value_or(existing.empty() ? fresh_run_id() : existing.front().run_id);

  struct Pair {
    const PatientProfile* profile;
    const GenerationConfig* config;
  };
  std::vector<Pair> pending;
  for (const auto& p : profiles) {
    for (const auto& c : configs) {
      if (done.count({p.profile_id, c.label}) != 0) {
        ++art.skipped;
      } else {
        pending.push_back({&p, &c});
      }
    }
  }

  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + out_path.string() + " for append");
  {
    // A torn last line must not swallow the next record.
    std::ifstream probe(out_path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) {
      probe.seekg(-1, std::ios::end);
      if (static_cast<char>(probe.get()) != '\n') out << '\n';
    }
  }

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> retrievals{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const auto& [profile, config] = pending[i];
      try {
        std::vector<vectorstore::SectionHit> hits;
        if (config->mode != Mode::NRAG) {
          const auto query = embedder->embed_one(build_user_query(*profile));
          hits = index->search(query, config->k, config->max_distance);
          ++retrievals;
        }
        const auto bundle = assemble_prompt(*profile, hits, config->mode, options.system_prompt);
        auto material = generate(bundle, *config, chat);
        material.run_id = art.run_id;
        material.profile_id = profile->profile_id;
        material.profile_summary = render_profile(*profile);
        const auto line = to_json(material).dump() + "\n";
        std::lock_guard lock(mutex);
        out << line;
        out.flush();
        ++art.generated;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        art.failures.push_back({profile->profile_id, config->label, e.what()});
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.parallelism, 1, pending.size() + 1);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers && w < pending.size(); ++w) pool.emplace_back(worker);
    worker();
  }
  out.close();
  art.retrievals = retrievals;

  std::sort(art.failures.begin(), art.failures.end(), [](const auto& a, const auto& b) {
    return std::tie(a.profile_id, a.config_label) < std::tie(b.profile_id, b.config_label);
  });
  if (!pending.empty() && art.generated == 0) {
    std::string msg = "all " + std::to_string(pending.size()) + " pairs failed";
    if (!art.failures.empty()) msg += "; first: " + art.failures.front().error;
    throw ExperimentFailed(msg);
  }
  art.records = load_run(out_path);
  return art;
}

}  // namespace ragmat::pipeline

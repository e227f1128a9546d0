#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ragmat/endpoint.hpp"

namespace ragmat::config {

inline constexpr const char* kApiKeyEnv = "RAGMAT_API_KEY";

struct AppConfig {
  std::string embedding_base_url = "mock://64";
  std::string embedding_model = "text-embedding-3-small";
  std::string chat_base_url = "https://api.openai.com";
  std::string chat_model = "gpt-4o";

  std::size_t k = 7;
  double max_distance = 0.40;
  std::size_t chunk_size = 1000;
  double temperature = 0.0;

  int max_attempts = 3;
  long backoff_ms = 500;
  double timeout_s = 30.0;
  std::size_t max_in_flight = 4;

  std::string corpus_path = "corpus";
  std::string index_path = "index";
  std::string runs_path = "runs";
  std::string scores_path = "scores/scores.jsonl";
  std::string cache_dir = ".ragmat-cache";
  std::string system_prompt_file;
};

/// Flat "key = value" lines; '#' or ';' start comments, [section] headers are
/// ignored. Throws ConfigError listing every unknown key or bad value.
std::map<std::string, std::string> parse_ini(std::string_view text);

/// Apply key/value overrides on top of `base`. Throws ConfigError.
AppConfig apply(AppConfig base, const std::map<std::string, std::string>& values);

AppConfig load(const std::filesystem::path& path, AppConfig base = {});

/// Range checks on every field. Throws ConfigError.
void validate(const AppConfig& config);

nlohmann::json to_json(const AppConfig& config);

/// Endpoint settings for the embedding / chat services. The API key is read
/// from RAGMAT_API_KEY; remote endpoints without it raise ConfigError.
EndpointConfig embedding_endpoint(const AppConfig& config);
EndpointConfig chat_endpoint(const AppConfig& config);

/// Provenance record written next to every output file as
/// "<output>.manifest.json".
struct RunManifest {
  std::string run_id;
  std::string command;
  std::string config_hash;
  std::string input_hash;
  std::string started_at;
  std::string finished_at;
  std::string version;
};

std::string version();

/// SHA-256 over every regular file below `path` (sorted relative paths and
/// contents), or over the file itself.
std::string hash_inputs(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& output);
void write_manifest(const std::filesystem::path& output, const RunManifest& manifest);
nlohmann::json to_json(const RunManifest& manifest);

}  // namespace ragmat::config

#include "ragmat/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <vector>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

#ifndef RAGMAT_VERSION
#define RAGMAT_VERSION "0.0.0"
#endif

namespace ragmat::config {

std::map<std::string, std::string> parse_ini(std::string_view text) {
  std::map<std::string, std::string> out;
  std::vector<std::string> errors;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out[key] = value;
  }
  if (!errors.empty()) throw ConfigError(errors);
  return out;
}

namespace {

template <typename T>
bool parse_number(const std::string& text, T& out) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      out = static_cast<T>(std::stod(text, &used));
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!text.empty() && text[0] == '-') return false;
      out = static_cast<T>(std::stoull(text, &used));
    } else {
      out = static_cast<T>(std::stoll(text, &used));
    }
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

AppConfig apply(AppConfig c, const std::map<std::string, std::string>& values) {
  using Setter = std::function<bool(const std::string&)>;
  auto str = [](std::string& field) -> Setter {
    return [&field](const std::string& v) { field = v; return true; };
  };
  auto num = [](auto& field) -> Setter {
    return [&field](const std::string& v) { return parse_number(v, field); };
  };
  const std::map<std::string, Setter> setters = {
      {"embedding_base_url", str(c.embedding_base_url)},
      {"embedding_model", str(c.embedding_model)},
      {"chat_base_url", str(c.chat_base_url)},
      {"chat_model", str(c.chat_model)},
      {"k", num(c.k)},
      {"max_distance", num(c.max_distance)},
      {"chunk_size", num(c.chunk_size)},
      {"temperature", num(c.temperature)},
      {"max_attempts", num(c.max_attempts)},
      {"backoff_ms", num(c.backoff_ms)},
      {"timeout_s", num(c.timeout_s)},
      {"max_in_flight", num(c.max_in_flight)},
      {"corpus_path", str(c.corpus_path)},
      {"index_path", str(c.index_path)},
      {"runs_path", str(c.runs_path)},
      {"scores_path", str(c.scores_path)},
      {"cache_dir", str(c.cache_dir)},
      {"system_prompt_file", str(c.system_prompt_file)},
  };
  std::vector<std::string> errors;
  for (const auto& [key, value] : values) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      errors.push_back(key + ": unknown key");
    } else if (!it->second(value)) {
      errors.push_back(key + ": cannot parse '" + value + "'");
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

AppConfig load(const std::filesystem::path& path, AppConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError({"config: " + std::string(e.what())});
  }
  return config::apply(std::move(base), parse_ini(text));
}

void validate(const AppConfig& c) {
  std::vector<std::string> errors;
  if (c.k < 1) errors.push_back("k: must be >= 1");
  if (!(c.max_distance >= 0.0 && c.max_distance <= 2.0)) errors.push_back("max_distance: must lie in [0, 2]");
  if (c.chunk_size < 1) errors.push_back("chunk_size: must be >= 1");
  if (!(c.temperature >= 0.0)) errors.push_back("temperature: must be >= 0");
  if (c.max_attempts < 1) errors.push_back("max_attempts: must be >= 1");
  if (c.backoff_ms < 0) errors.push_back("backoff_ms: must be >= 0");
  if (!(c.timeout_s > 0.0)) errors.push_back("timeout_s: must be > 0");
  if (c.max_in_flight < 1 || c.max_in_flight > static_cast<std::size_t>(RequestBudget::kMaxLimit)) {
    errors.push_back("max_in_flight: must lie in [1, 256]");
  }
  if (c.embedding_model.empty()) errors.push_back("embedding_model: must not be empty");
  if (c.chat_model.empty()) errors.push_back("chat_model: must not be empty");
  if (!errors.empty()) throw ConfigError(errors);
}

nlohmann::json to_json(const AppConfig& c) {
  return {{"embedding_base_url", c.embedding_base_url},
          {"embedding_model", c.embedding_model},
          {"chat_base_url", c.chat_base_url},
          {"chat_model", c.chat_model},
          {"k", c.k},
          {"max_distance", c.max_distance},
          {"chunk_size", c.chunk_size},
          {"temperature", c.temperature},
          {"max_attempts", c.max_attempts},
          {"backoff_ms", c.backoff_ms},
          {"timeout_s", c.timeout_s},
          {"max_in_flight", c.max_in_flight},
          {"corpus_path", c.corpus_path},
          {"index_path", c.index_path},
          {"runs_path", c.runs_path},
          {"scores_path", c.scores_path},
          {"cache_dir", c.cache_dir},
          {"system_prompt_file", c.system_prompt_file}};
}

namespace {

EndpointConfig endpoint_for(const AppConfig& c, const std::string& url) {
  EndpointConfig e;
  e.base_url = url;
  e.max_attempts = c.max_attempts;
  e.initial_backoff = std::chrono::milliseconds(c.backoff_ms);
  e.timeout = std::chrono::milliseconds(static_cast<long>(c.timeout_s * 1000.0));
  if (e.is_remote()) {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
      throw ConfigError({std::string(kApiKeyEnv) + ": required for remote endpoint " + url});
    }
    e.api_key = key;
  }
  return e;
}

}  // namespace

EndpointConfig embedding_endpoint(const AppConfig& c) { return endpoint_for(c, c.embedding_base_url); }
EndpointConfig chat_endpoint(const AppConfig& c) { return endpoint_for(c, c.chat_base_url); }

std::string version() { return RAGMAT_VERSION; }

std::string hash_inputs(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) return sha256_hex("");
  if (fs::is_regular_file(path)) return sha256_hex(read_file(path));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string material;
  for (const auto& f : files) {
    material += fs::relative(f, path).generic_string() + "\n" + sha256_hex(read_file(f)) + "\n";
  }
  return sha256_hex(material);
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},         {"command", m.command},
          {"config_hash", m.config_hash}, {"input_hash", m.input_hash},
          {"started_at", m.started_at},   {"finished_at", m.finished_at},
          {"version", m.version}};
}

void write_manifest(const std::filesystem::path& output, const RunManifest& manifest) {
  write_file_atomic(manifest_path(output), to_json(manifest).dump(2) + "\n");
}

}  // namespace ragmat::config

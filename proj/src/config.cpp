#include "owdisc/config.hpp"

#include <charconv>
#include <set>
#include <string>

#include "owdisc/errors.hpp"
#include "owdisc/io.hpp"

namespace owdisc {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "tau",        "lambda",          "temperature",       "iterations",           "batch_size",
      "lr_head",    "lr_adapter",      "seed",              "kmeans_max_iter",      "kmeans_tol",
      "kmeans_restarts", "adapter_kind", "full_set_regularizer", "supervised_full_softmax"};
  return keys;
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("config '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("config '" + key + "': cannot parse '" + text + "' as a non-negative integer");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("config '" + key + "': expected true/false, got '" + text + "'");
}

template <typename T>
T json_get(const nlohmann::json& object, const std::string& key) {
  try {
    return object.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + key + "': " + e.what());
  }
}

std::size_t json_unsigned(const nlohmann::json& object, const std::string& key) {
  const auto& value = object.at(key);
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw ValidationError("config '" + key + "': expected a non-negative integer");
  }
  return value.get<std::size_t>();
}

void apply_override(DiscoveryConfig& config, const std::string& key, const std::string& value) {
  if (key == "tau") config.tau = parse_double(key, value);
  else if (key == "lambda") config.lambda = parse_double(key, value);
  else if (key == "temperature") config.temperature = parse_double(key, value);
  else if (key == "iterations") config.iterations = parse_unsigned(key, value);
  else if (key == "batch_size") config.batch_size = parse_unsigned(key, value);
  else if (key == "lr_head") config.lr_head = parse_double(key, value);
  else if (key == "lr_adapter") config.lr_adapter = parse_double(key, value);
  else if (key == "seed") config.seed = parse_unsigned(key, value);
  else if (key == "kmeans_max_iter") config.kmeans_max_iter = parse_unsigned(key, value);
  else if (key == "kmeans_tol") config.kmeans_tol = parse_double(key, value);
  else if (key == "kmeans_restarts") config.kmeans_restarts = parse_unsigned(key, value);
  else if (key == "adapter_kind") config.adapter_kind = parse_adapter_kind(value);
  else if (key == "full_set_regularizer") config.full_set_regularizer = parse_bool(key, value);
  else if (key == "supervised_full_softmax") config.supervised_full_softmax = parse_bool(key, value);
  else throw ValidationError("unknown config key '" + key + "'");
}

}  // namespace

std::string_view to_string(AdapterKind kind) {
  return kind == AdapterKind::None ? "none" : "linear-residual";
}

AdapterKind parse_adapter_kind(std::string_view text) {
  if (text == "none") return AdapterKind::None;
  if (text == "linear-residual" || text == "linear") return AdapterKind::LinearResidual;
  throw ValidationError("unknown adapter kind '" + std::string(text) + "' (expected none or linear-residual)");
}

void DiscoveryConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1), got " + std::to_string(tau));
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0, got " + std::to_string(lambda));
  if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(lr_head >= 0.0)) throw ValidationError("lr_head must be >= 0");
  if (!(lr_adapter >= 0.0)) throw ValidationError("lr_adapter must be >= 0");
  if (kmeans_max_iter == 0) throw ValidationError("kmeans_max_iter must be positive");
  if (!(kmeans_tol >= 0.0)) throw ValidationError("kmeans_tol must be >= 0");
  if (kmeans_restarts == 0) throw ValidationError("kmeans_restarts must be positive");
}

DiscoveryConfig config_from_json(const nlohmann::json& object, const ConfigOverrides& overrides) {
  if (!object.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!known_keys().contains(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  DiscoveryConfig config;
  if (object.contains("tau")) config.tau = json_get<double>(object, "tau");
  if (object.contains("lambda")) config.lambda = json_get<double>(object, "lambda");
  if (object.contains("temperature")) config.temperature = json_get<double>(object, "temperature");
  if (object.contains("iterations")) config.iterations = json_unsigned(object, "iterations");
  if (object.contains("batch_size")) config.batch_size = json_unsigned(object, "batch_size");
  if (object.contains("lr_head")) config.lr_head = json_get<double>(object, "lr_head");
  if (object.contains("lr_adapter")) config.lr_adapter = json_get<double>(object, "lr_adapter");
  if (object.contains("seed")) config.seed = json_unsigned(object, "seed");
  if (object.contains("kmeans_max_iter")) config.kmeans_max_iter = json_unsigned(object, "kmeans_max_iter");
  if (object.contains("kmeans_tol")) config.kmeans_tol = json_get<double>(object, "kmeans_tol");
  if (object.contains("kmeans_restarts")) config.kmeans_restarts = json_unsigned(object, "kmeans_restarts");
  if (object.contains("adapter_kind")) {
    config.adapter_kind = parse_adapter_kind(json_get<std::string>(object, "adapter_kind"));
  }
  if (object.contains("full_set_regularizer")) {
    config.full_set_regularizer = json_get<bool>(object, "full_set_regularizer");
  }
  if (object.contains("supervised_full_softmax")) {
    config.supervised_full_softmax = json_get<bool>(object, "supervised_full_softmax");
  }
  for (const auto& [key, value] : overrides) apply_override(config, key, value);
  config.validate();
  return config;
}

DiscoveryConfig load_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& overrides) {
  nlohmann::json object = nlohmann::json::object();
  if (path) {
    try {
      object = nlohmann::json::parse(read_text_file(*path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path->string() + ": " + e.what());
    }
  }
  return config_from_json(object, overrides);
}

void to_json(nlohmann::json& out, const DiscoveryConfig& config) {
  out = {{"tau", config.tau},
         {"lambda", config.lambda},
         {"temperature", config.temperature},
         {"iterations", config.iterations},
         {"batch_size", config.batch_size},
         {"lr_head", config.lr_head},
         {"lr_adapter", config.lr_adapter},
         {"seed", config.seed},
         {"kmeans_max_iter", config.kmeans_max_iter},
         {"kmeans_tol", config.kmeans_tol},
         {"kmeans_restarts", config.kmeans_restarts},
         {"adapter_kind", std::string(to_string(config.adapter_kind))},
         {"full_set_regularizer", config.full_set_regularizer},
         {"supervised_full_softmax", config.supervised_full_softmax}};
}

}  // namespace owdisc

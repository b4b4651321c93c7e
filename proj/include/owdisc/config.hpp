#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace owdisc {

enum class AdapterKind { None, LinearResidual };

std::string_view to_string(AdapterKind kind);
AdapterKind parse_adapter_kind(std::string_view text);

/// Hyperparameters for every stage of discovery.
///
/// Defaults: tau 0.3, lambda 0.1, batch 32, 1000 iterations, SGD learning
/// rates 0.001 (classifier) and 0.0001 (adapter).
struct DiscoveryConfig {
  double tau = 0.3;
  double lambda = 0.1;
  double temperature = 0.1;
  std::size_t iterations = 1000;
  std::size_t batch_size = 32;
  double lr_head = 0.001;
  double lr_adapter = 0.0001;
  std::uint64_t seed = 0;
  std::size_t kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  std::size_t kmeans_restarts = 10;
  AdapterKind adapter_kind = AdapterKind::LinearResidual;
  // Estimate the mean prediction of the regularizer over the whole target set
  // instead of the current mini-batch.
  bool full_set_regularizer = false;
  // Let the supervised loss normalize over every classifier column instead of
  // the seen columns only.
  bool supervised_full_softmax = false;

  // Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const DiscoveryConfig&, const DiscoveryConfig&) = default;
};

using ConfigOverrides = std::map<std::string, std::string>;

// Unknown keys are rejected. Overrides are applied after the file.
DiscoveryConfig config_from_json(const nlohmann::json& object, const ConfigOverrides& overrides = {});
DiscoveryConfig load_config(const std::optional<std::filesystem::path>& path,
                            const ConfigOverrides& overrides = {});

void to_json(nlohmann::json& out, const DiscoveryConfig& config);

}  // namespace owdisc

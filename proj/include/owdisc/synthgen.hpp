#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "owdisc/embedding.hpp"

namespace owdisc {

/// Parameters of a synthetic categorical- and domain-shift scenario.
///
/// Seen classes use ids [0, seen_count), novel classes
/// [seen_count, seen_count + novel_count). The last `source_private_count`
/// seen classes appear in the source only.
struct Scenario {
  std::size_t dim = 64;
  std::size_t seen_count = 10;
  std::size_t novel_count = 5;
  std::size_t samples_per_class = 200;
  double noise_sigma = 0.05;
  double target_noise_scale = 1.0;
  double shift_angle_degrees = 10.0;
  double min_angle_degrees = 25.0;
  std::vector<std::uint32_t> bimodal_classes;
  double bimodal_angle_degrees = 60.0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> overlap_pairs;
  double overlap_angle_degrees = 2.0;
  std::size_t source_private_count = 0;
  std::uint64_t seed = 7;

  // Number of distinct classes present in the target.
  std::size_t target_class_count() const noexcept {
    return seen_count - source_private_count + novel_count;
  }
};

struct ScenarioData {
  EmbeddingSet source;  // labeled
  EmbeddingSet target;  // unlabeled
  Labels target_truth;
  Eigen::MatrixXd class_means;         // (seen + novel) x d, source domain
  Eigen::MatrixXd target_class_means;  // rotated into the target domain
};

// Throws ValidationError for unsatisfiable parameters.
ScenarioData generate(const Scenario& scenario);

// "s1", "s2", "s1-closed", "s1-partial", "s1-open", "s1-open-partial", "bimodal-overlap".
Scenario preset(std::string_view name);
std::vector<std::string> preset_names();

void to_json(nlohmann::json& out, const Scenario& scenario);

}  // namespace owdisc

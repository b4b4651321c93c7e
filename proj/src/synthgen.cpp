#include "owdisc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "owdisc/errors.hpp"

namespace owdisc {
namespace {

constexpr std::size_t kMaxRejections = 10000;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

Eigen::VectorXd random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  } while (!(v.norm() > 1e-12));
  return v.normalized();
}

// Unit vector orthogonal to `axis`.
Eigen::VectorXd random_orthogonal(const Eigen::VectorXd& axis, std::mt19937_64& rng) {
  while (true) {
    Eigen::VectorXd v = random_unit(static_cast<std::size_t>(axis.size()), rng);
    v -= v.dot(axis) * axis;
    if (v.norm() > 1e-6) return v.normalized();
  }
}

Eigen::VectorXd tilt(const Eigen::VectorXd& axis, const Eigen::VectorXd& direction, double angle) {
  return (std::cos(angle) * axis + std::sin(angle) * direction).normalized();
}

// Rotation by `angle` in the plane spanned by orthonormal u, v.
Eigen::VectorXd rotate(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& v, double angle) {
  const double a = u.dot(x), b = v.dot(x);
  const double c = std::cos(angle), s = std::sin(angle);
  return x + (a * (c - 1.0) - b * s) * u + (a * s + b * (c - 1.0)) * v;
}

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

// A class is a mixture of one or two unit "modes".
using Modes = std::vector<Eigen::VectorXd>;

void validate(const Scenario& s) {
  if (s.seen_count < 2) throw ValidationError("scenario needs at least 2 seen classes");
  if (s.dim < 2) throw ValidationError("scenario dimension must be at least 2");
  if (s.samples_per_class == 0) throw ValidationError("samples_per_class must be positive");
  if (s.source_private_count >= s.seen_count) {
    throw ValidationError("source_private_count must leave at least one shared class");
  }
  if (!(s.noise_sigma >= 0.0) || !(s.target_noise_scale >= 0.0)) throw ValidationError("noise must be non-negative");
  for (auto c : s.bimodal_classes) {
    if (c >= s.seen_count) throw ValidationError("bimodal class " + std::to_string(c) + " is not a seen class");
  }
  for (auto [a, b] : s.overlap_pairs) {
    if (a >= s.seen_count || b >= s.seen_count || a == b) {
      throw ValidationError("overlap pair (" + std::to_string(a) + ", " + std::to_string(b) + ") is invalid");
    }
  }
}

std::vector<Modes> sample_class_modes(const Scenario& s, std::mt19937_64& rng, Eigen::MatrixXd& means) {
  const std::size_t classes = s.seen_count + s.novel_count;
  const double min_angle = radians(s.min_angle_degrees);
  std::vector<std::int64_t> overlap_partner(classes, -1);
  for (auto [a, b] : s.overlap_pairs) overlap_partner[std::max(a, b)] = std::min(a, b);
  auto is_bimodal = [&](std::size_t c) {
    return std::find(s.bimodal_classes.begin(), s.bimodal_classes.end(), c) != s.bimodal_classes.end();
  };

  std::vector<Modes> modes(classes);
  means.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(s.dim));
  for (std::size_t c = 0; c < classes; ++c) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxRejections && !placed; ++attempt) {
      Eigen::VectorXd mean;
      if (overlap_partner[c] >= 0) {
        const Eigen::VectorXd& base = means.row(overlap_partner[c]).transpose();
        mean = tilt(base, random_orthogonal(base, rng), radians(s.overlap_angle_degrees));
      } else {
        mean = random_unit(s.dim, rng);
      }
      Modes candidate;
      if (is_bimodal(c)) {
        const Eigen::VectorXd offset = random_orthogonal(mean, rng);
        const double half = radians(s.bimodal_angle_degrees) / 2.0;
        candidate = {tilt(mean, offset, half), tilt(mean, -offset, half)};
      } else {
        candidate = {mean};
      }
      placed = true;
      for (std::size_t prev = 0; prev < c && placed; ++prev) {
        if (overlap_partner[c] == static_cast<std::int64_t>(prev)) continue;
        for (const auto& m : candidate) {
          for (const auto& other : modes[prev]) {
            if (angle_between(m, other) < min_angle) placed = false;
          }
        }
      }
      if (placed) {
        modes[c] = std::move(candidate);
        means.row(static_cast<Eigen::Index>(c)) = mean.transpose();
      }
    }
    if (!placed) {
      throw ValidationError("cannot place class " + std::to_string(c) + " with a minimum separation of " +
                            std::to_string(s.min_angle_degrees) + " degrees in dimension " + std::to_string(s.dim));
    }
  }
  return modes;
}

void draw_samples(const Modes& modes, std::size_t count, double sigma, std::uint32_t label, std::mt19937_64& rng,
                  std::vector<Eigen::VectorXd>& rows, Labels& labels) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd& mode = modes[i % modes.size()];
    Eigen::VectorXd x = mode;
    if (sigma > 0.0) {
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += sigma * normal(rng);
      x.normalize();
    }
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
}

FloatMatrix stack(const std::vector<Eigen::VectorXd>& rows, const std::vector<std::size_t>& order, std::size_t dim) {
  FloatMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < order.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[order[r]].cast<float>().transpose();
  return out;
}

}  // namespace

ScenarioData generate(const Scenario& scenario) {
  validate(scenario);
  std::mt19937_64 rng(scenario.seed);
  ScenarioData data;
  const std::vector<Modes> modes = sample_class_modes(scenario, rng, data.class_means);

  const Eigen::VectorXd u = random_unit(scenario.dim, rng);
  const Eigen::VectorXd v = random_orthogonal(u, rng);
  const double shift = radians(scenario.shift_angle_degrees);
  std::vector<Modes> shifted = modes;
  for (auto& class_modes : shifted) {
    for (auto& m : class_modes) m = rotate(m, u, v, shift).normalized();
  }
  data.target_class_means = data.class_means;
  for (Eigen::Index c = 0; c < data.class_means.rows(); ++c) {
    data.target_class_means.row(c) = rotate(data.class_means.row(c).transpose(), u, v, shift).normalized().transpose();
  }

  std::vector<Eigen::VectorXd> source_rows, target_rows;
  Labels source_labels, target_labels;
  for (std::size_t c = 0; c < scenario.seen_count; ++c) {
    draw_samples(modes[c], scenario.samples_per_class, scenario.noise_sigma, static_cast<std::uint32_t>(c), rng,
                 source_rows, source_labels);
  }
  const std::size_t shared = scenario.seen_count - scenario.source_private_count;
  const double target_sigma = scenario.noise_sigma * scenario.target_noise_scale;
  for (std::size_t c = 0; c < scenario.seen_count + scenario.novel_count; ++c) {
    if (c >= shared && c < scenario.seen_count) continue;
    draw_samples(shifted[c], scenario.samples_per_class, target_sigma, static_cast<std::uint32_t>(c), rng,
                 target_rows, target_labels);
  }

  auto shuffled = [&](std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  };
  const auto source_order = shuffled(source_rows.size());
  const auto target_order = shuffled(target_rows.size());
  Labels ordered_source(source_order.size()), ordered_target(target_order.size());
  for (std::size_t i = 0; i < source_order.size(); ++i) ordered_source[i] = source_labels[source_order[i]];
  for (std::size_t i = 0; i < target_order.size(); ++i) ordered_target[i] = target_labels[target_order[i]];

  data.source = EmbeddingSet(stack(source_rows, source_order, scenario.dim), std::move(ordered_source));
  data.target = EmbeddingSet(stack(target_rows, target_order, scenario.dim));
  data.target_truth = std::move(ordered_target);
  return data;
}

Scenario preset(std::string_view name) {
  Scenario s;  // defaults are the s1 scenario
  if (name == "s1") return s;
  if (name == "s2") {
    s.noise_sigma = 0.15;
    s.shift_angle_degrees = 25.0;
    s.seed = 11;
    return s;
  }
  if (name == "s1-closed") {
    s.novel_count = 0;
    return s;
  }
  if (name == "s1-partial") {
    s.source_private_count = 5;
    s.novel_count = 0;
    return s;
  }
  if (name == "s1-open") return s;
  if (name == "s1-open-partial") {
    s.seen_count = 9;
    s.source_private_count = 3;
    s.novel_count = 3;
    return s;
  }
  if (name == "bimodal-overlap") {
    s.dim = 16;
    s.seen_count = 3;
    s.novel_count = 2;
    s.bimodal_classes = {0};
    s.overlap_pairs = {{1, 2}};
    s.seed = 3;
    return s;
  }
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"s1", "s2", "s1-closed", "s1-partial", "s1-open", "s1-open-partial", "bimodal-overlap"};
}

void to_json(nlohmann::json& out, const Scenario& s) {
  out = {{"dim", s.dim},
         {"seen_count", s.seen_count},
         {"novel_count", s.novel_count},
         {"samples_per_class", s.samples_per_class},
         {"noise_sigma", s.noise_sigma},
         {"target_noise_scale", s.target_noise_scale},
         {"shift_angle_degrees", s.shift_angle_degrees},
         {"min_angle_degrees", s.min_angle_degrees},
         {"bimodal_classes", s.bimodal_classes},
         {"bimodal_angle_degrees", s.bimodal_angle_degrees},
         {"overlap_pairs", s.overlap_pairs},
         {"overlap_angle_degrees", s.overlap_angle_degrees},
         {"source_private_count", s.source_private_count},
         {"target_class_count", s.target_class_count()},
         {"seed", s.seed}};
}

}  // namespace owdisc

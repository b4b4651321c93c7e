#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <unistd.h>
#include <vector>

#include "owdisc/embedding.hpp"
#include "owdisc/synthgen.hpp"

namespace test {

inline owdisc::FloatMatrix rows(std::initializer_list<std::initializer_list<float>> values) {
  owdisc::FloatMatrix m(static_cast<Eigen::Index>(values.size()),
                        static_cast<Eigen::Index>(values.size() ? values.begin()->size() : 0));
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (float v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Labeled, well-separated blobs without domain shift.
inline owdisc::EmbeddingSet blobs(std::size_t classes, std::size_t per_class, std::size_t dim, double sigma,
                                  std::uint64_t seed) {
  owdisc::Scenario s;
  s.dim = dim;
  s.seen_count = classes;
  s.novel_count = 0;
  s.samples_per_class = per_class;
  s.noise_sigma = sigma;
  s.shift_angle_degrees = 0.0;
  s.seed = seed;
  return owdisc::generate(s).source;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("owdisc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace test

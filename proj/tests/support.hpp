#pragma once

#include <tboost/dataset.hpp>
#include <tboost/triplet_store.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

namespace tboost::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tboost_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Labels-only dataset with labels named "0".."L-1".
inline Dataset labels_only(const std::vector<std::size_t>& labels, std::size_t L) {
  std::vector<std::string> names;
  for (std::size_t y = 0; y < L; ++y) names.push_back(std::to_string(y));
  return Dataset(LabelDict(names), labels);
}

/// Random store over n examples: each (i, {j, k}) candidate, anchors included,
/// is present with probability `density` in a random orientation.
inline TripletStore random_store(std::size_t n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density), flip(0.5);
  std::vector<Triplet> ts;
  for (Id i = 0; i < n; ++i)
    for (Id j = 0; j < n; ++j)
      for (Id k = j + 1; k < n; ++k)
        if (keep(rng)) ts.push_back(flip(rng) ? Triplet{i, j, k} : Triplet{i, k, j});
  return TripletStore(n, std::move(ts));
}

} // namespace tboost::testing

#ifndef MARGIN_FORGE_TESTS_FIXTURES_HPP
#define MARGIN_FORGE_TESTS_FIXTURES_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dual_oracle.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/random.hpp"

namespace margin_forge::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mf") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

/// n points uniform in [-1, 1]^dim with random labels, both classes present.
inline Dataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  Dataset data;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const bool positive = i == 0 ? true : (i == 1 ? false : rng.bernoulli(0.5));
    data.push_back({FeatureVector::dense(x), positive ? Label::positive() : Label::negative()});
  }
  return data;
}

inline OracleProblem to_oracle(const Dataset& data, double c, OracleKernel kernel, double gamma = 1.0) {
  OracleProblem p;
  p.c = c;
  p.kernel = kernel;
  p.gamma = gamma;
  for (const auto& ex : data) {
    p.x.push_back(ex.x.to_dense());
    p.y.push_back(ex.y.as_double());
  }
  return p;
}

}  // namespace margin_forge::testing

#endif  // MARGIN_FORGE_TESTS_FIXTURES_HPP

#pragma once

#include <unistd.h>

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "causal_probe/backend.hpp"
#include "causal_probe/types.hpp"

namespace test_support {

inline std::filesystem::path source_dir() { return CAUSAL_PROBE_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "fixtures" / "yelp-mini"; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cp") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Random point on the probability simplex, occasionally with exact zeros.
template <typename Gen>
causal_probe::LabelDistribution random_distribution(Gen& gen) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_int_distribution<int> coin(0, 3);
  std::array<double, causal_probe::kNumLabels> w{};
  double sum = 0.0;
  for (auto& x : w) {
    x = coin(gen) == 0 ? 0.0 : e(gen);
    sum += x;
  }
  if (sum == 0.0) {
    w[0] = 1.0;
    sum = 1.0;
  }
  for (auto& x : w) x /= sum;
  return causal_probe::validate_distribution(w);
}

/// 100 records, 20 per gold label: a softened one-hot (1-s)*onehot + s*uniform
/// with s = 0.61 + 0.02*j, then +0.3 mass on label 3 and renormalized. For
/// s > 0.7 the bias wins the argmax, so 15 of every 20 non-3 records read as 3.
struct BiasFixture {
  std::vector<causal_probe::LabelDistribution> raws;
  std::vector<causal_probe::RatingLabel> golds;
};

inline BiasFixture label3_bias_fixture() {
  BiasFixture f;
  for (int g = 1; g <= 5; ++g) {
    for (int j = 0; j < 20; ++j) {
      const double s = 0.61 + 0.02 * j;
      std::array<double, causal_probe::kNumLabels> w{};
      for (auto& x : w) x = s / 5.0;
      w[g - 1] += 1.0 - s;
      w[2] += 0.3;
      for (auto& x : w) x /= 1.3;
      f.raws.push_back(causal_probe::validate_distribution(w));
      f.golds.emplace_back(g);
    }
  }
  return f;
}

/// Backend answering from a callback; counts calls through Backend::complete.
class FakeBackend final : public causal_probe::Backend {
 public:
  using Fn = std::function<causal_probe::CompletionResponse(const causal_probe::CompletionRequest&)>;
  explicit FakeBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string id() const override { return "fake"; }
  std::atomic<int> calls{0};

 protected:
  causal_probe::CompletionResponse do_complete(const causal_probe::CompletionRequest& req) override {
    ++calls;
    return fn_(req);
  }

 private:
  Fn fn_;
};

}  // namespace test_support

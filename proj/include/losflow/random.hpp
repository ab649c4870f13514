#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace losflow {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named stochastic component. Adding components never shifts the
/// seeds of existing paths, which keeps common random numbers stable.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component_path);

/// Stateless uniform in [0,1) keyed by (seed, a, b). Used where draws must not
/// depend on the order in which they are requested.
double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Thin wrapper over mt19937_64 with the handful of draws the library needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// 53-bit uniform in [0,1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0);
  double exponential(double rate);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace losflow
